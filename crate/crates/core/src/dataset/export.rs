//! Labeled datasets as versioned TSV: record id, feature reference, label.
//! Feature references name the atom(s) or step a vector is computed from,
//! so the vectors themselves can be regenerated or exported separately.

use std::io::Write;

use super::labels::{PairLabel, Prepared, SiteLabel};
use crate::orbchain::MechanisticStep;

pub const LABELS_VERSION: u32 = 1;

fn header(out: &mut impl Write, kind: &str) -> std::io::Result<()> {
    writeln!(out, "#rmech-labels\tv{LABELS_VERSION}\t{kind}")?;
    writeln!(out, "record_id\tfeature_ref\tlabel")
}

pub fn write_site_labels(out: &mut impl Write, p: &Prepared, labels: &[SiteLabel]) -> std::io::Result<()> {
    header(out, "site")?;
    for l in labels {
        let id = &p.records[l.record].id;
        writeln!(out, "{id}\tatom:{}\t{}", l.map, l.label as u8)?;
    }
    Ok(())
}

pub fn write_pair_labels(out: &mut impl Write, p: &Prepared, labels: &[PairLabel]) -> std::io::Result<()> {
    header(out, "pair")?;
    for l in labels {
        let id = &p.records[l.record].id;
        writeln!(out, "{id}\tpair:{}>{}\t{}", l.first, l.second, l.label as u8)?;
    }
    Ok(())
}

/// `steps` holds, per record index, the positive step first and then its
/// negatives.
pub fn write_ranker_labels(out: &mut impl Write, p: &Prepared, steps: &[(usize, MechanisticStep, bool)]) -> std::io::Result<()> {
    header(out, "ranker")?;
    for (ri, s, label) in steps {
        writeln!(out, "{}\tstep:{}\t{}", p.records[*ri].id, s.arrows.canonical(), *label as u8)?;
    }
    Ok(())
}
