//! Supervised targets derived from inferred reactive pairs, and the seeded
//! negative samplers for both training regimes.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusRecord};
use crate::chemgraph::{Category, ExplicitSet, Split};
use crate::featurize::fnv1a;
use crate::neural::derive_seed;
use crate::orbchain::{admissible_pairs, build_step, eligible_sites, infer_reactive_pair, MechanisticStep, ReactivePair};

/// A record whose reactive pair was recovered from its products and arrows.
#[derive(Debug, Clone)]
pub struct LabeledRecord {
    pub id: String,
    pub category: Category,
    pub split: Split,
    pub reactants: Arc<ExplicitSet>,
    pub pair: ReactivePair,
    /// The recorded step, rebuilt from the inferred pair.
    pub step: MechanisticStep,
    /// Reactive sites, arrow-source atom first.
    pub sites: (u32, u32),
    pub heavy_atoms: usize,
}

impl LabeledRecord {
    pub fn eligible_sites(&self) -> Vec<u32> {
        eligible_sites(&self.reactants)
    }

    fn sampling_seed(&self, seed: u64, purpose: u64) -> u64 {
        derive_seed(seed, &[purpose, fnv1a(0, self.id.as_bytes())])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quarantined {
    pub id: String,
    pub source: String,
    pub line: usize,
    pub raw: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Prepared {
    pub records: Vec<LabeledRecord>,
    pub quarantined: Vec<Quarantined>,
}

impl Prepared {
    /// Share of records whose inferred pair reproduces products and arrows.
    pub fn round_trip_rate(&self) -> f64 {
        let n = self.records.len() + self.quarantined.len();
        if n == 0 {
            return 0.0;
        }
        self.records.len() as f64 / n as f64
    }
}

fn label_one(r: &CorpusRecord) -> Result<LabeledRecord, String> {
    let inf = infer_reactive_pair(&r.record).map_err(|e| e.to_string())?;
    Ok(LabeledRecord {
        id: r.id.clone(),
        category: r.record.category,
        split: r.record.split,
        heavy_atoms: r.record.reactants.heavy_atom_count(),
        sites: inf.step.sites,
        reactants: inf.reactants,
        pair: inf.pair,
        step: inf.step,
    })
}

/// Infers the reactive pair of every record. Records that do not round-trip
/// are quarantined, not dropped silently.
pub fn prepare(corpus: &Corpus) -> Prepared {
    let mut out = Prepared::default();
    for r in &corpus.records {
        match label_one(r) {
            Ok(l) => out.records.push(l),
            Err(reason) => {
                tracing::warn!(id = %r.id, source = %r.source, line = r.line, "quarantined: {reason}");
                out.quarantined.push(Quarantined {
                    id: r.id.clone(),
                    source: r.source.clone(),
                    line: r.line,
                    raw: r.raw.clone(),
                    reason,
                });
            }
        }
    }
    out
}

pub fn write_quarantine(path: &Path, q: &[Quarantined]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "#id\tsource\tline\treason\traw")?;
    for x in q {
        writeln!(f, "{}\t{}\t{}\t{}\t{}", x.id, x.source, x.line, x.reason.replace('\t', " "), x.raw)?;
    }
    f.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteLabel {
    pub record: usize,
    pub map: u32,
    pub label: bool,
}

/// One label per eligible site of every record; the reactive sites are the
/// positives (one for a diagonal pair, two otherwise).
pub fn derive_site_labels(p: &Prepared) -> Vec<SiteLabel> {
    let mut out = Vec::new();
    for (ri, r) in p.records.iter().enumerate() {
        for map in r.eligible_sites() {
            out.push(SiteLabel { record: ri, map, label: map == r.sites.0 || map == r.sites.1 });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    First,
    Second,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLabel {
    pub record: usize,
    pub first: u32,
    pub second: u32,
    pub label: bool,
    pub corruption: Option<Corruption>,
}

/// Up to `per_type_max` corrupted pairs of each kind: `(a', a2*)`,
/// `(a1*, a')` and `(a', a'')`, with `a'`, `a''` distinct eligible sites
/// outside the positive pair.
pub fn sample_contrastive_negatives(rec: &LabeledRecord, per_type_max: usize, seed: u64) -> Vec<(u32, u32, Corruption)> {
    let (a1, a2) = rec.sites;
    let others: Vec<u32> = rec.eligible_sites().into_iter().filter(|&m| m != a1 && m != a2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rec.sampling_seed(seed, 2));
    let mut out = Vec::new();
    let mut take = |mut pool: Vec<(u32, u32)>, kind: Corruption, rng: &mut ChaCha8Rng| {
        pool.shuffle(rng);
        out.extend(pool.into_iter().take(per_type_max).map(|(x, y)| (x, y, kind)));
    };
    take(others.iter().map(|&x| (x, a2)).collect(), Corruption::First, &mut rng);
    take(others.iter().map(|&y| (a1, y)).collect(), Corruption::Second, &mut rng);
    let both: Vec<(u32, u32)> =
        others.iter().flat_map(|&x| others.iter().filter(move |&&y| y != x).map(move |&y| (x, y))).collect();
    take(both, Corruption::Both, &mut rng);
    out
}

/// The positive pair of each record followed by its sampled negatives.
pub fn derive_pair_labels(p: &Prepared, per_type_max: usize, seed: u64) -> Vec<PairLabel> {
    let mut out = Vec::new();
    for (ri, r) in p.records.iter().enumerate() {
        out.push(PairLabel { record: ri, first: r.sites.0, second: r.sites.1, label: true, corruption: None });
        for (first, second, c) in sample_contrastive_negatives(r, per_type_max, seed) {
            out.push(PairLabel { record: ri, first, second, label: false, corruption: Some(c) });
        }
    }
    out
}

/// Up to `k_max` distinct implausible steps from the record's reactants,
/// built from randomly drawn orbital pairs other than the reactive one.
pub fn sample_ranker_negatives(rec: &LabeledRecord, k_max: usize, seed: u64) -> Vec<MechanisticStep> {
    let mut pairs = admissible_pairs(&rec.reactants);
    let mut rng = ChaCha8Rng::seed_from_u64(rec.sampling_seed(seed, 1));
    pairs.shuffle(&mut rng);
    let mut seen: BTreeSet<String> = BTreeSet::from([rec.step.key.clone()]);
    let mut out = Vec::new();
    for pair in pairs {
        if out.len() >= k_max {
            break;
        }
        if pair == rec.pair {
            continue;
        }
        let Ok(step) = build_step(&rec.reactants, &pair) else { continue };
        if seen.insert(step.key.clone()) {
            out.push(step);
        }
    }
    out
}
