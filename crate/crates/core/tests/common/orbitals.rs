//! Brute-force oracles for the orbital interaction model.

use std::collections::BTreeSet;
use std::sync::Arc;

use rmech_core::chemgraph::{make_explicit, parse_smiles, write_smiles, ExplicitSet, MoleculeSet};
use rmech_core::orbchain::{apply_interaction, enumerate_mos, ReactivePair};

use super::chem::{build, set_of, Recipe};

pub const PARTNERS: [&str; 6] = ["[Cl]", "[OH]", "[CH3]", "[H]", "[O]O", ""];

pub fn reactants(r: &Recipe, partner: usize) -> Arc<ExplicitSet> {
    let mol = write_smiles(&set_of(vec![build(r)]), false, false);
    let text = match PARTNERS[partner % PARTNERS.len()] {
        "" => mol,
        p => format!("{p}.{mol}"),
    };
    Arc::new(make_explicit(&parse_smiles(&text).unwrap()))
}

/// Electrons counted from the graph: two per bond order, two per lone pair,
/// one per unpaired electron.
pub fn electrons(ms: &MoleculeSet) -> i64 {
    ms.molecules
        .iter()
        .map(|m| {
            let bonds: i64 = m.bonds().iter().map(|b| 2 * b.order.value() as i64).sum();
            let atoms: i64 = (0..m.len())
                .map(|i| 2 * m.lone_pairs(i) as i64 + m.atom(i).radical_electrons as i64 + 2 * m.atom(i).implicit_hydrogens as i64)
                .sum();
            bonds + atoms
        })
        .sum()
}

pub fn charge(ms: &MoleculeSet) -> i64 {
    ms.molecules.iter().flat_map(|m| m.atoms()).map(|a| a.formal_charge as i64).sum()
}

/// Every ordered pair of enumerated orbitals in both orientations plus every
/// self-pair, applied by brute force; returns canonical product sets.
pub fn exhaustive_outcomes(r: &ExplicitSet) -> BTreeSet<String> {
    let mos = enumerate_mos(r);
    let mut out = BTreeSet::new();
    for (i, a) in mos.iter().enumerate() {
        for (j, b) in mos.iter().enumerate() {
            let pairs: Vec<ReactivePair> = if i == j {
                vec![ReactivePair::homolysis(a.clone())]
            } else {
                [a.clone(), a.flipped()]
                    .into_iter()
                    .flat_map(|x| [b.clone(), b.flipped()].into_iter().map(move |y| ReactivePair::new(x.clone(), y)))
                    .collect()
            };
            for pair in pairs {
                if let Ok((products, _)) = apply_interaction(r, &pair) {
                    out.insert(write_smiles(&products, true, false));
                }
            }
        }
    }
    out
}
