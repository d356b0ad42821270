//! Recovering the reactive orbital pair behind a recorded mechanism.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use super::candidates::{admissible_pairs, build_step, MechanisticStep};
use super::interact::ReactivePair;
use crate::chemgraph::{make_explicit, write_smiles, ExplicitSet, ReactionRecord};

#[derive(Debug, Clone)]
pub struct Inference {
    pub reactants: Arc<ExplicitSet>,
    pub pair: ReactivePair,
    pub step: MechanisticStep,
    /// Further, distinct pairs that reproduce the record equally well.
    pub alternatives: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferError {
    #[error("no orbital pair reproduces the recorded products and arrows ({tried} pairs tried)")]
    NoConsistentPair { tried: usize },
}

/// Finds the orbital pair whose interaction reproduces the record's products
/// and arrows. Only orbitals on atoms named by the arrows are considered.
pub fn infer_reactive_pair(rec: &ReactionRecord) -> Result<Inference, InferError> {
    let explicit = Arc::new(make_explicit(&rec.reactants));
    let arrow_atoms: BTreeSet<u32> = rec.arrows.maps().into_iter().collect();
    let target_arrows = rec.arrows.canonical();
    let target_products = write_smiles(&rec.products, true, true);
    let mut tried = 0;
    let mut found: Option<(ReactivePair, MechanisticStep)> = None;
    let mut alternatives: BTreeSet<String> = BTreeSet::new();
    for pair in admissible_pairs(&explicit) {
        if !pair.m1.atoms().iter().chain(pair.m2.atoms().iter()).all(|m| arrow_atoms.contains(m)) {
            continue;
        }
        tried += 1;
        let Ok(step) = build_step(&explicit, &pair) else { continue };
        if step.arrows.canonical() != target_arrows || step.products_with_original_maps() != target_products {
            continue;
        }
        match &found {
            None => found = Some((pair, step)),
            Some((_, first)) if first.key != step.key => {
                alternatives.insert(step.key.clone());
            }
            Some(_) => {}
        }
    }
    let (pair, step) = found.ok_or(InferError::NoConsistentPair { tried })?;
    if !alternatives.is_empty() {
        tracing::warn!(alternatives = alternatives.len(), "reactive pair is ambiguous; keeping the first");
    }
    Ok(Inference { reactants: explicit, pair, step, alternatives: alternatives.len() })
}
