//! The orbital-interaction model of radical mechanisms: orbital enumeration,
//! pair interaction rules, candidate generation and inference of the
//! reactive pair behind a recorded step.

pub mod candidates;
pub mod infer;
pub mod interact;
pub mod orbital;
pub mod rules;

pub use candidates::{
    admissible_pairs, build_step, count_possible, eligible_sites, enumerate_candidates, steps_from_pairs,
    MechanisticStep, SitePairIndex,
};
pub use infer::{infer_reactive_pair, InferError, Inference};
pub use interact::{apply_arrows, apply_interaction, interaction_arrows, Family, InteractionError, ReactivePair};
pub use orbital::{enumerate_mos, MolecularOrbital, OrbitalKind};
pub use rules::{bredt_violation, check_rules, RuleSet, RuleViolation};
