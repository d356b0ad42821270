//! Serializable view of a step, shared by the CLI, the service and the
//! pathway export.

use serde::{Deserialize, Serialize};

use crate::chemgraph::{write_molecules, MassMode, WriteOptions};
use crate::orbchain::MechanisticStep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMass {
    pub smiles: String,
    pub monoisotopic: f64,
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub family: String,
    /// Canonical products without atom maps.
    pub products: String,
    /// Mapped `reactants>>products`.
    pub smirks: String,
    pub arrows: String,
    /// Designators of the two reactive orbitals (one for a homolysis).
    pub orbitals: Vec<String>,
    pub product_masses: Vec<ProductMass>,
}

impl StepSummary {
    pub fn of(step: &MechanisticStep) -> Self {
        let line = step.mapped_line();
        let smirks = line.rsplit_once('|').map_or(line.as_str(), |(s, _)| s).to_string();
        let orbitals = if step.pair.self_pair {
            vec![step.pair.m1.designator()]
        } else {
            vec![step.pair.m1.designator(), step.pair.m2.designator()]
        };
        let plain = WriteOptions::new(true, false);
        let product_masses = step
            .products
            .molecules
            .iter()
            .map(|m| ProductMass {
                smiles: write_molecules(std::slice::from_ref(m), &plain),
                monoisotopic: round6(m.molecular_mass(MassMode::Monoisotopic)),
                average: round6(m.molecular_mass(MassMode::Average)),
            })
            .collect();
        StepSummary {
            family: step.family.name().to_string(),
            products: step.product_smiles.clone(),
            smirks,
            arrows: step.arrows.to_string(),
            orbitals,
            product_masses,
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}
