use super::descriptor::{atom_descriptor, DescriptorVariant};
use super::{FeatureError, SparseVec};
use crate::orbchain::MechanisticStep;

pub const REACTION_VECTOR_LEN: usize = 4 * 800;

/// Site descriptors of both reactive atoms before and after the step:
/// `[r(s1), r(s2), p(s1), p(s2)]`, 3200 values.
pub fn reaction_vector(step: &MechanisticStep) -> Result<SparseVec, FeatureError> {
    let (s1, s2) = step.sites;
    let v = DescriptorVariant::Site;
    let r = &step.reactants.set;
    let parts = [
        atom_descriptor(r, s1, v)?.values,
        atom_descriptor(r, s2, v)?.values,
        atom_descriptor(&step.products, s1, v)?.values,
        atom_descriptor(&step.products, s2, v)?.values,
    ];
    Ok(SparseVec::concat(&[&parts[0], &parts[1], &parts[2], &parts[3]]))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::chemgraph::{make_explicit, parse_smiles};
    use crate::orbchain::enumerate_candidates;

    #[test]
    fn length_and_change_visible() {
        let r = Arc::new(make_explicit(&parse_smiles("[Cl].CC").unwrap()));
        let steps = enumerate_candidates(&r, None);
        assert!(!steps.is_empty());
        for s in &steps {
            let v = reaction_vector(s).unwrap();
            assert_eq!(v.dim, REACTION_VECTOR_LEN);
            let dense = v.to_dense();
            assert_ne!(dense[..1600], dense[1600..], "{}", s.key);
        }
    }
}
