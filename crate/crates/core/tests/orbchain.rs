mod common;

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use common::chem::recipe;
use common::orbitals::{charge, electrons, exhaustive_outcomes, reactants};
use proptest::prelude::*;
use rmech_core::chemgraph::*;
use rmech_core::orbchain::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn candidates_conserve_atoms_and_electrons(r in recipe(8), partner in 0usize..6) {
        let rs = reactants(&r, partner);
        let steps = enumerate_candidates(&rs, None);
        prop_assert!(steps.len() as u64 <= count_possible(&rs));
        let e0 = electrons(&rs.set);
        let mut keys = HashSet::new();
        for s in &steps {
            prop_assert_eq!(s.products.map_multiset(), rs.set.map_multiset());
            prop_assert_eq!(s.products.formula(), rs.set.formula());
            prop_assert_eq!(electrons(&s.products), e0, "{}", s.mapped_line());
            prop_assert_eq!(charge(&s.products), charge(&rs.set));
            prop_assert!(s.pair.is_admissible_shape());
            prop_assert!(s.pair.self_pair || s.pair.m1.electrons == 1 || s.pair.m2.electrons == 1);
            prop_assert!(keys.insert(s.key.clone()), "duplicate step {}", s.key);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumeration_matches_exhaustive_pairs(r in recipe(6), partner in 0usize..6) {
        let rs = reactants(&r, partner);
        prop_assume!(rs.set.heavy_atom_count() <= 8);
        let produced: BTreeSet<String> = enumerate_candidates(&rs, None).into_iter().map(|s| s.product_smiles).collect();
        prop_assert_eq!(produced, exhaustive_outcomes(&rs));
    }

    #[test]
    fn site_filter_keeps_exactly_matching_steps(r in recipe(6), partner in 0usize..6, mask in any::<u64>()) {
        let rs = reactants(&r, partner);
        let sites = eligible_sites(&rs);
        let allowed: BTreeSet<u32> = sites.iter().enumerate().filter(|(k, _)| mask >> (k % 64) & 1 == 1).map(|(_, &m)| m).collect();
        // Oracle: every admissible pair built individually, no deduplication.
        let expected: BTreeSet<String> = admissible_pairs(&rs)
            .iter()
            .filter_map(|p| build_step(&rs, p).ok())
            .filter(|s| allowed.contains(&s.sites.0) && allowed.contains(&s.sites.1))
            .map(|s| s.key)
            .collect();
        let got: BTreeSet<String> = enumerate_candidates(&rs, Some(&allowed)).into_iter().map(|s| s.key).collect();
        prop_assert_eq!(got, expected);
    }
}

fn steps_of(s: &str) -> Vec<MechanisticStep> {
    enumerate_candidates(&Arc::new(make_explicit(&parse_smiles(s).unwrap())), None)
}

#[test]
fn methane_homolyses_collapse_to_one() {
    let steps = steps_of("C");
    assert_eq!(steps.iter().filter(|s| s.family == Family::Homolysis).count(), 1);
}

#[test]
fn chlorine_abstracts_from_methane() {
    let steps = steps_of("[Cl].C");
    let s = steps.iter().find(|s| s.product_smiles == write_smiles(&parse_smiles("Cl.[CH3]").unwrap(), true, false)).unwrap();
    assert_eq!(s.family, Family::Abstraction);
    assert_eq!(s.arrows.len(), 3);
}

#[test]
fn methyl_adds_to_ethene() {
    let steps = steps_of("[CH3].C=C");
    let propyl = write_smiles(&parse_smiles("[CH2]CC").unwrap(), true, false);
    assert!(steps.iter().any(|s| s.family == Family::Addition && s.product_smiles == propyl));
}

#[test]
fn empty_filter_yields_nothing() {
    let r = Arc::new(make_explicit(&parse_smiles("[Cl].CC").unwrap()));
    assert!(enumerate_candidates(&r, Some(&BTreeSet::new())).is_empty());
    assert_eq!(count_possible(&make_explicit(&MoleculeSet::empty(Role::Reactants))), 0);
}

#[test]
fn recorded_step_is_inferred_and_found_among_true_sites() {
    let rec = parse_reaction("[Cl:1].[H:3][CH3:2]>>[Cl:1][H:3].[CH3:2]|1>1-3;2-3>1-3;2-3>2").unwrap();
    let inf = infer_reactive_pair(&rec).unwrap();
    assert_eq!(inf.step.family, Family::Abstraction);
    let allowed: BTreeSet<u32> = [inf.step.sites.0, inf.step.sites.1].into_iter().collect();
    let steps = enumerate_candidates(&inf.reactants, Some(&allowed));
    assert!(steps.iter().any(|s| s.key == inf.step.key));
}

#[test]
fn bredt_rule_rejects_bridgehead_alkene() {
    let r = Arc::new(make_explicit(&parse_smiles("C12=CCC(C1)CC2").unwrap()));
    assert!(bredt_violation(&r.set.molecules[0]).is_some());
    let ok = steps_of("[CH3].CCC");
    assert!(ok.iter().all(|s| check_rules(s, &RuleSet::all()).is_ok()));
    assert!(ok.iter().all(|s| check_rules(s, &RuleSet::none()).is_ok()));
}
