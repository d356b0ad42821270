//! Candidate mechanism generation over all admissible orbital pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::interact::{apply_arrows, pair_arrows, Family, InteractionError, MapIndex, ReactivePair};
use super::orbital::{enumerate_mos, MolecularOrbital, OrbitalKind};
use crate::chemgraph::{
    fold_hydrogens, retain_maps, write_molecules, write_smiles, ArrowCode, ExplicitSet, MoleculeSet, WriteOptions,
};

/// One elementary step generated from an orbital pair.
#[derive(Debug, Clone)]
pub struct MechanisticStep {
    pub reactants: Arc<ExplicitSet>,
    pub products: MoleculeSet,
    pub arrows: ArrowCode,
    pub pair: ReactivePair,
    pub family: Family,
    /// Reactive atoms as seen by the learned models (first = initiating
    /// radical, or the two bond ends for homolysis).
    pub sites: (u32, u32),
    /// Identity up to symmetry: family plus the reactant set with only the
    /// participating atoms labelled by role.
    pub key: String,
    /// Canonical products without atom maps.
    pub product_smiles: String,
    pub score: Option<f64>,
}

impl MechanisticStep {
    /// Products with explicit hydrogens folded back, keeping maps that came
    /// from the caller and hydrogens that the arrows reference.
    pub fn products_for_output(&self) -> MoleculeSet {
        for_output(&self.products, &self.reactants, &self.arrows)
    }

    pub fn reactants_for_output(&self) -> MoleculeSet {
        for_output(&self.reactants.set, &self.reactants, &self.arrows)
    }

    /// `reactants>>products|arrows` with mapped, canonical SMILES.
    pub fn mapped_line(&self) -> String {
        format!(
            "{}>>{}|{}",
            write_smiles(&self.reactants_for_output(), true, true),
            write_smiles(&self.products_for_output(), true, true),
            self.arrows
        )
    }

    /// Products written with the caller's maps only, for comparison with a
    /// recorded reaction.
    pub fn products_with_original_maps(&self) -> String {
        let kept = retain_maps(&self.products, |m| self.reactants.is_original(m));
        write_smiles(&kept, true, true)
    }
}

fn for_output(ms: &MoleculeSet, r: &ExplicitSet, arrows: &ArrowCode) -> MoleculeSet {
    let referenced: BTreeSet<u32> = arrows.maps().into_iter().collect();
    fold_hydrogens(ms, |m| referenced.contains(&m) || r.is_original(m))
}

/// Number of orbital pairs, `C(M, 2)`, plus admissible self-pairs
/// (homolyses).
pub fn count_possible(r: &ExplicitSet) -> u64 {
    let mos = enumerate_mos(r);
    let m = mos.len() as u64;
    let idx = MapIndex::new(&r.set);
    let h = mos
        .iter()
        .filter(|mo| pair_arrows(&idx, &ReactivePair::homolysis((*mo).clone())).is_ok())
        .count() as u64;
    m * m.saturating_sub(1) / 2 + h
}

/// Orbital pairs that pass the interaction rule table, with bond orbitals
/// tried in both orientations. Products are not built yet.
pub fn admissible_pairs(r: &ExplicitSet) -> Vec<ReactivePair> {
    let idx = MapIndex::new(&r.set);
    let mut mos = enumerate_mos(r);
    mos.sort();
    mos.dedup();
    let somos: Vec<&MolecularOrbital> = mos.iter().filter(|m| m.kind == OrbitalKind::Somo).collect();
    let mut oriented: Vec<MolecularOrbital> = Vec::new();
    for m in &mos {
        if matches!(m.kind, OrbitalKind::Sigma | OrbitalKind::Pi) {
            oriented.push(m.clone());
            if m.chain.is_empty() {
                oriented.push(m.flipped());
            }
        }
    }
    let mut out = Vec::new();
    let mut push = |pair: ReactivePair| {
        if pair.is_admissible_shape() && pair_arrows(&idx, &pair).is_ok() {
            out.push(pair);
        }
    };
    for (i, s) in somos.iter().enumerate() {
        for t in &somos[i + 1..] {
            push(ReactivePair::new((*s).clone(), (*t).clone()));
        }
        for b in &oriented {
            push(ReactivePair::new((*s).clone(), b.clone()));
        }
    }
    for m in &mos {
        if matches!(m.kind, OrbitalKind::Sigma | OrbitalKind::Pi) && m.chain.is_empty() {
            push(ReactivePair::homolysis(m.clone()));
        }
    }
    out
}

pub(crate) fn pair_sites(idx: &MapIndex<'_>, pair: &ReactivePair) -> (u32, u32) {
    if pair.self_pair {
        let n = pair.m1.neighbor.unwrap_or(pair.m1.atom);
        return (idx.site(pair.m1.atom), idx.site(n));
    }
    let (somo, other) = if pair.m1.kind == OrbitalKind::Somo { (&pair.m1, &pair.m2) } else { (&pair.m2, &pair.m1) };
    (idx.site(somo.atom), idx.site(other.atom))
}

/// Role labels for the step key: symmetric roles share a label.
fn role_maps(family: Family, pair: &ReactivePair) -> HashMap<u32, u32> {
    let mut roles = HashMap::new();
    match family {
        Family::Homolysis => {
            roles.insert(pair.m1.atom, 1);
            roles.insert(pair.m1.neighbor.unwrap_or(pair.m1.atom), 1);
        }
        Family::Recombination => {
            roles.insert(pair.m1.atom, 1);
            roles.insert(pair.m2.atom, 1);
        }
        _ => {
            let (somo, other) =
                if pair.m1.kind == OrbitalKind::Somo { (&pair.m1, &pair.m2) } else { (&pair.m2, &pair.m1) };
            roles.insert(somo.atom, 1);
            if let Some(a) = other.neighbor {
                roles.insert(a, 2);
            }
            roles.insert(other.atom, 3);
            for (k, c) in other.chain.iter().enumerate() {
                if let Some(n) = c.neighbor {
                    roles.insert(n, 4 + k as u32);
                }
            }
        }
    }
    roles
}

pub(crate) fn step_key(r: &ExplicitSet, family: Family, pair: &ReactivePair) -> String {
    let roles = role_maps(family, pair);
    let molecules: Vec<_> = r
        .set
        .molecules
        .iter()
        .map(|m| m.with_maps(|a| a.map_number.and_then(|x| roles.get(&x).copied())))
        .collect();
    format!("{}|{}", family.name(), write_molecules(&molecules, &WriteOptions::new(true, true)))
}

/// Builds the full step for an admissible pair.
pub fn build_step(r: &Arc<ExplicitSet>, pair: &ReactivePair) -> Result<MechanisticStep, InteractionError> {
    let idx = MapIndex::new(&r.set);
    build_with_index(r, &idx, pair)
}

fn build_with_index(
    r: &Arc<ExplicitSet>,
    idx: &MapIndex<'_>,
    pair: &ReactivePair,
) -> Result<MechanisticStep, InteractionError> {
    let (family, arrows) = pair_arrows(idx, pair)?;
    let products = apply_arrows(&r.set, &arrows)?;
    let product_smiles = write_smiles(&products, true, false);
    Ok(MechanisticStep {
        key: step_key(r, family, pair),
        sites: pair_sites(idx, pair),
        reactants: Arc::clone(r),
        products,
        arrows,
        pair: pair.clone(),
        family,
        product_smiles,
        score: None,
    })
}

/// Builds, validates and deduplicates steps for the given pairs, ordered by
/// canonical products then key.
pub fn steps_from_pairs(r: &Arc<ExplicitSet>, pairs: &[ReactivePair]) -> Vec<MechanisticStep> {
    let idx = MapIndex::new(&r.set);
    let mut seen: BTreeMap<String, MechanisticStep> = BTreeMap::new();
    for pair in pairs {
        match build_with_index(r, &idx, pair) {
            Ok(step) => {
                seen.entry(step.key.clone()).or_insert(step);
            }
            Err(e) => tracing::trace!("skipping {pair}: {e}"),
        }
    }
    let mut steps: Vec<MechanisticStep> = seen.into_values().collect();
    steps.sort_by(|a, b| (&a.product_smiles, &a.key).cmp(&(&b.product_smiles, &b.key)));
    steps
}

/// All distinct candidate steps. With `allowed_atoms`, only steps whose two
/// reactive sites both lie in the set are produced.
pub fn enumerate_candidates(r: &Arc<ExplicitSet>, allowed_atoms: Option<&BTreeSet<u32>>) -> Vec<MechanisticStep> {
    let idx = MapIndex::new(&r.set);
    let pairs: Vec<ReactivePair> = admissible_pairs(r)
        .into_iter()
        .filter(|p| match allowed_atoms {
            Some(allowed) => {
                let (s1, s2) = pair_sites(&idx, p);
                allowed.contains(&s1) && allowed.contains(&s2)
            }
            None => true,
        })
        .collect();
    steps_from_pairs(r, &pairs)
}

/// Admissible pairs grouped by their ordered reactive sites, for scoring
/// atom pairs first and building steps only on demand.
pub struct SitePairIndex {
    pub groups: BTreeMap<(u32, u32), Vec<ReactivePair>>,
}

impl SitePairIndex {
    pub fn new(r: &ExplicitSet) -> Self {
        let idx = MapIndex::new(&r.set);
        let mut groups: BTreeMap<(u32, u32), Vec<ReactivePair>> = BTreeMap::new();
        for p in admissible_pairs(r) {
            let (s1, s2) = pair_sites(&idx, &p);
            if p.self_pair || p.m2.kind == OrbitalKind::Somo {
                // Symmetric roles: reachable from either ordering.
                groups.entry((s2, s1)).or_default().push(p.clone());
            }
            groups.entry((s1, s2)).or_default().push(p);
        }
        for list in groups.values_mut() {
            list.dedup();
        }
        SitePairIndex { groups }
    }

    pub fn pairs_for(&self, first: u32, second: u32) -> &[ReactivePair] {
        self.groups.get(&(first, second)).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Atoms that the site models score: heavy atoms and hydrogens not attached
/// to a heavy atom (H atoms, H2).
pub fn eligible_sites(r: &ExplicitSet) -> Vec<u32> {
    let idx = MapIndex::new(&r.set);
    let mut out = Vec::new();
    for m in &r.set.molecules {
        for a in m.atoms() {
            let map = a.map_number.expect("explicit sets are fully mapped");
            if idx.site(map) == map {
                out.push(map);
            }
        }
    }
    out
}
