//! Differential reaction fingerprint: the symmetric difference of the
//! circular-substructure sets of both sides, folded into a bit vector.
//!
//! Substructures are canonical fragment strings on the explicit-hydrogen
//! graph for radii `0..=max_radius` around every atom, plus every small ring.
//! Environments further than `max_radius` bonds from all atoms touched by the
//! arrows are identical on both sides, so per-step work is confined to the
//! neighbourhood of the change; [`Drfp::shingles_exhaustive`] recomputes both
//! sides in full.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use super::{fnv1a, SparseVec};
use crate::chemgraph::rings::small_rings;
use crate::chemgraph::{write_fragment, ExplicitSet, Molecule, MoleculeSet};
use crate::orbchain::MechanisticStep;

const RING_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Drfp {
    pub bits: usize,
    pub max_radius: usize,
    pub rings: bool,
    pub seed: u64,
}

impl Default for Drfp {
    fn default() -> Self {
        Drfp { bits: 2048, max_radius: 4, rings: true, seed: 42 }
    }
}

fn map_of(m: &Molecule, i: usize) -> u32 {
    m.atom(i).map_number.expect("explicit sets are fully mapped")
}

/// Fragment strings of one side, per centre atom and per ring.
#[derive(Debug, Clone, Default)]
pub struct SideShingles {
    pub centers: HashMap<u32, Vec<String>>,
    /// Keyed by sorted ring atom maps.
    pub rings: HashMap<Vec<u32>, String>,
}

impl SideShingles {
    fn center_counts(&self) -> HashMap<&str, usize> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for frags in self.centers.values() {
            for f in frags {
                *counts.entry(f.as_str()).or_default() += 1;
            }
        }
        counts
    }
}

/// Precomputed reactant side shared by all candidate steps of one set.
#[derive(Debug, Clone)]
pub struct ReactantIndex {
    reactants: Arc<ExplicitSet>,
    side: SideShingles,
}

impl Drfp {
    fn environment(&self, m: &Molecule, center: usize) -> Vec<String> {
        let mut dist = vec![usize::MAX; m.len()];
        dist[center] = 0;
        let mut queue = VecDeque::from([center]);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= self.max_radius {
                continue;
            }
            for &(v, _) in m.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut out = Vec::with_capacity(self.max_radius + 1);
        let mut last = (0, 0);
        for r in 0..=self.max_radius {
            let atoms: Vec<usize> = (0..m.len()).filter(|&j| dist[j] <= r).collect();
            let bonds: Vec<usize> = m
                .bonds()
                .iter()
                .enumerate()
                .filter(|(_, b)| dist[b.a].min(dist[b.b]) < r)
                .map(|(k, _)| k)
                .collect();
            if r > 0 && (atoms.len(), bonds.len()) == last {
                // Saturated: larger radii give the same fragment.
                break;
            }
            last = (atoms.len(), bonds.len());
            out.push(write_fragment(m, &atoms, Some(&bonds), true));
        }
        out
    }

    fn ring_fragment(m: &Molecule, ring: &[usize]) -> String {
        let bonds: Vec<usize> = m
            .bonds()
            .iter()
            .enumerate()
            .filter(|(_, b)| ring.contains(&b.a) && ring.contains(&b.b))
            .map(|(k, _)| k)
            .collect();
        write_fragment(m, ring, Some(&bonds), true)
    }

    /// Shingles for the centres whose maps pass `want`, and all rings.
    fn side(&self, ms: &MoleculeSet, want: impl Fn(u32) -> bool) -> SideShingles {
        let mut side = SideShingles::default();
        for m in &ms.molecules {
            for i in 0..m.len() {
                let map = map_of(m, i);
                if want(map) {
                    side.centers.insert(map, self.environment(m, i));
                }
            }
            if self.rings {
                for ring in small_rings(m, RING_MAX) {
                    let mut maps: Vec<u32> = ring.iter().map(|&i| map_of(m, i)).collect();
                    maps.sort_unstable();
                    side.rings.insert(maps, Self::ring_fragment(m, &ring));
                }
            }
        }
        side
    }

    pub fn reactant_index(&self, r: &Arc<ExplicitSet>) -> ReactantIndex {
        ReactantIndex { reactants: Arc::clone(r), side: self.side(&r.set, |_| true) }
    }

    /// Shingle set of a whole side.
    pub fn side_set(&self, ms: &MoleculeSet) -> BTreeSet<String> {
        let side = self.side(ms, |_| true);
        side.centers.into_values().flatten().chain(side.rings.into_values()).collect()
    }

    /// Reference route: both sides in full.
    pub fn shingles_exhaustive(&self, step: &MechanisticStep) -> BTreeSet<String> {
        let r = self.side_set(&step.reactants.set);
        let p = self.side_set(&step.products);
        r.symmetric_difference(&p).cloned().collect()
    }

    /// Maps within `max_radius` bonds of any of `seeds`.
    fn near(&self, ms: &MoleculeSet, seeds: &BTreeSet<u32>) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for m in &ms.molecules {
            let mut dist = vec![usize::MAX; m.len()];
            let mut queue = VecDeque::new();
            for i in 0..m.len() {
                if seeds.contains(&map_of(m, i)) {
                    dist[i] = 0;
                    queue.push_back(i);
                }
            }
            while let Some(u) = queue.pop_front() {
                out.insert(map_of(m, u));
                if dist[u] >= self.max_radius {
                    continue;
                }
                for &(v, _) in m.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        out
    }

    /// Symmetric difference using the precomputed reactant side.
    pub fn shingles(&self, index: &ReactantIndex, step: &MechanisticStep) -> BTreeSet<String> {
        debug_assert!(Arc::ptr_eq(&index.reactants, &step.reactants) || *index.reactants == *step.reactants);
        let changed: BTreeSet<u32> = step.arrows.maps().into_iter().collect();
        let mut affected = self.near(&step.reactants.set, &changed);
        affected.extend(self.near(&step.products, &changed));

        let product = self.side(&step.products, |m| affected.contains(&m));
        let mut r_local: BTreeSet<&str> = BTreeSet::new();
        let mut r_local_counts: HashMap<&str, usize> = HashMap::new();
        for map in &affected {
            for f in index.side.centers.get(map).into_iter().flatten() {
                r_local.insert(f);
                *r_local_counts.entry(f.as_str()).or_default() += 1;
            }
        }
        r_local.extend(index.side.rings.values().map(String::as_str));
        let p_local: BTreeSet<&str> = product
            .centers
            .values()
            .flatten()
            .chain(product.rings.values())
            .map(String::as_str)
            .collect();

        let totals = index.side.center_counts();
        let unchanged = |f: &str| totals.get(f).copied().unwrap_or(0) > r_local_counts.get(f).copied().unwrap_or(0);
        r_local
            .symmetric_difference(&p_local)
            .filter(|f| !unchanged(f))
            .map(|f| f.to_string())
            .collect()
    }

    pub fn fold<'a>(&self, shingles: impl IntoIterator<Item = &'a String>) -> SparseVec {
        let entries = shingles
            .into_iter()
            .map(|s| (fnv1a(self.seed, s.as_bytes()) % self.bits as u64) as u32)
            .collect::<BTreeSet<u32>>()
            .into_iter()
            .map(|i| (i, 1.0))
            .collect();
        SparseVec::from_entries(self.bits, entries)
    }

    pub fn encode(&self, step: &MechanisticStep) -> SparseVec {
        let index = self.reactant_index(&step.reactants);
        self.fold(&self.shingles(&index, step))
    }

    /// Encodes many steps, sharing reactant-side work between steps with the
    /// same reactant set.
    pub fn encode_all(&self, steps: &[MechanisticStep]) -> Vec<SparseVec> {
        let mut index: Option<ReactantIndex> = None;
        steps
            .iter()
            .map(|s| {
                if !index.as_ref().is_some_and(|ix| Arc::ptr_eq(&ix.reactants, &s.reactants)) {
                    index = Some(self.reactant_index(&s.reactants));
                }
                self.fold(&self.shingles(index.as_ref().unwrap(), s))
            })
            .collect()
    }
}
