//! Per-atom descriptors: a fixed atomic block followed by a topological block
//! over the neighbourhood within the variant's radius.
//!
//! Every feature is a function of the labelled graph within `radius + 1`
//! bonds of the atom (shell atoms contribute their degree and hydrogen count)
//! and of rings of at most seven atoms through it, so the descriptor is
//! invariant to atom order and to edits further away.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{fnv1a, FeatureError, SparseVec};
use crate::chemgraph::rings::{in_conjugated_ring, ring_bond_count, smallest_ring_size};
use crate::chemgraph::{Element, Molecule, MoleculeSet};

pub const ATOMIC_LEN: usize = 85;
const SHELL_LEN: usize = 19;
const NEIGHBOR_PAIR_LEN: usize = 30;
const RING_LIMIT: usize = 7;
const PATH_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorVariant {
    /// 800 values, radius 3; input of the site classifier.
    Site,
    /// 140 values, radius 1; input of the pair scorer.
    Pair,
}

impl DescriptorVariant {
    pub fn dim(self) -> usize {
        match self {
            DescriptorVariant::Site => 800,
            DescriptorVariant::Pair => 140,
        }
    }

    pub fn radius(self) -> usize {
        match self {
            DescriptorVariant::Site => 3,
            DescriptorVariant::Pair => 1,
        }
    }

    fn topological_len(self) -> usize {
        match self {
            DescriptorVariant::Site => 700,
            DescriptorVariant::Pair => 55,
        }
    }

    fn path_buckets(self) -> usize {
        self.topological_len() - SHELL_LEN * self.radius() - NEIGHBOR_PAIR_LEN
    }

    pub fn name(self) -> &'static str {
        match self {
            DescriptorVariant::Site => "site",
            DescriptorVariant::Pair => "pair",
        }
    }
}

impl fmt::Display for DescriptorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorVariant {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "site" | "800" => Ok(DescriptorVariant::Site),
            "pair" | "140" => Ok(DescriptorVariant::Pair),
            other => Err(FeatureError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDescriptor {
    pub map: u32,
    pub variant: DescriptorVariant,
    pub radius: usize,
    pub values: SparseVec,
}

/// Sequential writer for feature segments.
struct Block {
    entries: Vec<(u32, f64)>,
    pos: u32,
}

impl Block {
    fn new(pos: usize) -> Self {
        Block { entries: Vec::new(), pos: pos as u32 }
    }

    fn one_hot(&mut self, width: usize, k: usize) {
        self.entries.push((self.pos + k.min(width - 1) as u32, 1.0));
        self.pos += width as u32;
    }

    fn value(&mut self, x: f64) {
        if x != 0.0 {
            self.entries.push((self.pos, x));
        }
        self.pos += 1;
    }

    fn flag(&mut self, b: bool) {
        self.value(if b { 1.0 } else { 0.0 });
    }

    fn counts(&mut self, xs: &[f64]) {
        for &x in xs {
            self.value(x);
        }
    }

    fn skip(&mut self, n: usize) {
        self.pos += n as u32;
    }
}

fn element_counts(m: &Molecule, atoms: impl Iterator<Item = usize>) -> [f64; Element::COUNT] {
    let mut c = [0.0; Element::COUNT];
    for j in atoms {
        c[m.atom(j).element.ordinal()] += 1.0;
    }
    c
}

fn atomic_block(m: &Molecule, i: usize, b: &mut Block) {
    let start = b.pos;
    let a = m.atom(i);
    let nbrs: Vec<usize> = m.neighbors(i).iter().map(|&(j, _)| j).collect();
    let orders: Vec<u8> = m.neighbors(i).iter().map(|&(_, k)| m.bonds()[k].order.value()).collect();

    b.one_hot(Element::COUNT, a.element.ordinal());
    b.one_hot(3, (a.formal_charge.clamp(-1, 1) + 1) as usize);
    b.value(a.formal_charge as f64);
    b.one_hot(3, a.radical_electrons as usize);
    b.one_hot(5, m.hydrogen_count(i) as usize);
    b.one_hot(5, m.heavy_degree(i));
    b.one_hot(5, nbrs.len());
    b.one_hot(7, m.bond_order_sum(i) as usize);
    b.one_hot(4, m.lone_pairs(i) as usize);
    b.one_hot(2, m.empty_orbitals(i) as usize);
    b.one_hot(3, m.pi_bond_count(i) as usize);
    for order in 1..=3u8 {
        b.value(orders.iter().filter(|&&o| o == order).count() as f64);
    }

    let ring = smallest_ring_size(m, i, RING_LIMIT);
    let ring_bonds = ring_bond_count(m, i, RING_LIMIT);
    b.flag(ring.is_some());
    match ring {
        Some(size) => b.one_hot(5, size - 3),
        None => b.skip(5),
    }
    b.value(ring_bonds as f64);

    b.value(a.element.electronegativity());
    b.value(a.element.average_mass() / 100.0);
    b.flag(in_conjugated_ring(m, i, RING_LIMIT));

    let radical_nbrs = nbrs.iter().filter(|&&j| m.atom(j).radical_electrons > 0).count();
    let pi_nbrs = nbrs.iter().filter(|&&j| m.pi_bond_count(j) > 0).count();
    let lone_pair_nbrs = nbrs.iter().filter(|&&j| m.lone_pairs(j) > 0).count();
    b.value(radical_nbrs as f64);
    b.flag(pi_nbrs > 0);
    b.flag(lone_pair_nbrs > 0);

    b.counts(&element_counts(m, nbrs.iter().copied()));
    b.value(nbrs.iter().map(|&j| m.hydrogen_count(j) as f64).sum());
    let en = a.element.electronegativity();
    b.value(nbrs.iter().map(|&j| m.atom(j).element.electronegativity() - en).sum());
    b.value(nbrs.iter().map(|&j| m.atom(j).element.electronegativity()).fold(0.0, f64::max));
    b.value(nbrs.iter().map(|&j| m.lone_pairs(j) as f64).sum());

    let mut second_radicals = 0.0;
    for &j in &nbrs {
        for &(k, _) in m.neighbors(j) {
            if k != i && m.atom(k).radical_electrons > 0 {
                second_radicals += 1.0;
            }
        }
    }
    b.value(second_radicals);

    let carbonyl = m
        .neighbors(i)
        .iter()
        .any(|&(j, k)| m.atom(j).element == Element::O && m.bonds()[k].order.value() == 2);
    b.flag(carbonyl);
    b.value(nbrs.iter().filter(|&&j| m.atom(j).element.is_halogen()).count() as f64);
    b.value(pi_nbrs as f64);
    b.value(nbrs.iter().map(|&j| m.heavy_degree(j) as f64).sum());
    b.value(nbrs.iter().filter(|&&j| smallest_ring_size(m, j, RING_LIMIT).is_some()).count() as f64);
    b.flag(ring_bonds >= 3);

    debug_assert_eq!((b.pos - start) as usize, ATOMIC_LEN);
}

fn shell_features(m: &Molecule, shell: &[usize], b: &mut Block) {
    b.counts(&element_counts(m, shell.iter().copied()));
    let sum = |f: &dyn Fn(usize) -> f64| shell.iter().map(|&j| f(j)).sum::<f64>();
    let bonds_of = |j: usize, order: u8| m.neighbors(j).iter().filter(|&&(_, k)| m.bonds()[k].order.value() == order).count();
    b.value(sum(&|j| m.atom(j).radical_electrons as f64));
    b.value(sum(&|j| m.hydrogen_count(j) as f64));
    b.value(sum(&|j| bonds_of(j, 2) as f64));
    b.value(sum(&|j| bonds_of(j, 3) as f64));
    b.value(sum(&|j| m.heavy_degree(j) as f64));
    b.value(sum(&|j| m.atom(j).element.electronegativity()));
    b.value(sum(&|j| m.lone_pairs(j) as f64));
    b.value(sum(&|j| m.atom(j).formal_charge as f64));
    b.value(shell.iter().filter(|&&j| m.pi_bond_count(j) > 0).count() as f64);
}

fn path_step(m: &Molecule, bond: usize, atom: usize) -> String {
    let a = m.atom(atom);
    format!(
        "{}{}{}{}",
        match m.bonds()[bond].order.value() {
            1 => "-",
            2 => "=",
            _ => "#",
        },
        a.element.symbol(),
        "*".repeat(a.radical_electrons as usize),
        m.hydrogen_count(atom)
    )
}

fn hashed_paths(m: &Molecule, i: usize, radius: usize, buckets: usize, b: &mut Block) {
    let mut counts = vec![0.0; buckets];
    let mut stack: Vec<(usize, String, Vec<usize>)> = vec![(i, String::new(), vec![i])];
    while let Some((u, sig, path)) = stack.pop() {
        for &(v, k) in m.neighbors(u) {
            if path.contains(&v) {
                continue;
            }
            let next = format!("{sig}{}", path_step(m, k, v));
            counts[(fnv1a(PATH_SEED, next.as_bytes()) % buckets as u64) as usize] += 1.0;
            if path.len() < radius {
                let mut p = path.clone();
                p.push(v);
                stack.push((v, next, p));
            }
        }
    }
    b.counts(&counts);
}

fn descriptor_in(m: &Molecule, i: usize, variant: DescriptorVariant) -> SparseVec {
    let radius = variant.radius();
    let mut b = Block::new(0);
    atomic_block(m, i, &mut b);

    let topo_start = b.pos;
    let dist = m.distances(i, radius);
    for d in 1..=radius {
        let shell: Vec<usize> = (0..m.len()).filter(|&j| dist[j] == d).collect();
        shell_features(m, &shell, &mut b);
    }
    for &(j, k) in m.neighbors(i) {
        let order = m.bonds()[k].order.value() as usize;
        b.entries.push((b.pos + ((order - 1) * Element::COUNT + m.atom(j).element.ordinal()) as u32, 1.0));
    }
    b.skip(NEIGHBOR_PAIR_LEN);
    hashed_paths(m, i, radius, variant.path_buckets(), &mut b);
    debug_assert_eq!((b.pos - topo_start) as usize, variant.topological_len());

    // Neighbour sums are accumulated in atom order; snapping to a fixed grid
    // keeps the last-ulp noise from depending on the numbering.
    let mut v = SparseVec::from_entries(variant.dim(), b.entries);
    for x in &mut v.values {
        *x = (*x * 1e9).round() / 1e9;
    }
    v
}

/// Descriptor of the atom carrying `map` in an explicit-hydrogen set.
pub fn atom_descriptor(ms: &MoleculeSet, map: u32, variant: DescriptorVariant) -> Result<AtomDescriptor, FeatureError> {
    let (mi, ai) = ms.locate(map).ok_or(FeatureError::UnknownAtom(map))?;
    let m = &ms.molecules[mi];
    if m.atoms().iter().any(|a| a.implicit_hydrogens > 0) {
        return Err(FeatureError::ImplicitHydrogens);
    }
    Ok(AtomDescriptor { map, variant, radius: variant.radius(), values: descriptor_in(m, ai, variant) })
}
