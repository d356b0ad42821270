use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::element::{Element, MassMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single = 1,
    Double = 2,
    Triple = 3,
}

impl BondOrder {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<Self> {
        match v {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub radical_electrons: u8,
    pub implicit_hydrogens: u8,
    pub map_number: Option<u32>,
    pub index: usize,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            formal_charge: 0,
            radical_electrons: 0,
            implicit_hydrogens: 0,
            map_number: None,
            index: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// The input spelled this bond with aromatic notation before kekulization.
    pub aromatic_source: bool,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond { a, b, order, aromatic_source: false }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("bond {0} references atom {1} outside the molecule")]
    DanglingBond(usize, usize),
    #[error("bond {0} connects atom {1} to itself")]
    SelfBond(usize, usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("molecule graph is not connected")]
    Disconnected,
    #[error("atom {index} ({element}) has inconsistent electron count")]
    Valence { index: usize, element: Element },
    #[error("atom {index} ({element}) has {radicals} unpaired electrons; at most 2 supported")]
    TooManyRadicals { index: usize, element: Element, radicals: u8 },
    #[error("atom-map number {0} used more than once")]
    DuplicateMap(u32),
}

/// A connected, kekulized molecular graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMolecule", into = "RawMolecule")]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct RawMolecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

impl TryFrom<RawMolecule> for Molecule {
    type Error = GraphError;
    fn try_from(raw: RawMolecule) -> Result<Self, Self::Error> {
        Molecule::new(raw.atoms, raw.bonds)
    }
}

impl From<Molecule> for RawMolecule {
    fn from(m: Molecule) -> Self {
        RawMolecule { atoms: m.atoms, bonds: m.bonds }
    }
}

impl Molecule {
    /// Builds a molecule, renumbering `Atom::index` and checking connectivity
    /// and electron bookkeeping.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        let m = Self::unchecked(atoms, bonds)?;
        if !m.is_connected() {
            return Err(GraphError::Disconnected);
        }
        for i in 0..m.atoms.len() {
            m.check_atom(i)?;
        }
        Ok(m)
    }

    /// Structural checks only (no connectivity or valence); used for fragments.
    pub(crate) fn unchecked(mut atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        for (i, a) in atoms.iter_mut().enumerate() {
            a.index = i;
        }
        let mut adjacency = vec![Vec::new(); atoms.len()];
        let mut seen = HashSet::new();
        for (bi, b) in bonds.iter().enumerate() {
            if b.a >= atoms.len() {
                return Err(GraphError::DanglingBond(bi, b.a));
            }
            if b.b >= atoms.len() {
                return Err(GraphError::DanglingBond(bi, b.b));
            }
            if b.a == b.b {
                return Err(GraphError::SelfBond(bi, b.a));
            }
            if !seen.insert((b.a.min(b.b), b.a.max(b.b))) {
                return Err(GraphError::DuplicateBond(b.a, b.b));
            }
            adjacency[b.a].push((b.b, bi));
            adjacency[b.b].push((b.a, bi));
        }
        Ok(Molecule { atoms, bonds, adjacency })
    }

    fn check_atom(&self, i: usize) -> Result<(), GraphError> {
        let atom = &self.atoms[i];
        if atom.radical_electrons > 2 {
            return Err(GraphError::TooManyRadicals {
                index: i,
                element: atom.element,
                radicals: atom.radical_electrons,
            });
        }
        let valence_err = GraphError::Valence { index: i, element: atom.element };
        let nonbonding = self.nonbonding_electrons(i).ok_or(valence_err.clone())?;
        if nonbonding < atom.radical_electrons as i32 || (nonbonding - atom.radical_electrons as i32) % 2 != 0 {
            return Err(valence_err);
        }
        let used = self.bond_order_sum(i) as i32 + atom.implicit_hydrogens as i32;
        let lone_pairs = (nonbonding - atom.radical_electrons as i32) / 2;
        if atom.element == Element::H && used > 1 {
            return Err(valence_err);
        }
        if atom.element.is_octet_bound() && used + lone_pairs + atom.radical_electrons as i32 > 4 {
            return Err(valence_err);
        }
        Ok(())
    }

    pub fn empty() -> Self {
        Molecule { atoms: Vec::new(), bonds: Vec::new(), adjacency: Vec::new() }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbour, bond index)` pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn bond_between(&self, i: usize, j: usize) -> Option<&Bond> {
        self.adjacency[i].iter().find(|(n, _)| *n == j).map(|(_, b)| &self.bonds[*b])
    }

    /// Sum of explicit bond orders at atom `i`.
    pub fn bond_order_sum(&self, i: usize) -> u8 {
        self.adjacency[i].iter().map(|(_, b)| self.bonds[*b].order.value()).sum()
    }

    /// Implicit plus explicit (graph-node) hydrogens.
    pub fn hydrogen_count(&self, i: usize) -> u8 {
        self.atoms[i].implicit_hydrogens
            + self.adjacency[i]
                .iter()
                .filter(|(n, _)| self.atoms[*n].element == Element::H)
                .count() as u8
    }

    pub fn heavy_degree(&self, i: usize) -> usize {
        self.adjacency[i]
            .iter()
            .filter(|(n, _)| self.atoms[*n].element != Element::H)
            .count()
    }

    /// Valence electrons not involved in bonds (lone pairs and radicals).
    pub fn nonbonding_electrons(&self, i: usize) -> Option<i32> {
        let a = &self.atoms[i];
        let nb = a.element.valence_electrons() as i32
            - a.formal_charge as i32
            - self.bond_order_sum(i) as i32
            - a.implicit_hydrogens as i32;
        (nb >= 0).then_some(nb)
    }

    pub fn lone_pairs(&self, i: usize) -> u8 {
        let nb = self.nonbonding_electrons(i).unwrap_or(0);
        ((nb - self.atoms[i].radical_electrons as i32).max(0) / 2) as u8
    }

    /// Vacant valence orbitals on octet-bound atoms (e.g. a carbocation).
    pub fn empty_orbitals(&self, i: usize) -> u8 {
        let a = &self.atoms[i];
        if !a.element.is_octet_bound() {
            return 0;
        }
        let used = self.bond_order_sum(i) as i32
            + a.implicit_hydrogens as i32
            + self.lone_pairs(i) as i32
            + a.radical_electrons as i32;
        (4 - used).max(0) as u8
    }

    pub fn pi_bond_count(&self, i: usize) -> u8 {
        self.adjacency[i]
            .iter()
            .map(|(_, b)| self.bonds[*b].order.value() - 1)
            .sum()
    }

    pub fn radical_count(&self) -> u32 {
        self.atoms.iter().map(|a| a.radical_electrons as u32).sum()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != Element::H).count()
    }

    pub fn find_map(&self, map: u32) -> Option<usize> {
        self.atoms.iter().position(|a| a.map_number == Some(map))
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for (v, _) in &self.adjacency[u] {
                if !seen[*v] {
                    seen[*v] = true;
                    count += 1;
                    stack.push(*v);
                }
            }
        }
        count == self.atoms.len()
    }

    /// Element counts including every hydrogen.
    pub fn formula(&self) -> BTreeMap<Element, u32> {
        let mut out = BTreeMap::new();
        for a in &self.atoms {
            *out.entry(a.element).or_insert(0) += 1;
            if a.implicit_hydrogens > 0 {
                *out.entry(Element::H).or_insert(0) += a.implicit_hydrogens as u32;
            }
        }
        out
    }

    /// Total valence electrons (bonding pairs counted twice, plus lone pairs
    /// and radicals).
    pub fn electron_count(&self) -> i32 {
        let bonds: i32 = self.bonds.iter().map(|b| 2 * b.order.value() as i32).sum();
        let h: i32 = self.atoms.iter().map(|a| 2 * a.implicit_hydrogens as i32).sum();
        let nonbonding: i32 = (0..self.atoms.len())
            .map(|i| self.nonbonding_electrons(i).unwrap_or(0))
            .sum();
        bonds + h + nonbonding
    }

    /// Bond-count distances from `from`, searched out to `limit` bonds;
    /// atoms further away get `usize::MAX`.
    pub fn distances(&self, from: usize, limit: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.atoms.len()];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if dist[u] == limit {
                continue;
            }
            for &(v, _) in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn map_numbers(&self) -> impl Iterator<Item = u32> + '_ {
        self.atoms.iter().filter_map(|a| a.map_number)
    }

    /// Returns a copy with atoms permuted: new atom `k` is old atom `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Molecule {
        assert_eq!(perm.len(), self.atoms.len());
        let mut inverse = vec![0; perm.len()];
        for (new, old) in perm.iter().enumerate() {
            inverse[*old] = new;
        }
        let atoms = perm.iter().map(|old| self.atoms[*old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond { a: inverse[b.a], b: inverse[b.b], ..*b })
            .collect();
        Molecule::unchecked(atoms, bonds).expect("permutation preserves structure")
    }

    /// Copy with every atom's map number replaced by `f(atom)`.
    pub fn with_maps(&self, f: impl Fn(&Atom) -> Option<u32>) -> Molecule {
        let mut m = self.clone();
        for a in m.atoms.iter_mut() {
            a.map_number = f(a);
        }
        m
    }

    pub fn into_parts(self) -> (Vec<Atom>, Vec<Bond>) {
        (self.atoms, self.bonds)
    }

    pub fn molecular_mass(&self, mode: MassMode) -> f64 {
        molecular_mass(self, mode)
    }
}

/// Sum of atomic masses, implicit hydrogens included.
pub fn molecular_mass(m: &Molecule, mode: MassMode) -> f64 {
    m.atoms
        .iter()
        .map(|a| a.element.mass(mode) + a.implicit_hydrogens as f64 * Element::H.mass(mode))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Reactants,
    Products,
}

/// A set of molecules (reactant or product side) with unique atom maps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoleculeSet {
    pub molecules: Vec<Molecule>,
    pub role: Role,
}

impl MoleculeSet {
    pub fn new(molecules: Vec<Molecule>, role: Role) -> Result<Self, GraphError> {
        let mut seen = HashSet::new();
        for m in &molecules {
            for map in m.map_numbers() {
                if !seen.insert(map) {
                    return Err(GraphError::DuplicateMap(map));
                }
            }
        }
        Ok(MoleculeSet { molecules, role })
    }

    pub fn empty(role: Role) -> Self {
        MoleculeSet { molecules: Vec::new(), role }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    pub fn atom_count(&self) -> usize {
        self.molecules.iter().map(|m| m.len()).sum()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.molecules.iter().map(|m| m.heavy_atom_count()).sum()
    }

    pub fn map_multiset(&self) -> BTreeMap<u32, usize> {
        let mut out = BTreeMap::new();
        for m in &self.molecules {
            for map in m.map_numbers() {
                *out.entry(map).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn max_map(&self) -> u32 {
        self.molecules.iter().flat_map(|m| m.map_numbers()).max().unwrap_or(0)
    }

    pub fn formula(&self) -> BTreeMap<Element, u32> {
        let mut out = BTreeMap::new();
        for m in &self.molecules {
            for (e, n) in m.formula() {
                *out.entry(e).or_insert(0) += n;
            }
        }
        out
    }

    pub fn electron_count(&self) -> i32 {
        self.molecules.iter().map(|m| m.electron_count()).sum()
    }

    /// `(molecule, atom)` holding a map number.
    pub fn locate(&self, map: u32) -> Option<(usize, usize)> {
        self.molecules
            .iter()
            .enumerate()
            .find_map(|(mi, m)| m.find_map(map).map(|ai| (mi, ai)))
    }

    pub fn atom_by_map(&self, map: u32) -> Option<&Atom> {
        self.locate(map).map(|(mi, ai)| self.molecules[mi].atom(ai))
    }

    pub fn mass(&self, mode: MassMode) -> f64 {
        self.molecules.iter().map(|m| molecular_mass(m, mode)).sum()
    }
}
