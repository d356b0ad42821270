//! Orbital-pair interaction rules and the fish-hook arrow engine.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::orbital::{MolecularOrbital, OrbitalKind};
use crate::chemgraph::{
    ArrowCode, Atom, Bond, BondOrder, Element, ExplicitSet, HalfArrow, Molecule, MoleculeSet, OrbitalRef, Role,
};

/// Elementary radical step families. The declaration order doubles as the
/// tie-break priority when two candidates score equally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Recombination,
    Addition,
    ConjugateAddition,
    BetaScission,
    Abstraction,
    Substitution,
    Homolysis,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Recombination,
        Family::Addition,
        Family::ConjugateAddition,
        Family::BetaScission,
        Family::Abstraction,
        Family::Substitution,
        Family::Homolysis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Recombination => "recombination",
            Family::Addition => "addition",
            Family::ConjugateAddition => "conjugate_addition",
            Family::BetaScission => "beta_scission",
            Family::Abstraction => "abstraction",
            Family::Substitution => "substitution",
            Family::Homolysis => "homolysis",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The two interacting orbitals. `m1` is the half-occupied orbital that
/// initiates the step; for homolysis both entries are the same bond orbital.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReactivePair {
    pub m1: MolecularOrbital,
    pub m2: MolecularOrbital,
    pub self_pair: bool,
}

impl ReactivePair {
    pub fn new(m1: MolecularOrbital, m2: MolecularOrbital) -> Self {
        ReactivePair { m1, m2, self_pair: false }
    }

    pub fn homolysis(m: MolecularOrbital) -> Self {
        ReactivePair { m1: m.clone(), m2: m, self_pair: true }
    }

    /// The half-occupied-orbital requirement: one SOMO, or a filled bond
    /// orbital paired with itself.
    pub fn is_admissible_shape(&self) -> bool {
        if self.self_pair {
            self.m1 == self.m2 && self.m1.electrons == 2 && self.m1.is_bond()
        } else {
            self.m1.electrons == 1 || self.m2.electrons == 1
        }
    }
}

impl fmt::Display for ReactivePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.self_pair {
            write!(f, "{} (self)", self.m1)
        } else {
            write!(f, "{} + {}", self.m1, self.m2)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InteractionError {
    #[error("inadmissible orbital pair: {0}")]
    Inadmissible(String),
    #[error("map {0} not present in the reactants")]
    UnknownMap(u32),
    #[error("arrow code cannot be applied: {0}")]
    BadArrows(String),
    #[error("product violates valence rules: {0}")]
    InvalidProduct(String),
}

/// Indexes atoms of a molecule set by map number.
pub(crate) struct MapIndex<'a> {
    ms: &'a MoleculeSet,
    pos: HashMap<u32, (usize, usize)>,
}

impl<'a> MapIndex<'a> {
    pub(crate) fn new(ms: &'a MoleculeSet) -> Self {
        let mut pos = HashMap::new();
        for (mi, m) in ms.molecules.iter().enumerate() {
            for (ai, a) in m.atoms().iter().enumerate() {
                if let Some(map) = a.map_number {
                    pos.insert(map, (mi, ai));
                }
            }
        }
        MapIndex { ms, pos }
    }

    pub(crate) fn atom(&self, map: u32) -> Option<&'a Atom> {
        self.pos.get(&map).map(|(mi, ai)| self.ms.molecules[*mi].atom(*ai))
    }

    pub(crate) fn bond_order(&self, x: u32, y: u32) -> Option<u8> {
        let (mx, ax) = *self.pos.get(&x)?;
        let (my, ay) = *self.pos.get(&y)?;
        if mx != my {
            return None;
        }
        self.ms.molecules[mx].bond_between(ax, ay).map(|b| b.order.value())
    }

    pub(crate) fn is_heavy(&self, map: u32) -> bool {
        self.atom(map).is_some_and(|a| a.element != Element::H)
    }

    /// The atom itself if heavy or a hydrogen not attached to a heavy atom;
    /// otherwise the heavy atom it hangs off.
    pub(crate) fn site(&self, map: u32) -> u32 {
        let Some(&(mi, ai)) = self.pos.get(&map) else { return map };
        let m = &self.ms.molecules[mi];
        if m.atom(ai).element != Element::H {
            return map;
        }
        m.neighbors(ai)
            .iter()
            .map(|(n, _)| m.atom(*n))
            .find(|a| a.element != Element::H)
            .and_then(|a| a.map_number)
            .unwrap_or(map)
    }
}

fn arrow(source: OrbitalRef, target: OrbitalRef) -> HalfArrow {
    HalfArrow { source, target }
}

/// Determines the step family and fish-hook arrows of an orbital pair, or
/// explains why the pair is inadmissible.
pub fn interaction_arrows(r: &ExplicitSet, pair: &ReactivePair) -> Result<(Family, ArrowCode), InteractionError> {
    let idx = MapIndex::new(&r.set);
    pair_arrows(&idx, pair)
}

pub(crate) fn pair_arrows(idx: &MapIndex<'_>, pair: &ReactivePair) -> Result<(Family, ArrowCode), InteractionError> {
    use OrbitalKind::*;
    let inadmissible = |why: &str| Err(InteractionError::Inadmissible(format!("{pair}: {why}")));
    for m in pair.m1.atoms().into_iter().chain(pair.m2.atoms()) {
        if idx.atom(m).is_none() {
            return Err(InteractionError::UnknownMap(m));
        }
    }
    if pair.self_pair {
        let m = &pair.m1;
        let (Some(n), true) = (m.neighbor, m.chain.is_empty()) else {
            return inadmissible("self-pairs must be unchained bond orbitals");
        };
        let order = idx.bond_order(m.atom, n).unwrap_or(0);
        let ok = match m.kind {
            Sigma => order == 1,
            Pi => order >= 2,
            _ => false,
        };
        if !ok {
            return inadmissible("only σ of single bonds and π components undergo homolysis");
        }
        let bond = OrbitalRef::bond(m.atom, n);
        return Ok((
            Family::Homolysis,
            ArrowCode::new(vec![arrow(bond, OrbitalRef::Atom(m.atom)), arrow(bond, OrbitalRef::Atom(n))]),
        ));
    }
    let (somo, other) = match (pair.m1.kind, pair.m2.kind) {
        (Somo, _) => (&pair.m1, &pair.m2),
        (_, Somo) => (&pair.m2, &pair.m1),
        _ => return inadmissible("no half-occupied orbital"),
    };
    let x = somo.atom;
    match other.kind {
        Somo => {
            let y = other.atom;
            if x == y {
                return inadmissible("both electrons on one atom");
            }
            if idx.bond_order(x, y).unwrap_or(0) >= 3 {
                return inadmissible("bond order would exceed three");
            }
            let bond = OrbitalRef::bond(x, y);
            Ok((
                Family::Recombination,
                ArrowCode::new(vec![arrow(OrbitalRef::Atom(x), bond), arrow(OrbitalRef::Atom(y), bond)]),
            ))
        }
        Sigma | Pi => {
            let b = other.atom;
            let Some(a) = other.neighbor else { return inadmissible("bond orbital without a partner atom") };
            if other.atoms().contains(&x) {
                return inadmissible("radical centre is part of the attacked orbital");
            }
            let order = idx.bond_order(a, b).unwrap_or(0);
            let bonded_xa = idx.bond_order(x, a).is_some();
            let family = match (other.kind, other.chain.is_empty()) {
                (Sigma, true) => {
                    if order != 1 {
                        return inadmissible("σ of a multiple bond cannot break before its π");
                    }
                    if bonded_xa {
                        Family::BetaScission
                    } else if !idx.is_heavy(a) {
                        Family::Abstraction
                    } else {
                        Family::Substitution
                    }
                }
                (Pi, true) => {
                    if order < 2 {
                        return inadmissible("π orbital on a single bond");
                    }
                    if bonded_xa {
                        return inadmissible("attack on an adjacent π only shifts resonance");
                    }
                    Family::Addition
                }
                (Pi, false) => {
                    if order < 2 || bonded_xa {
                        return inadmissible("conjugated addition needs a remote π system");
                    }
                    Family::ConjugateAddition
                }
                _ => return inadmissible("σ orbitals carry no chain"),
            };
            if bonded_xa && idx.bond_order(x, a).unwrap_or(0) >= 3 {
                return inadmissible("bond order would exceed three");
            }
            let xa = OrbitalRef::bond(x, a);
            let ab = OrbitalRef::bond(a, b);
            let mut arrows = vec![arrow(OrbitalRef::Atom(x), xa), arrow(ab, xa)];
            if other.chain.is_empty() {
                arrows.push(arrow(ab, OrbitalRef::Atom(b)));
            } else {
                let c = other.chain[0].neighbor.expect("chain orbitals are bond orbitals");
                let d = other.chain[1].neighbor.expect("chain orbitals are bond orbitals");
                let bc = OrbitalRef::bond(b, c);
                let cd = OrbitalRef::bond(c, d);
                arrows.extend([arrow(ab, bc), arrow(cd, bc), arrow(cd, OrbitalRef::Atom(d))]);
            }
            Ok((family, ArrowCode::new(arrows)))
        }
        _ => inadmissible("partner orbital is not σ, π or a SOMO"),
    }
}

/// Moves one electron per half-arrow and rebuilds the resulting molecules.
///
/// Atom sources give up an unpaired electron, bond sources lose one bonding
/// electron, atom targets gain an unpaired electron and bond targets gain a
/// bonding electron. Bonds must end with an even electron count; products
/// are split into connected components and validated.
pub fn apply_arrows(r: &MoleculeSet, arrows: &ArrowCode) -> Result<MoleculeSet, InteractionError> {
    // Global atom table in molecule order.
    let mut atoms: Vec<Atom> = Vec::with_capacity(r.atom_count());
    let mut by_map: HashMap<u32, usize> = HashMap::new();
    let mut offset = Vec::with_capacity(r.len());
    for m in &r.molecules {
        offset.push(atoms.len());
        for a in m.atoms() {
            if let Some(map) = a.map_number {
                by_map.insert(map, atoms.len());
            }
            atoms.push(a.clone());
        }
    }
    let mut electrons: BTreeMap<(usize, usize), (i32, bool)> = BTreeMap::new();
    for (mi, m) in r.molecules.iter().enumerate() {
        for b in m.bonds() {
            let (u, v) = (offset[mi] + b.a, offset[mi] + b.b);
            electrons.insert((u.min(v), u.max(v)), (2 * b.order.value() as i32, b.aromatic_source));
        }
    }
    let original = electrons.clone();
    let locate = |map: u32| by_map.get(&map).copied().ok_or(InteractionError::UnknownMap(map));
    let mut radical_delta = vec![0i32; atoms.len()];
    for a in &arrows.arrows {
        match a.source {
            OrbitalRef::Atom(m) => radical_delta[locate(m)?] -= 1,
            OrbitalRef::Bond(x, y) => {
                let (u, v) = (locate(x)?, locate(y)?);
                let e = electrons
                    .get_mut(&(u.min(v), u.max(v)))
                    .ok_or_else(|| InteractionError::BadArrows(format!("no bond {x}-{y} to take electrons from")))?;
                e.0 -= 1;
            }
        }
        match a.target {
            OrbitalRef::Atom(m) => radical_delta[locate(m)?] += 1,
            OrbitalRef::Bond(x, y) => {
                let (u, v) = (locate(x)?, locate(y)?);
                electrons.entry((u.min(v), u.max(v))).or_insert((0, false)).0 += 1;
            }
        }
    }
    for (i, d) in radical_delta.iter().enumerate() {
        let r = atoms[i].radical_electrons as i32 + d;
        if r < 0 {
            return Err(InteractionError::BadArrows(format!(
                "atom {} has no unpaired electron to give",
                atoms[i].map_number.unwrap_or(0)
            )));
        }
        atoms[i].radical_electrons = r as u8;
    }
    let mut bonds: Vec<(usize, usize, BondOrder, bool)> = Vec::new();
    for (&(u, v), &(e, aromatic)) in &electrons {
        if e < 0 || e % 2 != 0 {
            return Err(InteractionError::BadArrows(format!(
                "bond {}-{} left with {e} electrons",
                atoms[u].map_number.unwrap_or(0),
                atoms[v].map_number.unwrap_or(0)
            )));
        }
        if e == 0 {
            continue;
        }
        let order = BondOrder::from_value((e / 2) as u8).ok_or_else(|| {
            InteractionError::InvalidProduct(format!(
                "bond order {} between {} and {}",
                e / 2,
                atoms[u].map_number.unwrap_or(0),
                atoms[v].map_number.unwrap_or(0)
            ))
        })?;
        let unchanged = original.get(&(u, v)).is_some_and(|(e0, _)| *e0 == e);
        bonds.push((u, v, order, aromatic && unchanged));
    }
    build_components(atoms, bonds, Role::Products)
}

fn build_components(
    atoms: Vec<Atom>,
    bonds: Vec<(usize, usize, BondOrder, bool)>,
    role: Role,
) -> Result<MoleculeSet, InteractionError> {
    let n = atoms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(u, v, _, _) in &bonds {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru.max(rv)] = ru.min(rv);
        }
    }
    let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
    let mut comp = vec![0usize; n];
    let mut local = vec![0usize; n];
    let mut comp_atoms: Vec<Vec<Atom>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let c = *comp_of_root.entry(root).or_insert_with(|| {
            comp_atoms.push(Vec::new());
            comp_atoms.len() - 1
        });
        comp[i] = c;
        local[i] = comp_atoms[c].len();
        comp_atoms[c].push(atoms[i].clone());
    }
    let mut comp_bonds: Vec<Vec<Bond>> = vec![Vec::new(); comp_atoms.len()];
    for (u, v, order, aromatic) in bonds {
        comp_bonds[comp[u]].push(Bond { a: local[u], b: local[v], order, aromatic_source: aromatic });
    }
    let mut molecules = Vec::with_capacity(comp_atoms.len());
    for (atoms, bonds) in comp_atoms.into_iter().zip(comp_bonds) {
        let m = Molecule::new(atoms, bonds).map_err(|e| InteractionError::InvalidProduct(e.to_string()))?;
        check_representable(&m)?;
        molecules.push(m);
    }
    MoleculeSet::new(molecules, role).map_err(|e| InteractionError::InvalidProduct(e.to_string()))
}

/// Unpaired electrons must match what SMILES valence inference would assign,
/// so every product can be written and read back unchanged.
fn check_representable(m: &Molecule) -> Result<(), InteractionError> {
    for (i, a) in m.atoms().iter().enumerate() {
        let used = m.bond_order_sum(i) + a.implicit_hydrogens;
        let expected = a.element.inferred_radicals(a.formal_charge, used);
        if expected != Some(a.radical_electrons) {
            return Err(InteractionError::InvalidProduct(format!(
                "{} (map {}) with valence {used} and {} unpaired electrons",
                a.element,
                a.map_number.unwrap_or(0),
                a.radical_electrons
            )));
        }
    }
    Ok(())
}

/// Applies an orbital-pair interaction: derives the arrows from the rule
/// table, then pushes electrons along them.
pub fn apply_interaction(r: &ExplicitSet, pair: &ReactivePair) -> Result<(MoleculeSet, ArrowCode), InteractionError> {
    let (_, arrows) = interaction_arrows(r, pair)?;
    let products = apply_arrows(&r.set, &arrows)?;
    Ok((products, arrows))
}
