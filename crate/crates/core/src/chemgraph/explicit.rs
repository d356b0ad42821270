//! Conversion between implicit-hydrogen molecules and the fully explicit,
//! fully mapped form the orbital model works on.

use super::element::Element;
use super::molecule::{Atom, Bond, BondOrder, Molecule, MoleculeSet};

/// A molecule set in which every hydrogen is an atom and every atom carries a
/// map number. Maps above `original_max` were assigned here.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitSet {
    pub set: MoleculeSet,
    pub original_max: u32,
}

impl ExplicitSet {
    /// Maps that came from the caller's input rather than being assigned here.
    pub fn is_original(&self, map: u32) -> bool {
        map <= self.original_max
    }
}

/// Materializes implicit hydrogens and numbers unmapped atoms, in input
/// order, starting after the largest existing map.
pub fn make_explicit(ms: &MoleculeSet) -> ExplicitSet {
    let original_max = ms.max_map();
    let mut next = original_max;
    let mut fresh = || {
        next += 1;
        next
    };
    let mut molecules = Vec::with_capacity(ms.len());
    for m in &ms.molecules {
        let mut atoms: Vec<Atom> = Vec::with_capacity(m.len());
        let mut bonds: Vec<Bond> = m.bonds().to_vec();
        for a in m.atoms() {
            let mut a = a.clone();
            if a.map_number.is_none() {
                a.map_number = Some(fresh());
            }
            atoms.push(a);
        }
        for i in 0..m.len() {
            let count = atoms[i].implicit_hydrogens;
            atoms[i].implicit_hydrogens = 0;
            for _ in 0..count {
                let mut h = Atom::new(Element::H);
                h.map_number = Some(fresh());
                bonds.push(Bond::new(i, atoms.len(), BondOrder::Single));
                atoms.push(h);
            }
        }
        molecules.push(Molecule::new(atoms, bonds).expect("adding hydrogens keeps a valid graph"));
    }
    ExplicitSet {
        set: MoleculeSet::new(molecules, ms.role).expect("fresh maps are unique"),
        original_max,
    }
}

/// Drops map numbers rejected by `keep`; unmapped plain hydrogens then fold
/// back into their neighbours when written.
pub fn retain_maps(ms: &MoleculeSet, keep: impl Fn(u32) -> bool) -> MoleculeSet {
    let molecules = ms
        .molecules
        .iter()
        .map(|m| m.with_maps(|a| a.map_number.filter(|x| keep(*x))))
        .collect();
    MoleculeSet { molecules, role: ms.role }
}

/// Collapses explicit plain hydrogens into implicit counts, keeping mapped
/// hydrogens accepted by `keep_h` as atoms. Atom order of the heavy skeleton
/// is preserved.
pub fn fold_hydrogens(ms: &MoleculeSet, keep_h: impl Fn(u32) -> bool) -> MoleculeSet {
    let mut molecules = Vec::with_capacity(ms.len());
    for m in &ms.molecules {
        let foldable = |i: usize| -> bool {
            let a = m.atom(i);
            a.element == Element::H
                && a.formal_charge == 0
                && a.radical_electrons == 0
                && m.neighbors(i).len() == 1
                && m.atom(m.neighbors(i)[0].0).element != Element::H
                && !a.map_number.is_some_and(&keep_h)
        };
        let mut index = vec![usize::MAX; m.len()];
        let mut atoms = Vec::new();
        for i in 0..m.len() {
            if !foldable(i) {
                index[i] = atoms.len();
                atoms.push(m.atom(i).clone());
            }
        }
        for i in 0..m.len() {
            if foldable(i) {
                let parent = m.neighbors(i)[0].0;
                atoms[index[parent]].implicit_hydrogens += 1;
            }
        }
        let bonds = m
            .bonds()
            .iter()
            .filter(|b| index[b.a] != usize::MAX && index[b.b] != usize::MAX)
            .map(|b| Bond { a: index[b.a], b: index[b.b], ..*b })
            .collect();
        molecules.push(Molecule::new(atoms, bonds).expect("folding hydrogens keeps a valid graph"));
    }
    MoleculeSet { molecules, role: ms.role }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::smiles::parse_smiles;

    #[test]
    fn methane_and_chlorine_atom() {
        let ms = parse_smiles("[Cl:1].[CH4:2]").unwrap();
        let ex = make_explicit(&ms);
        assert_eq!(ex.original_max, 2);
        assert_eq!(ex.set.atom_count(), 6);
        let maps: Vec<u32> = ex.set.map_multiset().keys().copied().collect();
        assert_eq!(maps, vec![1, 2, 3, 4, 5, 6]);
        assert!(ex.set.molecules.iter().all(|m| m.atoms().iter().all(|a| a.implicit_hydrogens == 0)));
    }

    #[test]
    fn fold_round_trip() {
        let ms = parse_smiles("CC(=O)O").unwrap();
        let ex = make_explicit(&ms);
        let back = fold_hydrogens(&retain_maps(&ex.set, |_| false), |_| false);
        assert_eq!(back.molecules[0].len(), 4);
        assert_eq!(back.formula(), ms.formula());
    }
}
