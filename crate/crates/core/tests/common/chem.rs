//! Random molecule generation and a brute-force isomorphism oracle.

use proptest::prelude::*;
use rmech_core::chemgraph::{fold_hydrogens, Atom, Bond, BondOrder, Element, Molecule, MoleculeSet, Role};

/// Heavy-atom recipe: element choices and bonds are drawn, then hydrogens
/// fill default valences. Invalid draws fall back to single bonds.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub elements: Vec<Element>,
    /// For atom k >= 1: (parent index seed, bond order seed).
    pub links: Vec<(usize, u8)>,
    pub ring: Option<(usize, usize)>,
    pub radical: Option<usize>,
}

const HEAVY: [Element; 6] = [Element::C, Element::C, Element::C, Element::N, Element::O, Element::Cl];

pub fn recipe(max_heavy: usize) -> impl Strategy<Value = Recipe> {
    (1..=max_heavy).prop_flat_map(|n| {
        (
            proptest::collection::vec(0..HEAVY.len(), n),
            proptest::collection::vec((0usize..64, 1u8..=3), n.saturating_sub(1)),
            proptest::option::of((0usize..64, 0usize..64)),
            proptest::option::of(0usize..64),
        )
            .prop_map(|(els, links, ring, radical)| Recipe {
                elements: els.into_iter().map(|e| HEAVY[e]).collect(),
                links,
                ring,
                radical,
            })
    })
}

fn max_valence(e: Element) -> u8 {
    e.default_valences()[0]
}

/// Builds a neutral molecule with implicit hydrogens from a recipe.
pub fn build(r: &Recipe) -> Molecule {
    let n = r.elements.len();
    let mut used = vec![0u8; n];
    let mut bonds: Vec<Bond> = Vec::new();
    for (k, &(p, o)) in r.links.iter().enumerate() {
        let child = k + 1;
        let parent = p % child;
        let room = |i: usize, used: &[u8]| max_valence(r.elements[i]).saturating_sub(used[i]);
        let mut order = o.min(room(parent, &used)).min(room(child, &used));
        if order == 0 {
            // Parent saturated: attach to the first atom with room, else stop.
            match (0..child).find(|&i| room(i, &used) > 0) {
                Some(alt) => {
                    used[alt] += 1;
                    used[child] += 1;
                    bonds.push(Bond::new(alt, child, BondOrder::Single));
                }
                None => break,
            }
            continue;
        }
        order = order.max(1);
        used[parent] += order;
        used[child] += order;
        bonds.push(Bond::new(parent, child, BondOrder::from_value(order).unwrap()));
    }
    let connected: Vec<bool> = {
        let mut c = vec![false; n];
        c[0] = true;
        for b in &bonds {
            c[b.a] = true;
            c[b.b] = true;
        }
        c
    };
    let keep: Vec<usize> = (0..n).filter(|&i| connected[i]).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in keep.iter().enumerate() {
        index[i] = k;
    }
    let mut bonds: Vec<Bond> = bonds
        .into_iter()
        .filter(|b| index[b.a] != usize::MAX && index[b.b] != usize::MAX)
        .map(|b| Bond::new(index[b.a], index[b.b], b.order))
        .collect();
    let mut used: Vec<u8> = keep.iter().map(|&i| used[i]).collect();
    let elements: Vec<Element> = keep.iter().map(|&i| r.elements[i]).collect();
    let m = keep.len();
    if let Some((x, y)) = r.ring {
        let (x, y) = (x % m, y % m);
        let bonded = bonds.iter().any(|b| (b.a == x && b.b == y) || (b.a == y && b.b == x));
        if x != y && !bonded && used[x] < max_valence(elements[x]) && used[y] < max_valence(elements[y]) {
            bonds.push(Bond::new(x, y, BondOrder::Single));
            used[x] += 1;
            used[y] += 1;
        }
    }
    let mut atoms: Vec<Atom> = elements
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let mut a = Atom::new(e);
            a.implicit_hydrogens = max_valence(e) - used[i];
            a
        })
        .collect();
    if let Some(k) = r.radical {
        let k = k % m;
        if atoms[k].implicit_hydrogens > 0 {
            atoms[k].implicit_hydrogens -= 1;
            atoms[k].radical_electrons = 1;
        }
    }
    Molecule::new(atoms, bonds).expect("recipe builds a valid molecule")
}

pub fn set_of(mols: Vec<Molecule>) -> MoleculeSet {
    MoleculeSet::new(mols, Role::Reactants).expect("unmapped molecules")
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum BondMatch {
    Exact,
    /// Ring bonds match regardless of order; per-atom π counts must agree.
    Resonance,
}

fn atom_label(m: &Molecule, i: usize, mode: BondMatch) -> (Element, i8, u8, u8, usize, u8) {
    let a = m.atom(i);
    let pi = if mode == BondMatch::Resonance { m.pi_bond_count(i) } else { 0 };
    (a.element, a.formal_charge, a.radical_electrons, m.hydrogen_count(i), m.neighbors(i).len(), pi)
}

fn is_ring_bond(m: &Molecule, k: usize) -> bool {
    let b = &m.bonds()[k];
    let mut seen = vec![false; m.len()];
    let mut stack = vec![b.a];
    seen[b.a] = true;
    while let Some(u) = stack.pop() {
        for &(v, bk) in m.neighbors(u) {
            if bk != k && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen[b.b]
}

fn bond_label(m: &Molecule, k: usize, mode: BondMatch) -> u8 {
    if mode == BondMatch::Resonance && is_ring_bond(m, k) {
        0
    } else {
        m.bonds()[k].order.value()
    }
}

/// Backtracking isomorphism test on heavy-atom graphs (hydrogens folded).
pub fn molecules_isomorphic(a: &Molecule, b: &Molecule, mode: BondMatch) -> bool {
    if a.len() != b.len() || a.bonds().len() != b.bonds().len() {
        return false;
    }
    let la: Vec<_> = (0..a.len()).map(|i| atom_label(a, i, mode)).collect();
    let lb: Vec<_> = (0..b.len()).map(|i| atom_label(b, i, mode)).collect();
    let mut sa = la.clone();
    let mut sb = lb.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return false;
    }
    let bl = |m: &Molecule, i: usize, j: usize| -> Option<u8> {
        m.neighbors(i).iter().find(|&&(v, _)| v == j).map(|&(_, k)| bond_label(m, k, mode))
    };
    fn extend(
        i: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        a: &Molecule,
        b: &Molecule,
        la: &[(Element, i8, u8, u8, usize, u8)],
        lb: &[(Element, i8, u8, u8, usize, u8)],
        bl: &dyn Fn(&Molecule, usize, usize) -> Option<u8>,
    ) -> bool {
        if i == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if used[j] || la[i] != lb[j] {
                continue;
            }
            let ok = (0..i).all(|p| bl(a, i, p) == bl(b, j, map[p]));
            if !ok {
                continue;
            }
            map.push(j);
            used[j] = true;
            if extend(i + 1, map, used, a, b, la, lb, bl) {
                return true;
            }
            map.pop();
            used[j] = false;
        }
        false
    }
    extend(0, &mut Vec::new(), &mut vec![false; b.len()], a, b, &la, &lb, &bl)
}

/// Multiset isomorphism of two sets, hydrogens folded first.
pub fn sets_isomorphic(a: &MoleculeSet, b: &MoleculeSet, mode: BondMatch) -> bool {
    let fa = fold_hydrogens(a, |_| false);
    let fb = fold_hydrogens(b, |_| false);
    if fa.molecules.len() != fb.molecules.len() {
        return false;
    }
    let mut used = vec![false; fb.molecules.len()];
    fa.molecules.iter().all(|ma| {
        match (0..fb.molecules.len()).find(|&k| !used[k] && molecules_isomorphic(ma, &fb.molecules[k], mode)) {
            Some(k) => {
                used[k] = true;
                true
            }
            None => false,
        }
    })
}
