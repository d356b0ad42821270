//! SMILES reading.
//!
//! Supported: organic-subset and bracket atoms for H, C, N, O, S, P, F, Cl,
//! Br, I; aromatic lowercase atoms (kekulized on input); branches, ring
//! closures (including `%nn`), dot-disconnected components and atom maps.
//! Stereo marks are ignored with a warning; isotopes are rejected.

use std::collections::BTreeMap;

use thiserror::Error;
use tracing::warn;

use super::element::Element;
use super::molecule::{Atom, Bond, BondOrder, GraphError, Molecule, MoleculeSet, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unsupported element '{0}'")]
    UnsupportedElement(String),
    #[error("isotope labels are not supported")]
    Isotope,
    #[error("ring closure {0} was never closed")]
    UnclosedRing(u32),
    #[error("branch opened here was never closed")]
    UnclosedBranch,
    #[error("unmatched ')'")]
    UnmatchedParen,
    #[error("bond or branch without a preceding atom")]
    NoPrecedingAtom,
    #[error("ring closure bond symbols disagree")]
    RingBondMismatch,
    #[error("aromatic system cannot be kekulized")]
    Kekulize,
    #[error("valence of {element} exceeded")]
    Valence { element: Element },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES error at position {position}: {kind}")]
pub struct SmilesError {
    pub position: usize,
    pub kind: SmilesErrorKind,
}

impl SmilesError {
    fn new(position: usize, kind: SmilesErrorKind) -> Self {
        SmilesError { position, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondKind {
    Single,
    Double,
    Triple,
    Aromatic,
    Unspecified,
}

#[derive(Debug, Clone)]
struct RawAtom {
    element: Element,
    aromatic: bool,
    bracket: bool,
    hcount: u8,
    charge: i8,
    map: Option<u32>,
    pos: usize,
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<(usize, usize, BondKind)>,
    rings: BTreeMap<u32, (usize, BondKind, usize)>,
    branches: Vec<(usize, usize)>,
    prev: Option<usize>,
    pending: Option<(BondKind, usize)>,
    warned_stereo: bool,
}

/// Parses dot-separated SMILES into kekulized molecules.
pub fn parse_smiles(text: &str) -> Result<MoleculeSet, SmilesError> {
    let mut p = Parser {
        s: text.trim().as_bytes(),
        i: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        rings: BTreeMap::new(),
        branches: Vec::new(),
        prev: None,
        pending: None,
        warned_stereo: false,
    };
    p.run()?;
    p.build()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn err(&self, kind: SmilesErrorKind) -> SmilesError {
        SmilesError::new(self.i, kind)
    }

    fn stereo_warning(&mut self) {
        if !self.warned_stereo {
            warn!("stereochemistry marks are ignored");
            self.warned_stereo = true;
        }
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let prev = self.prev.ok_or_else(|| self.err(SmilesErrorKind::NoPrecedingAtom))?;
                    self.branches.push((prev, self.i));
                    self.i += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return Err(self.err(SmilesErrorKind::UnexpectedChar(')')));
                    }
                    let (atom, _) = self.branches.pop().ok_or_else(|| self.err(SmilesErrorKind::UnmatchedParen))?;
                    self.prev = Some(atom);
                    self.i += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return Err(self.err(SmilesErrorKind::UnexpectedChar('.')));
                    }
                    self.prev = None;
                    self.i += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() {
                        return Err(self.err(SmilesErrorKind::NoPrecedingAtom));
                    }
                    if self.pending.is_some() {
                        return Err(self.err(SmilesErrorKind::UnexpectedChar(c as char)));
                    }
                    let kind = match c {
                        b'=' => BondKind::Double,
                        b'#' => BondKind::Triple,
                        b':' => BondKind::Aromatic,
                        b'/' | b'\\' => {
                            self.stereo_warning();
                            BondKind::Single
                        }
                        _ => BondKind::Single,
                    };
                    self.pending = Some((kind, self.i));
                    self.i += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => self.bracket_atom()?,
                _ => self.organic_atom()?,
            }
        }
        if let Some((_, pos)) = self.pending {
            return Err(SmilesError::new(pos, SmilesErrorKind::UnexpectedEnd));
        }
        if let Some((_, pos)) = self.branches.last() {
            return Err(SmilesError::new(*pos, SmilesErrorKind::UnclosedBranch));
        }
        if let Some((num, (_, _, pos))) = self.rings.iter().next() {
            return Err(SmilesError::new(*pos, SmilesErrorKind::UnclosedRing(*num)));
        }
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let start = self.i;
        let prev = self.prev.ok_or_else(|| self.err(SmilesErrorKind::NoPrecedingAtom))?;
        let num = if self.peek() == Some(b'%') {
            self.i += 1;
            let d: Vec<u8> = self.s.iter().skip(self.i).take(2).copied().collect();
            if d.len() < 2 || !d.iter().all(u8::is_ascii_digit) {
                return Err(self.err(SmilesErrorKind::UnexpectedEnd));
            }
            self.i += 2;
            ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32
        } else {
            let d = self.peek().unwrap() - b'0';
            self.i += 1;
            d as u32
        };
        let kind = self.pending.take().map(|(k, _)| k).unwrap_or(BondKind::Unspecified);
        match self.rings.remove(&num) {
            Some((opener, open_kind, _)) => {
                let merged = match (open_kind, kind) {
                    (BondKind::Unspecified, k) | (k, BondKind::Unspecified) => k,
                    (a, b) if a == b => a,
                    _ => return Err(SmilesError::new(start, SmilesErrorKind::RingBondMismatch)),
                };
                if opener == prev {
                    return Err(SmilesError::new(start, GraphError::SelfBond(0, prev).into()));
                }
                self.bonds.push((opener, prev, merged));
            }
            None => {
                self.rings.insert(num, (prev, kind, start));
            }
        }
        Ok(())
    }

    fn push_atom(&mut self, atom: RawAtom) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let kind = self.pending.take().map(|(k, _)| k).unwrap_or(BondKind::Unspecified);
            self.bonds.push((prev, idx, kind));
        }
        self.prev = Some(idx);
    }

    fn organic_atom(&mut self) -> Result<(), SmilesError> {
        let pos = self.i;
        let c = self.peek().unwrap();
        let next = self.s.get(self.i + 1).copied();
        let (element, aromatic, width) = match (c, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b's', _) => (Element::S, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b'B', _) | (b'b', _) => {
                return Err(self.err(SmilesErrorKind::UnsupportedElement("B".into())));
            }
            (b'*', _) => return Err(self.err(SmilesErrorKind::UnsupportedElement("*".into()))),
            _ => return Err(self.err(SmilesErrorKind::UnexpectedChar(c as char))),
        };
        self.i += width;
        self.push_atom(RawAtom { element, aromatic, bracket: false, hcount: 0, charge: 0, map: None, pos });
        Ok(())
    }

    fn read_number(&mut self) -> Option<u32> {
        let start = self.i;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[start..self.i]).ok()?.parse().ok()
    }

    fn bracket_atom(&mut self) -> Result<(), SmilesError> {
        let pos = self.i;
        self.i += 1;
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(self.err(SmilesErrorKind::Isotope));
        }
        let first = self.peek().ok_or_else(|| self.err(SmilesErrorKind::UnexpectedEnd))?;
        let (element, aromatic) = if first.is_ascii_lowercase() {
            self.i += 1;
            let sym = (first as char).to_ascii_uppercase().to_string();
            match Element::from_symbol(&sym) {
                Some(e) if matches!(e, Element::C | Element::N | Element::O | Element::S | Element::P) => (e, true),
                _ => return Err(SmilesError::new(pos + 1, SmilesErrorKind::UnsupportedElement((first as char).to_string()))),
            }
        } else if first.is_ascii_uppercase() {
            self.i += 1;
            let mut sym = (first as char).to_string();
            if let Some(c) = self.peek().filter(u8::is_ascii_lowercase) {
                sym.push(c as char);
                self.i += 1;
            }
            match Element::from_symbol(&sym) {
                Some(e) => (e, false),
                None => return Err(SmilesError::new(pos + 1, SmilesErrorKind::UnsupportedElement(sym))),
            }
        } else {
            return Err(self.err(SmilesErrorKind::UnexpectedChar(first as char)));
        };
        while self.peek() == Some(b'@') {
            self.stereo_warning();
            self.i += 1;
        }
        let mut hcount = 0u8;
        if self.peek() == Some(b'H') {
            self.i += 1;
            hcount = match self.peek() {
                Some(c) if c.is_ascii_digit() => self.read_number().unwrap_or(0) as u8,
                _ => 1,
            };
        }
        let mut charge: i8 = 0;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            let sign: i8 = if c == b'+' { 1 } else { -1 };
            self.i += 1;
            match self.peek() {
                Some(d) if d.is_ascii_digit() => charge += sign * self.read_number().unwrap_or(0) as i8,
                _ => charge += sign,
            }
        }
        let mut map = None;
        if self.peek() == Some(b':') {
            self.i += 1;
            map = Some(self.read_number().ok_or_else(|| self.err(SmilesErrorKind::UnexpectedEnd))?);
        }
        match self.peek() {
            Some(b']') => self.i += 1,
            Some(c) => return Err(self.err(SmilesErrorKind::UnexpectedChar(c as char))),
            None => return Err(self.err(SmilesErrorKind::UnexpectedEnd)),
        }
        self.push_atom(RawAtom { element, aromatic, bracket: true, hcount, charge, map, pos });
        Ok(())
    }

    fn build(self) -> Result<MoleculeSet, SmilesError> {
        let n = self.atoms.len();
        let mut kinds: Vec<BondKind> = self
            .bonds
            .iter()
            .map(|(a, b, k)| match k {
                BondKind::Unspecified if self.atoms[*a].aromatic && self.atoms[*b].aromatic => BondKind::Aromatic,
                BondKind::Unspecified => BondKind::Single,
                k => *k,
            })
            .collect();

        let mut sigma_sum = vec![0u8; n];
        for ((a, b, _), k) in self.bonds.iter().zip(&kinds) {
            let v = match k {
                BondKind::Double => 2,
                BondKind::Triple => 3,
                _ => 1,
            };
            sigma_sum[*a] += v;
            sigma_sum[*b] += v;
        }
        let has_aromatic_bond: Vec<bool> = (0..n)
            .map(|i| self.bonds.iter().zip(&kinds).any(|((a, b, _), k)| (*a == i || *b == i) && *k == BondKind::Aromatic))
            .collect();

        // Atoms that must receive one double bond from the aromatic system.
        let needs_pi: Vec<bool> = (0..n)
            .map(|i| {
                let at = &self.atoms[i];
                if !has_aromatic_bond[i] {
                    return false;
                }
                let v = at.element.allowed_valences(at.charge).first().copied().unwrap_or(0) as i32;
                let used = sigma_sum[i] as i32 + if at.bracket { at.hcount as i32 } else { 0 };
                v - used >= 1
            })
            .collect();

        let pi_edges: Vec<usize> = (0..self.bonds.len())
            .filter(|bi| {
                let (a, b, _) = self.bonds[*bi];
                kinds[*bi] == BondKind::Aromatic && needs_pi[a] && needs_pi[b]
            })
            .collect();
        let chosen = kekule_matching(n, &needs_pi, &pi_edges, &self.bonds)
            .ok_or_else(|| {
                let pos = (0..n).find(|i| needs_pi[*i]).map(|i| self.atoms[i].pos).unwrap_or(0);
                SmilesError::new(pos, SmilesErrorKind::Kekulize)
            })?;
        for bi in chosen {
            kinds[bi] = BondKind::Double;
        }

        let orders: Vec<(BondOrder, bool)> = kinds
            .iter()
            .map(|k| match k {
                BondKind::Double => (BondOrder::Double, false),
                BondKind::Triple => (BondOrder::Triple, false),
                BondKind::Aromatic => (BondOrder::Single, true),
                _ => (BondOrder::Single, false),
            })
            .collect();
        // Double bonds picked by kekulization keep the aromatic flag.
        let aromatic_flags: Vec<bool> = self
            .bonds
            .iter()
            .enumerate()
            .map(|(bi, (a, b, k))| orders[bi].1 || (*k == BondKind::Aromatic) || (*k == BondKind::Unspecified && self.atoms[*a].aromatic && self.atoms[*b].aromatic))
            .collect();

        let mut order_sum = vec![0u8; n];
        for ((a, b, _), (o, _)) in self.bonds.iter().zip(&orders) {
            order_sum[*a] += o.value();
            order_sum[*b] += o.value();
        }

        let mut atoms = Vec::with_capacity(n);
        for (i, raw) in self.atoms.iter().enumerate() {
            let mut atom = Atom::new(raw.element);
            atom.formal_charge = raw.charge;
            atom.map_number = raw.map;
            let valence_err = || SmilesError::new(raw.pos, SmilesErrorKind::Valence { element: raw.element });
            if raw.bracket {
                atom.implicit_hydrogens = raw.hcount;
                let used = order_sum[i] + raw.hcount;
                atom.radical_electrons = raw.element.inferred_radicals(raw.charge, used).ok_or_else(valence_err)?;
            } else {
                let valences = if raw.aromatic {
                    &raw.element.default_valences()[..1]
                } else {
                    raw.element.default_valences()
                };
                let v = valences.iter().find(|v| **v >= order_sum[i]).ok_or_else(valence_err)?;
                atom.implicit_hydrogens = v - order_sum[i];
            }
            atoms.push(atom);
        }

        // Split into connected components, ordered by first atom.
        let mut comp = vec![usize::MAX; n];
        let mut ncomp = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = ncomp;
            while let Some(u) = stack.pop() {
                for (a, b, _) in &self.bonds {
                    let v = if *a == u {
                        *b
                    } else if *b == u {
                        *a
                    } else {
                        continue;
                    };
                    if comp[v] == usize::MAX {
                        comp[v] = ncomp;
                        stack.push(v);
                    }
                }
            }
            ncomp += 1;
        }
        let mut local = vec![0usize; n];
        let mut comp_atoms: Vec<Vec<Atom>> = vec![Vec::new(); ncomp];
        for i in 0..n {
            local[i] = comp_atoms[comp[i]].len();
            comp_atoms[comp[i]].push(atoms[i].clone());
        }
        let mut comp_bonds: Vec<Vec<Bond>> = vec![Vec::new(); ncomp];
        for (bi, (a, b, _)) in self.bonds.iter().enumerate() {
            comp_bonds[comp[*a]].push(Bond {
                a: local[*a],
                b: local[*b],
                order: orders[bi].0,
                aromatic_source: aromatic_flags[bi],
            });
        }
        let mut molecules = Vec::with_capacity(ncomp);
        for (c, (atoms, bonds)) in comp_atoms.into_iter().zip(comp_bonds).enumerate() {
            let first = (0..n).find(|i| comp[*i] == c).unwrap();
            let m = Molecule::new(atoms, bonds).map_err(|e| {
                let pos = match &e {
                    GraphError::Valence { index, .. } | GraphError::TooManyRadicals { index, .. } => {
                        (0..n).filter(|i| comp[*i] == c).nth(*index).map(|i| self.atoms[i].pos).unwrap_or(0)
                    }
                    _ => self.atoms[first].pos,
                };
                SmilesError::new(pos, e.into())
            })?;
            molecules.push(m);
        }
        MoleculeSet::new(molecules, Role::Reactants).map_err(|e| SmilesError::new(0, e.into()))
    }
}

/// Perfect matching of `needs_pi` atoms over candidate bonds, by backtracking
/// on the most constrained atom first. Returns chosen bond indices.
fn kekule_matching(
    n: usize,
    needs_pi: &[bool],
    edges: &[usize],
    bonds: &[(usize, usize, BondKind)],
) -> Option<Vec<usize>> {
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &bi in edges {
        let (a, b, _) = bonds[bi];
        incident[a].push((b, bi));
        incident[b].push((a, bi));
    }
    let mut matched: Vec<Option<usize>> = vec![None; n];
    let mut chosen = Vec::new();
    let mut budget = 200_000usize;
    fn solve(
        needs_pi: &[bool],
        incident: &[Vec<(usize, usize)>],
        matched: &mut Vec<Option<usize>>,
        chosen: &mut Vec<usize>,
        budget: &mut usize,
    ) -> bool {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let mut best: Option<(usize, usize)> = None;
        for u in 0..needs_pi.len() {
            if !needs_pi[u] || matched[u].is_some() {
                continue;
            }
            let options = incident[u].iter().filter(|(v, _)| matched[*v].is_none()).count();
            if best.map_or(true, |(_, o)| options < o) {
                best = Some((u, options));
            }
        }
        let Some((u, options)) = best else { return true };
        if options == 0 {
            return false;
        }
        for &(v, bi) in &incident[u] {
            if matched[v].is_some() {
                continue;
            }
            matched[u] = Some(v);
            matched[v] = Some(u);
            chosen.push(bi);
            if solve(needs_pi, incident, matched, chosen, budget) {
                return true;
            }
            chosen.pop();
            matched[u] = None;
            matched[v] = None;
        }
        false
    }
    solve(needs_pi, &incident, &mut matched, &mut chosen, &mut budget).then_some(chosen)
}
