use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chemgraph::{Element, ExplicitSet, Molecule, MoleculeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitalKind {
    LonePair,
    Somo,
    EmptyP,
    Sigma,
    SigmaStar,
    Pi,
    PiStar,
}

impl OrbitalKind {
    pub fn name(self) -> &'static str {
        match self {
            OrbitalKind::LonePair => "lone_pair",
            OrbitalKind::Somo => "somo",
            OrbitalKind::EmptyP => "empty_p",
            OrbitalKind::Sigma => "sigma",
            OrbitalKind::SigmaStar => "sigma_star",
            OrbitalKind::Pi => "pi",
            OrbitalKind::PiStar => "pi_star",
        }
    }

    pub fn electrons(self) -> u8 {
        match self {
            OrbitalKind::LonePair | OrbitalKind::Sigma | OrbitalKind::Pi => 2,
            OrbitalKind::Somo => 1,
            OrbitalKind::EmptyP | OrbitalKind::SigmaStar | OrbitalKind::PiStar => 0,
        }
    }

    pub fn is_bond(self) -> bool {
        matches!(self, OrbitalKind::Sigma | OrbitalKind::SigmaStar | OrbitalKind::Pi | OrbitalKind::PiStar)
    }
}

/// An idealized molecular orbital `(a, e, n, c)`. Atoms are referenced by
/// map number.
///
/// For bond orbitals taking part in an interaction, `atom` is the end that
/// ends up holding the unpaired electron and `neighbor` is the end attacked
/// by the partner orbital.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MolecularOrbital {
    pub atom: u32,
    pub electrons: u8,
    pub neighbor: Option<u32>,
    pub kind: OrbitalKind,
    /// Conjugated orbitals following this one, alternating empty and filled.
    pub chain: Vec<MolecularOrbital>,
}

impl MolecularOrbital {
    pub fn on_atom(atom: u32, kind: OrbitalKind) -> Self {
        MolecularOrbital { atom, electrons: kind.electrons(), neighbor: None, kind, chain: Vec::new() }
    }

    pub fn on_bond(atom: u32, neighbor: u32, kind: OrbitalKind) -> Self {
        MolecularOrbital { atom, electrons: kind.electrons(), neighbor: Some(neighbor), kind, chain: Vec::new() }
    }

    pub fn is_bond(&self) -> bool {
        self.neighbor.is_some()
    }

    /// Same orbital with its two ends swapped; chained orbitals have a fixed
    /// direction and are returned unchanged.
    pub fn flipped(&self) -> Self {
        match self.neighbor {
            Some(n) if self.chain.is_empty() => MolecularOrbital { atom: n, neighbor: Some(self.atom), ..self.clone() },
            _ => self.clone(),
        }
    }

    /// Atom that carries the unpaired electron after the interaction.
    pub fn terminal_atom(&self) -> u32 {
        match self.chain.last() {
            Some(last) => last.neighbor.unwrap_or(last.atom),
            None => self.atom,
        }
    }

    pub fn atoms(&self) -> Vec<u32> {
        let mut out = vec![self.atom];
        out.extend(self.neighbor);
        for c in &self.chain {
            out.push(c.atom);
            out.extend(c.neighbor);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `kind@atom(neighbor)` followed by `>`-joined chain members.
    pub fn designator(&self) -> String {
        let mut s = match self.neighbor {
            Some(n) => format!("{}@{}({})", self.kind.name(), self.atom, n),
            None => format!("{}@{}", self.kind.name(), self.atom),
        };
        for c in &self.chain {
            s.push('>');
            s.push_str(&c.designator());
        }
        s
    }
}

impl fmt::Display for MolecularOrbital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.designator())
    }
}

fn map_of(m: &Molecule, i: usize) -> u32 {
    m.atom(i).map_number.expect("explicit sets are fully mapped")
}

/// All idealized orbitals of an explicit reactant set: per atom one SOMO per
/// unpaired electron, lone pairs and empty valence orbitals; per bond a σ/σ*
/// pair and one π/π* pair per π component; and conjugated π orbitals carrying
/// a chain `[π*(B,C), π(C,D)]` for every `A=B-C=D` path.
pub fn enumerate_mos(r: &ExplicitSet) -> Vec<MolecularOrbital> {
    enumerate_set(&r.set)
}

pub(crate) fn enumerate_set(ms: &MoleculeSet) -> Vec<MolecularOrbital> {
    let mut out = Vec::new();
    for m in &ms.molecules {
        for i in 0..m.len() {
            let map = map_of(m, i);
            for _ in 0..m.atom(i).radical_electrons {
                out.push(MolecularOrbital::on_atom(map, OrbitalKind::Somo));
            }
            for _ in 0..m.lone_pairs(i) {
                out.push(MolecularOrbital::on_atom(map, OrbitalKind::LonePair));
            }
            for _ in 0..m.empty_orbitals(i) {
                out.push(MolecularOrbital::on_atom(map, OrbitalKind::EmptyP));
            }
        }
        for b in m.bonds() {
            let (x, y) = (map_of(m, b.a), map_of(m, b.b));
            let (lo, hi) = (x.min(y), x.max(y));
            out.push(MolecularOrbital::on_bond(lo, hi, OrbitalKind::Sigma));
            out.push(MolecularOrbital::on_bond(lo, hi, OrbitalKind::SigmaStar));
            for _ in 1..b.order.value() {
                out.push(MolecularOrbital::on_bond(lo, hi, OrbitalKind::Pi));
                out.push(MolecularOrbital::on_bond(lo, hi, OrbitalKind::PiStar));
            }
        }
        out.extend(conjugated_pis(m));
    }
    out
}

/// π(A=B) orbitals extended through a single bond B-C into π(C=D). The
/// orbital is oriented with `neighbor` = A (attacked) and `atom` = B.
fn conjugated_pis(m: &Molecule) -> Vec<MolecularOrbital> {
    let mut out = Vec::new();
    for b in m.bonds() {
        if b.order.value() != 2 {
            continue;
        }
        for (a_idx, b_idx) in [(b.a, b.b), (b.b, b.a)] {
            for &(c_idx, bc) in m.neighbors(b_idx) {
                if c_idx == a_idx || m.bonds()[bc].order.value() != 1 || m.atom(c_idx).element == Element::H {
                    continue;
                }
                for &(d_idx, cd) in m.neighbors(c_idx) {
                    if d_idx == b_idx || d_idx == a_idx || m.bonds()[cd].order.value() != 2 {
                        continue;
                    }
                    let (a, bm, c, d) = (map_of(m, a_idx), map_of(m, b_idx), map_of(m, c_idx), map_of(m, d_idx));
                    let mut mo = MolecularOrbital::on_bond(bm, a, OrbitalKind::Pi);
                    mo.chain = vec![
                        MolecularOrbital::on_bond(bm, c, OrbitalKind::PiStar),
                        MolecularOrbital::on_bond(c, d, OrbitalKind::Pi),
                    ];
                    out.push(mo);
                }
            }
        }
    }
    out
}
