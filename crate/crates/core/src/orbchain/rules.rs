//! Chemistry filters applied to generated steps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::candidates::MechanisticStep;
use crate::chemgraph::{Element, Molecule};

/// Longest path considered when looking for small bridged rings.
const MAX_BRIDGE_PATH: usize = 6;
/// Largest ring size for which a bridgehead double bond is rejected.
const BREDT_RING_LIMIT: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub bredt: bool,
}

impl RuleSet {
    pub fn all() -> Self {
        RuleSet { bredt: true }
    }

    pub fn none() -> Self {
        RuleSet { bredt: false }
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::all()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleViolation {
    #[error("Bredt's rule: double bond at bridgehead atom {map}")]
    Bredt { map: u32 },
}

pub fn check_rules(step: &MechanisticStep, rules: &RuleSet) -> Result<(), RuleViolation> {
    if rules.bredt {
        for m in &step.products.molecules {
            if let Some(i) = bredt_violation(m) {
                return Err(RuleViolation::Bredt { map: m.atom(i).map_number.unwrap_or(0) });
            }
        }
    }
    Ok(())
}

/// Index of a double-bonded bridgehead in a small bridged bicyclic system:
/// an atom joined to another atom by three internally disjoint paths of at
/// least two bonds, where the two smallest rings have at most seven members.
pub fn bredt_violation(m: &Molecule) -> Option<usize> {
    let heavy = |i: usize| m.atom(i).element != Element::H;
    for u in 0..m.len() {
        let has_double = m.neighbors(u).iter().any(|(_, b)| m.bonds()[*b].order.value() >= 2);
        if !has_double || m.heavy_degree(u) < 3 {
            continue;
        }
        for w in 0..m.len() {
            if w == u || !heavy(w) || m.heavy_degree(w) < 3 {
                continue;
            }
            let paths = simple_paths(m, u, w, MAX_BRIDGE_PATH);
            if small_bridged(&paths) {
                return Some(u);
            }
        }
    }
    None
}

fn simple_paths(m: &Molecule, from: usize, to: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = vec![from];
    let mut on_path = vec![false; m.len()];
    on_path[from] = true;
    fn go(m: &Molecule, to: usize, max_len: usize, path: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == to {
            out.push(path.clone());
            return;
        }
        if path.len() > max_len {
            return;
        }
        for &(v, _) in m.neighbors(u) {
            if on[v] || m.atom(v).element == Element::H {
                continue;
            }
            on[v] = true;
            path.push(v);
            go(m, to, max_len, path, on, out);
            path.pop();
            on[v] = false;
        }
    }
    go(m, to, max_len, &mut path, &mut on_path, &mut out);
    out
}

fn small_bridged(paths: &[Vec<usize>]) -> bool {
    let long: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() >= 3).collect();
    let interior = |p: &Vec<usize>| p[1..p.len() - 1].to_vec();
    for i in 0..long.len() {
        for j in i + 1..long.len() {
            if shares(&interior(long[i]), &interior(long[j])) {
                continue;
            }
            for k in j + 1..long.len() {
                let ik = interior(long[k]);
                if shares(&interior(long[i]), &ik) || shares(&interior(long[j]), &ik) {
                    continue;
                }
                let mut lens = [long[i].len() - 1, long[j].len() - 1, long[k].len() - 1];
                lens.sort_unstable();
                if lens[0] + lens[1] <= BREDT_RING_LIMIT && lens[0] + lens[2] <= BREDT_RING_LIMIT {
                    return true;
                }
            }
        }
    }
    false
}

fn shares(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|x| b.contains(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    fn violates(s: &str) -> bool {
        bredt_violation(&parse_smiles(s).unwrap().molecules[0]).is_some()
    }

    #[test]
    fn bridgehead_alkene_in_norbornane_skeleton() {
        // Bicyclo[2.2.1]hept-1-ene: the bridgehead carries the double bond.
        assert!(violates("C12=CCC(C1)CC2"));
    }

    #[test]
    fn ordinary_alkenes_pass() {
        assert!(!violates("C1CC2C=CC1C2"));
        assert!(!violates("CC=CC"));
        assert!(!violates("c1ccc2ccccc2c1"));
        assert!(!violates("C1=CCCC2CCCCC12"));
    }
}
