//! Small-ring perception by shortest alternative paths.

use std::collections::{BTreeSet, VecDeque};

use super::molecule::Molecule;

/// Shortest path from `from` to `to` that avoids bond `skip`, if it has at
/// most `max_len` bonds. Returns the atom sequence.
fn shortest_path_avoiding(m: &Molecule, from: usize, to: usize, skip: usize, max_len: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; m.len()];
    let mut dist = vec![usize::MAX; m.len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        if dist[u] >= max_len {
            continue;
        }
        for &(v, b) in m.neighbors(u) {
            if b == skip || dist[v] != usize::MAX {
                continue;
            }
            dist[v] = dist[u] + 1;
            prev[v] = u;
            queue.push_back(v);
        }
    }
    if dist[to] == usize::MAX {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// Smallest ring through each bond, up to `max_size` atoms, deduplicated.
/// Each ring is its sorted atom list.
pub fn small_rings(m: &Molecule, max_size: usize) -> Vec<Vec<usize>> {
    let mut out: BTreeSet<Vec<usize>> = BTreeSet::new();
    for (bi, b) in m.bonds().iter().enumerate() {
        if let Some(mut path) = shortest_path_avoiding(m, b.a, b.b, bi, max_size.saturating_sub(1)) {
            path.sort_unstable();
            out.insert(path);
        }
    }
    out.into_iter().collect()
}

/// Size of the smallest ring containing atom `i`, if at most `max_size`.
pub fn smallest_ring_size(m: &Molecule, i: usize, max_size: usize) -> Option<usize> {
    m.neighbors(i)
        .iter()
        .filter_map(|&(v, b)| shortest_path_avoiding(m, i, v, b, max_size.saturating_sub(1)).map(|p| p.len()))
        .min()
}

/// Smallest ring (atom list) through each bond at atom `i`, up to
/// `max_size` atoms.
pub fn rings_through(m: &Molecule, i: usize, max_size: usize) -> Vec<Vec<usize>> {
    m.neighbors(i)
        .iter()
        .filter_map(|&(v, b)| shortest_path_avoiding(m, i, v, b, max_size.saturating_sub(1)))
        .collect()
}

/// Whether atom `i` lies in a ring of at most `max_size` atoms in which every
/// atom carries a π bond.
pub fn in_conjugated_ring(m: &Molecule, i: usize, max_size: usize) -> bool {
    rings_through(m, i, max_size).iter().any(|r| r.iter().all(|&j| m.pi_bond_count(j) > 0))
}

/// Number of bonds at atom `i` that lie in a ring of at most `max_size` atoms.
pub fn ring_bond_count(m: &Molecule, i: usize, max_size: usize) -> usize {
    m.neighbors(i)
        .iter()
        .filter(|&&(v, b)| shortest_path_avoiding(m, i, v, b, max_size.saturating_sub(1)).is_some())
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    #[test]
    fn naphthalene_rings() {
        let m = &parse_smiles("c1ccc2ccccc2c1").unwrap().molecules[0];
        let rings = small_rings(m, 8);
        assert_eq!(rings.len(), 2);
        assert!(rings.iter().all(|r| r.len() == 6));
        assert_eq!(smallest_ring_size(m, 0, 8), Some(6));
        assert!(in_conjugated_ring(m, 0, 7));
        let cyclohexene = &parse_smiles("C1=CCCCC1").unwrap().molecules[0];
        assert!(!in_conjugated_ring(cyclohexene, 0, 7));
    }

    #[test]
    fn chains_have_no_rings() {
        let m = &parse_smiles("CCCC").unwrap().molecules[0];
        assert!(small_rings(m, 8).is_empty());
        assert_eq!(smallest_ring_size(m, 1, 8), None);
        assert_eq!(ring_bond_count(m, 1, 8), 0);
    }
}
