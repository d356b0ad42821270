//! Independent checks of pathway tree shape, context bookkeeping and
//! conservation.

use std::collections::BTreeMap;

use rmech_core::chemgraph::{make_explicit, parse_smiles, write_molecules, MoleculeSet, WriteOptions};
use rmech_core::pathway::{ContextSpec, PathwayTree};

fn canon_one(ms: &MoleculeSet, i: usize) -> String {
    write_molecules(std::slice::from_ref(&ms.molecules[i]), &WriteOptions::new(true, false))
}

fn molecule_counts(smiles: &str) -> BTreeMap<String, usize> {
    let ms = parse_smiles(smiles).unwrap();
    let mut out = BTreeMap::new();
    for i in 0..ms.molecules.len() {
        *out.entry(canon_one(&ms, i)).or_insert(0) += 1;
    }
    out
}

/// Element symbol counts with hydrogens made explicit.
pub fn composition(smiles: &str) -> BTreeMap<String, usize> {
    let ex = make_explicit(&parse_smiles(smiles).unwrap());
    let mut out = BTreeMap::new();
    for m in &ex.set.molecules {
        for a in m.atoms() {
            *out.entry(a.element.symbol().to_string()).or_insert(0) += 1;
        }
    }
    out
}

fn add(into: &mut BTreeMap<String, usize>, other: &BTreeMap<String, usize>, times: usize) {
    for (k, v) in other {
        *into.entry(k.clone()).or_insert(0) += v * times;
    }
}

/// `Σ_{d=0..depth} breadth^d`, in u128 so it cannot wrap.
pub fn geometric_bound(depth: usize, breadth: usize) -> u128 {
    (0..=depth as u32).map(|d| (breadth as u128).pow(d)).sum()
}

/// Checks every structural and bookkeeping property of a tree built by
/// level-wise expansion. Returns the first violation.
pub fn check_tree(tree: &PathwayTree, context: &[ContextSpec]) -> Result<(), String> {
    let cfg = &tree.config;
    let nodes = &tree.nodes;
    let freq: BTreeMap<String, u32> = context
        .iter()
        .map(|c| {
            let ms = parse_smiles(&c.smiles).unwrap();
            (canon_one(&ms, 0), c.frequency)
        })
        .fold(BTreeMap::new(), |mut acc, (k, f)| {
            *acc.entry(k).or_insert(0) += f;
            acc
        });

    if nodes.is_empty() {
        return Err("empty tree".into());
    }
    if (nodes.len() as u128) > geometric_bound(cfg.depth, cfg.breadth) {
        return Err(format!("{} nodes exceed the geometric bound", nodes.len()));
    }
    if nodes.len() > cfg.node_budget {
        return Err(format!("{} nodes exceed the budget {}", nodes.len(), cfg.node_budget));
    }
    let root = &nodes[0];
    if root.depth != 0 || root.parent.is_some() || root.step.is_some() {
        return Err("root must have depth 0 and no step".into());
    }

    for (k, n) in nodes.iter().enumerate() {
        if n.id != k {
            return Err(format!("node {k} has id {}", n.id));
        }
        if k > 0 && nodes[k - 1].depth > n.depth {
            return Err(format!("node {k} at depth {} created after a deeper node", n.depth));
        }
        if n.children.len() > cfg.breadth {
            return Err(format!("node {k} has {} children", n.children.len()));
        }
        if n.depth > cfg.depth {
            return Err(format!("node {k} beyond depth"));
        }
        for (key, used) in &n.inserted {
            let allowed = freq.get(key).copied().unwrap_or(0);
            if *used > allowed {
                return Err(format!("node {k}: {key} inserted {used} times, frequency {allowed}"));
            }
        }
        let Some(p) = n.parent else { continue };
        let parent = &nodes[p];
        if p >= k || n.depth != parent.depth + 1 || !parent.children.contains(&k) {
            return Err(format!("node {k} is not a proper child of {p}"));
        }
        let step = n.step.as_ref().ok_or(format!("node {k} has no step"))?;
        if n.score < cfg.score_threshold {
            return Err(format!("node {k} score {} below threshold", n.score));
        }
        if (n.cumulative_score - parent.cumulative_score * n.score).abs() > 1e-12 {
            return Err(format!("node {k} cumulative score is not the product along the path"));
        }

        // The step conserves atom maps and elements.
        let mut rmaps: Vec<u32> = step.reactants.set.molecules.iter().flat_map(|m| m.map_numbers()).collect();
        let mut pmaps: Vec<u32> = step.products.molecules.iter().flat_map(|m| m.map_numbers()).collect();
        rmaps.sort_unstable();
        pmaps.sort_unstable();
        if rmaps != pmaps {
            return Err(format!("node {k}: step does not conserve atom maps"));
        }

        // State conservation modulo ledger-accounted insertions.
        let mut expected = composition(&parent.state);
        let mut newly: BTreeMap<String, u32> = BTreeMap::new();
        for key in freq.keys() {
            let before = parent.inserted.get(key).copied().unwrap_or(0);
            let after = n.inserted.get(key).copied().unwrap_or(0);
            if after < before {
                return Err(format!("node {k}: insertions of {key} decreased"));
            }
            if after > before {
                newly.insert(key.clone(), after - before);
                add(&mut expected, &composition(key), (after - before) as usize);
            }
        }
        if composition(&n.state) != expected {
            return Err(format!("node {k}: composition differs from parent plus insertions"));
        }

        // Insertions only replace consumed context molecules.
        let consumed = molecule_counts(&parent.state);
        let produced = molecule_counts(&step.product_smiles);
        let state = molecule_counts(&n.state);
        for (key, extra) in &newly {
            let had = consumed.get(key).copied().unwrap_or(0);
            let kept = produced.get(key).copied().unwrap_or(0);
            if kept >= had {
                return Err(format!("node {k}: {key} reinserted but not consumed"));
            }
            if state.get(key).copied().unwrap_or(0) != kept + *extra as usize {
                return Err(format!("node {k}: {key} count does not match reinsertions"));
            }
        }
    }
    Ok(())
}
