//! Canonical atom ranking and SMILES writing.
//!
//! Canonical output is produced by partition refinement with
//! individualization: ties left after refinement are broken every possible
//! way (up to a leaf budget) and the lexicographically smallest string wins.
//! Bonds of alternating ring systems are treated as one "resonant" class so
//! that different Kekulé structures of the same ring write identically.

use std::fmt::Write as _;

use super::element::Element;
use super::molecule::{Molecule, MoleculeSet};

/// Leaves explored per molecule before the search settles for the best so far.
const LEAF_BUDGET: usize = 512;

const RESONANT: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteOptions {
    pub canonical: bool,
    pub keep_maps: bool,
    /// Fold plain hydrogens (neutral, non-radical, bonded to one heavy atom
    /// and not carrying a kept map) into their parent's H count.
    pub fold_hydrogens: bool,
    /// Always bracket atoms and annotate radicals; used for substructure
    /// strings of truncated environments.
    pub fragment: bool,
}

impl WriteOptions {
    pub fn new(canonical: bool, keep_maps: bool) -> Self {
        WriteOptions { canonical, keep_maps, fold_hydrogens: true, fragment: false }
    }
}

/// Writes a molecule set as dot-separated SMILES. With `canonical` the
/// output does not depend on atom or molecule order.
pub fn write_smiles(ms: &MoleculeSet, canonical: bool, keep_maps: bool) -> String {
    write_molecules(&ms.molecules, &WriteOptions::new(canonical, keep_maps))
}

pub fn write_molecules(mols: &[Molecule], opts: &WriteOptions) -> String {
    let mut parts: Vec<String> = mols.iter().map(|m| write_molecule(m, opts)).collect();
    if opts.canonical {
        parts.sort();
    }
    parts.join(".")
}

pub fn write_molecule(m: &Molecule, opts: &WriteOptions) -> String {
    let all: Vec<usize> = (0..m.len()).collect();
    let view = View::build(m, &all, None, opts);
    view.write(opts)
}

/// Writes the substructure spanned by `atoms` (and the bonds among them
/// listed in `bonds`, or all such bonds if `None`) in fragment notation.
pub fn write_fragment(m: &Molecule, atoms: &[usize], bonds: Option<&[usize]>, canonical: bool) -> String {
    let opts = WriteOptions { canonical, keep_maps: false, fold_hydrogens: true, fragment: true };
    View::build(m, atoms, bonds, &opts).write(&opts)
}

/// Per-atom symmetry classes from iterative neighbourhood refinement.
/// Atom maps are ignored; equivalent atoms share a rank. Ranks are dense,
/// starting at 0.
pub fn canonical_ranks(m: &Molecule) -> Vec<u32> {
    let all: Vec<usize> = (0..m.len()).collect();
    let opts = WriteOptions { canonical: true, keep_maps: false, fold_hydrogens: false, fragment: false };
    let view = View::build(m, &all, None, &opts);
    let mut ranks = view.initial_ranks();
    view.refine(&mut ranks);
    let mut distinct: Vec<u32> = ranks.clone();
    distinct.sort_unstable();
    distinct.dedup();
    ranks.iter().map(|r| distinct.binary_search(r).unwrap() as u32).collect()
}

struct View {
    element: Vec<Element>,
    charge: Vec<i8>,
    radicals: Vec<u8>,
    hydrogens: Vec<u8>,
    map: Vec<Option<u32>>,
    edges: Vec<(usize, usize, u8)>,
    adj: Vec<Vec<(usize, usize)>>,
    resonant: Vec<bool>,
}

impl View {
    fn build(m: &Molecule, atoms: &[usize], bonds: Option<&[usize]>, opts: &WriteOptions) -> View {
        let mut local = vec![usize::MAX; m.len()];
        for (k, &i) in atoms.iter().enumerate() {
            local[i] = k;
        }
        let bond_ids: Vec<usize> = match bonds {
            Some(b) => b.to_vec(),
            None => (0..m.bonds().len())
                .filter(|bi| {
                    let b = &m.bonds()[*bi];
                    local[b.a] != usize::MAX && local[b.b] != usize::MAX
                })
                .collect(),
        };
        let mut degree = vec![0usize; atoms.len()];
        for &bi in &bond_ids {
            let b = &m.bonds()[bi];
            degree[local[b.a]] += 1;
            degree[local[b.b]] += 1;
        }
        // Decide which hydrogens fold into a neighbour.
        let mut folded = vec![false; atoms.len()];
        let mut extra_h = vec![0u8; atoms.len()];
        if opts.fold_hydrogens {
            for &bi in &bond_ids {
                let b = &m.bonds()[bi];
                for (h, heavy) in [(b.a, b.b), (b.b, b.a)] {
                    let at = m.atom(h);
                    let parent = m.atom(heavy);
                    if at.element == Element::H
                        && parent.element != Element::H
                        && at.formal_charge == 0
                        && at.radical_electrons == 0
                        && at.implicit_hydrogens == 0
                        && degree[local[h]] == 1
                        && (at.map_number.is_none() || !opts.keep_maps)
                        && b.order.value() == 1
                    {
                        folded[local[h]] = true;
                        extra_h[local[heavy]] += 1;
                    }
                }
            }
        }
        let mut index = vec![usize::MAX; atoms.len()];
        let mut view = View {
            element: Vec::new(),
            charge: Vec::new(),
            radicals: Vec::new(),
            hydrogens: Vec::new(),
            map: Vec::new(),
            edges: Vec::new(),
            adj: Vec::new(),
            resonant: Vec::new(),
        };
        for (k, &i) in atoms.iter().enumerate() {
            if folded[k] {
                continue;
            }
            let at = m.atom(i);
            index[k] = view.element.len();
            view.element.push(at.element);
            view.charge.push(at.formal_charge);
            view.radicals.push(at.radical_electrons);
            view.hydrogens.push(at.implicit_hydrogens + extra_h[k]);
            view.map.push(if opts.keep_maps { at.map_number } else { None });
        }
        view.adj = vec![Vec::new(); view.element.len()];
        for &bi in &bond_ids {
            let b = &m.bonds()[bi];
            let (u, v) = (index[local[b.a]], index[local[b.b]]);
            if u == usize::MAX || v == usize::MAX {
                continue;
            }
            let e = view.edges.len();
            view.edges.push((u, v, b.order.value()));
            view.adj[u].push((v, e));
            view.adj[v].push((u, e));
        }
        view.resonant = view.resonant_edges();
        view
    }

    fn len(&self) -> usize {
        self.element.len()
    }

    /// Edges whose order may differ between Kekulé structures: non-bridge
    /// bonds joining atoms that each carry exactly one double bond, itself a
    /// non-bridge joining two such atoms.
    fn resonant_edges(&self) -> Vec<bool> {
        let bridges = self.bridges();
        let n = self.len();
        let mut mobile = vec![false; n];
        let mut partner = vec![usize::MAX; n];
        for u in 0..n {
            let mut doubles = 0;
            let mut triple = false;
            let mut double_edge = None;
            for &(v, e) in &self.adj[u] {
                match self.edges[e].2 {
                    2 => {
                        doubles += 1;
                        double_edge = Some(e);
                        partner[u] = v;
                    }
                    3 => triple = true,
                    _ => {}
                }
            }
            mobile[u] = doubles == 1 && !triple && !bridges[double_edge.unwrap()];
        }
        // The double bond itself must join two mobile atoms.
        loop {
            let drop: Vec<usize> = (0..n).filter(|&u| mobile[u] && !mobile[partner[u]]).collect();
            if drop.is_empty() {
                break;
            }
            drop.into_iter().for_each(|u| mobile[u] = false);
        }
        self.edges
            .iter()
            .enumerate()
            .map(|(e, (u, v, o))| *o <= 2 && !bridges[e] && mobile[*u] && mobile[*v])
            .collect()
    }

    fn bridges(&self) -> Vec<bool> {
        let n = self.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_bridge = vec![false; self.edges.len()];
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // Iterative DFS: (node, parent edge, next neighbour position).
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (u, pe, ref mut pos)) = stack.last_mut() {
                if *pos < self.adj[u].len() {
                    let (v, e) = self.adj[u][*pos];
                    *pos += 1;
                    if e == pe {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, e, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            is_bridge[pe] = true;
                        }
                    }
                }
            }
        }
        is_bridge
    }

    fn edge_label(&self, e: usize) -> u8 {
        if self.resonant[e] {
            RESONANT
        } else {
            self.edges[e].2
        }
    }

    /// Ranks are "number of atoms in strictly smaller classes".
    fn initial_ranks(&self) -> Vec<u32> {
        let keys: Vec<_> = (0..self.len())
            .map(|i| {
                (
                    self.element[i].ordinal(),
                    self.charge[i],
                    self.radicals[i],
                    self.hydrogens[i],
                    self.adj[i].len(),
                    self.map[i].unwrap_or(0),
                )
            })
            .collect();
        ranks_from_keys(&keys)
    }

    fn refine(&self, ranks: &mut Vec<u32>) {
        let mut classes = count_classes(ranks);
        loop {
            let keys: Vec<(u32, Vec<(u32, u8)>)> = (0..self.len())
                .map(|i| {
                    let mut nb: Vec<(u32, u8)> =
                        self.adj[i].iter().map(|(v, e)| (ranks[*v], self.edge_label(*e))).collect();
                    nb.sort_unstable();
                    (ranks[i], nb)
                })
                .collect();
            *ranks = ranks_from_keys(&keys);
            let now = count_classes(ranks);
            if now == classes {
                return;
            }
            classes = now;
        }
    }

    fn write(&self, opts: &WriteOptions) -> String {
        if self.len() == 0 {
            return String::new();
        }
        if !opts.canonical {
            let order: Vec<u32> = (0..self.len() as u32).collect();
            let orders: Vec<u8> = self.edges.iter().map(|e| e.2).collect();
            return self.emit(&order, &orders, opts);
        }
        let mut ranks = self.initial_ranks();
        let mut best: Option<String> = None;
        let mut budget = LEAF_BUDGET;
        self.search(&mut ranks, &mut best, &mut budget, opts);
        best.unwrap_or_default()
    }

    fn search(&self, ranks: &mut Vec<u32>, best: &mut Option<String>, budget: &mut usize, opts: &WriteOptions) {
        self.refine(ranks);
        let n = self.len();
        if count_classes(ranks) == n {
            let orders = self.kekule_orders(ranks);
            let s = self.emit(ranks, &orders, opts);
            if best.as_ref().map_or(true, |b| s < *b) {
                *best = Some(s);
            }
            *budget = budget.saturating_sub(1);
            return;
        }
        // First non-singleton class.
        let mut sizes = vec![0usize; n];
        for r in ranks.iter() {
            sizes[*r as usize] += 1;
        }
        let target = (0..n).find(|r| sizes[*r] > 1).unwrap() as u32;
        for atom in 0..n {
            if ranks[atom] != target {
                continue;
            }
            if *budget == 0 && best.is_some() {
                return;
            }
            let mut next = ranks.clone();
            for (j, r) in next.iter_mut().enumerate() {
                if *r == target && j != atom {
                    *r = target + 1;
                }
            }
            self.search(&mut next, best, budget, opts);
        }
    }

    /// Chooses a Kekulé structure for resonant edges, greedily preferring
    /// double bonds between low-ranked atoms.
    fn kekule_orders(&self, ranks: &[u32]) -> Vec<u8> {
        let mut orders: Vec<u8> = self.edges.iter().map(|e| e.2).collect();
        if !self.resonant.iter().any(|r| *r) {
            return orders;
        }
        let n = self.len();
        let mut needs = vec![false; n];
        let mut inc: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (e, (u, v, _)) in self.edges.iter().enumerate() {
            if self.resonant[e] {
                needs[*u] = true;
                needs[*v] = true;
                inc[*u].push((*v, e));
                inc[*v].push((*u, e));
                orders[e] = 1;
            }
        }
        for list in inc.iter_mut() {
            list.sort_by_key(|(v, _)| ranks[*v]);
        }
        let mut by_rank: Vec<usize> = (0..n).filter(|i| needs[*i]).collect();
        by_rank.sort_by_key(|i| ranks[*i]);
        let mut matched = vec![false; n];
        for &u in &by_rank {
            if matched[u] {
                continue;
            }
            for &(v, e) in &inc[u] {
                if matched[v] {
                    continue;
                }
                matched[u] = true;
                matched[v] = true;
                if perfect_matching_exists(&needs, &matched, &inc) {
                    orders[e] = 2;
                    break;
                }
                matched[u] = false;
                matched[v] = false;
            }
        }
        orders
    }

    fn atom_text(&self, i: usize, bond_sum: u8, opts: &WriteOptions) -> String {
        let el = self.element[i];
        let h = self.hydrogens[i];
        let default_h = el
            .default_valences()
            .iter()
            .find(|v| **v >= bond_sum)
            .map(|v| v - bond_sum);
        let bracket = opts.fragment
            || el == Element::H
            || self.charge[i] != 0
            || self.radicals[i] > 0
            || self.map[i].is_some()
            || default_h != Some(h);
        if !bracket {
            return el.symbol().to_string();
        }
        let mut s = String::from("[");
        s.push_str(el.symbol());
        match h {
            0 => {}
            1 => s.push('H'),
            k => {
                let _ = write!(s, "H{k}");
            }
        }
        match self.charge[i] {
            0 => {}
            1 => s.push('+'),
            -1 => s.push('-'),
            c if c > 0 => {
                let _ = write!(s, "+{c}");
            }
            c => {
                let _ = write!(s, "-{}", -c);
            }
        }
        if opts.fragment && self.radicals[i] > 0 {
            let _ = write!(s, "^{}", self.radicals[i]);
        }
        if let Some(m) = self.map[i] {
            let _ = write!(s, ":{m}");
        }
        s.push(']');
        s
    }

    /// Depth-first SMILES emission following `ranks` as the visiting order.
    fn emit(&self, ranks: &[u32], orders: &[u8], opts: &WriteOptions) -> String {
        let n = self.len();
        let mut sorted_adj: Vec<Vec<(usize, usize)>> = self.adj.clone();
        for list in sorted_adj.iter_mut() {
            list.sort_by_key(|(v, _)| ranks[*v]);
        }
        let mut bond_sum = vec![0u8; n];
        for (e, (u, v, _)) in self.edges.iter().enumerate() {
            bond_sum[*u] += orders[e];
            bond_sum[*v] += orders[e];
        }

        let mut visited = vec![false; n];
        let mut edge_seen = vec![false; self.edges.len()];
        let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        // Ring events per atom in discovery order: (edge, is_opening).
        let mut rings: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
        let mut out = String::new();

        let mut starts: Vec<usize> = (0..n).collect();
        starts.sort_by_key(|i| ranks[*i]);
        let mut first_component = true;
        for &start in &starts {
            if visited[start] {
                continue;
            }
            // Pre-pass: spanning tree and ring-closure bonds.
            let mut stack = vec![(start, usize::MAX, 0usize)];
            visited[start] = true;
            while let Some(&mut (u, pe, ref mut pos)) = stack.last_mut() {
                if *pos >= sorted_adj[u].len() {
                    stack.pop();
                    continue;
                }
                let (v, e) = sorted_adj[u][*pos];
                *pos += 1;
                if e == pe || edge_seen[e] {
                    continue;
                }
                edge_seen[e] = true;
                if visited[v] {
                    rings[v].push((e, true));
                    rings[u].push((e, false));
                } else {
                    visited[v] = true;
                    children[u].push((v, e));
                    stack.push((v, e, 0));
                }
            }
            if !first_component {
                out.push('.');
            }
            first_component = false;
            let mut digits: Vec<Option<usize>> = Vec::new();
            let mut edge_digit = vec![usize::MAX; self.edges.len()];
            self.emit_atom(start, &children, &rings, orders, &bond_sum, opts, &mut digits, &mut edge_digit, &mut out);
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn emit_atom(
        &self,
        u: usize,
        children: &[Vec<(usize, usize)>],
        rings: &[Vec<(usize, bool)>],
        orders: &[u8],
        bond_sum: &[u8],
        opts: &WriteOptions,
        digits: &mut Vec<Option<usize>>,
        edge_digit: &mut [usize],
        out: &mut String,
    ) {
        out.push_str(&self.atom_text(u, bond_sum[u], opts));
        // Closings first so their digits can be reused by openings here.
        for &(e, opening) in &rings[u] {
            if !opening {
                let d = edge_digit[e];
                digits[d] = None;
                push_digit(out, d);
            }
        }
        for &(e, opening) in &rings[u] {
            if opening {
                let d = match digits.iter().position(|x| x.is_none()) {
                    Some(d) => d,
                    None => {
                        digits.push(None);
                        digits.len() - 1
                    }
                };
                digits[d] = Some(e);
                edge_digit[e] = d;
                out.push_str(bond_symbol(orders[e]));
                push_digit(out, d);
            }
        }
        let kids = &children[u];
        for (k, &(v, e)) in kids.iter().enumerate() {
            let last = k + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push_str(bond_symbol(orders[e]));
            self.emit_atom(v, children, rings, orders, bond_sum, opts, digits, edge_digit, out);
            if !last {
                out.push(')');
            }
        }
    }
}

fn bond_symbol(order: u8) -> &'static str {
    match order {
        2 => "=",
        3 => "#",
        _ => "",
    }
}

fn push_digit(out: &mut String, d: usize) {
    let label = d + 1;
    if label < 10 {
        let _ = write!(out, "{label}");
    } else {
        let _ = write!(out, "%{label:02}");
    }
}

fn ranks_from_keys<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|a, b| keys[*a].cmp(&keys[*b]));
    let mut ranks = vec![0u32; keys.len()];
    let mut start = 0;
    for pos in 0..idx.len() {
        if pos > 0 && keys[idx[pos]] != keys[idx[pos - 1]] {
            start = pos;
        }
        ranks[idx[pos]] = start as u32;
    }
    ranks
}

fn count_classes(ranks: &[u32]) -> usize {
    let mut r = ranks.to_vec();
    r.sort_unstable();
    r.dedup();
    r.len()
}

fn perfect_matching_exists(needs: &[bool], matched: &[bool], inc: &[Vec<(usize, usize)>]) -> bool {
    let mut m = matched.to_vec();
    fn go(needs: &[bool], m: &mut Vec<bool>, inc: &[Vec<(usize, usize)>]) -> bool {
        let mut best: Option<(usize, usize)> = None;
        for u in 0..needs.len() {
            if !needs[u] || m[u] {
                continue;
            }
            let options = inc[u].iter().filter(|(v, _)| !m[*v]).count();
            if best.map_or(true, |(_, o)| options < o) {
                best = Some((u, options));
            }
        }
        let Some((u, options)) = best else { return true };
        if options == 0 {
            return false;
        }
        for &(v, _) in &inc[u] {
            if m[v] {
                continue;
            }
            m[u] = true;
            m[v] = true;
            if go(needs, m, inc) {
                return true;
            }
            m[u] = false;
            m[v] = false;
        }
        false
    }
    go(needs, &mut m, inc)
}
