//! Breadth-first expansion of mechanistic pathway trees and target search.

pub mod fixture;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fixture::{
    construct_case, default_cases, load_benchmark, run_benchmark, teacher_oracle, write_benchmark, BenchmarkCase, CaseResult,
    RecoverySummary,
};

use crate::chemgraph::{
    check_balance, make_explicit, parse_smiles, write_molecules, MassMode, Molecule, MoleculeSet, SmilesError,
    WriteOptions,
};
use crate::orbchain::{apply_arrows, MechanisticStep, RuleSet};
use crate::predictor::{Pipeline, PredictError, PredictOptions, StepSummary};

#[derive(Debug, Error)]
pub enum PathwayError {
    #[error("invalid search config: {field}: {message}")]
    Config { field: &'static str, message: String },
    #[error("unparseable molecule `{smiles}`: {source}")]
    Smiles {
        smiles: String,
        #[source]
        source: SmilesError,
    },
    #[error("no node {0}")]
    UnknownNode(usize),
    #[error("node {node} is at depth {depth}, the search stops at depth {max}")]
    BeyondDepth { node: usize, depth: usize, max: usize },
    #[error("node budget of {0} reached")]
    Budget(usize),
    #[error("replay of node {node} diverged: {message}")]
    ReplayMismatch { node: usize, message: String },
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("{path}: {} bad line(s): {}", .items.len(), .items.join("; "))]
    Fixture { path: String, items: Vec<String> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse(smiles: &str) -> Result<MoleculeSet, PathwayError> {
    parse_smiles(smiles).map_err(|source| PathwayError::Smiles { smiles: smiles.into(), source })
}

fn canonical_molecule(m: &Molecule) -> String {
    write_molecules(std::slice::from_ref(m), &WriteOptions::new(true, false))
}

fn canonical_set(ms: &MoleculeSet) -> String {
    write_molecules(&ms.molecules, &WriteOptions::new(true, false))
}

/// A reagent reinserted into a state each time a step consumes it, at most
/// `frequency` times along any path (the initial insertion included).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub smiles: String,
    pub frequency: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Target {
    Structure { smiles: String },
    Mass { mass: f64, #[serde(default = "default_tolerance")] tolerance: f64 },
}

pub const DEFAULT_MASS_TOLERANCE: f64 = 0.01;

fn default_tolerance() -> f64 {
    DEFAULT_MASS_TOLERANCE
}

impl Target {
    pub fn validate(&self) -> Result<(), PathwayError> {
        match self {
            Target::Structure { smiles } => {
                let ms = parse(smiles)?;
                if ms.len() != 1 {
                    return Err(PathwayError::Config { field: "targets", message: format!("`{smiles}` is not one molecule") });
                }
                Ok(())
            }
            Target::Mass { tolerance, .. } if *tolerance <= 0.0 => {
                Err(PathwayError::Config { field: "targets", message: "mass tolerance must be positive".into() })
            }
            Target::Mass { .. } => Ok(()),
        }
    }

    fn matcher(&self) -> Result<TargetMatcher, PathwayError> {
        self.validate()?;
        Ok(match self {
            Target::Structure { smiles } => TargetMatcher::Structure(canonical_set(&parse(smiles)?)),
            Target::Mass { mass, tolerance } => TargetMatcher::Mass(*mass, *tolerance),
        })
    }
}

enum TargetMatcher {
    Structure(String),
    Mass(f64, f64),
}

impl TargetMatcher {
    fn matches(&self, m: &Molecule, canonical: &str) -> bool {
        match self {
            TargetMatcher::Structure(s) => s == canonical,
            TargetMatcher::Mass(mass, tol) => (m.molecular_mass(MassMode::Monoisotopic) - mass).abs() <= *tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub depth: usize,
    pub breadth: usize,
    pub score_threshold: f64,
    pub rules: RuleSet,
    pub pipeline: String,
    pub node_budget: usize,
    pub k_atoms: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            depth: 3,
            breadth: 10,
            score_threshold: 0.0,
            rules: RuleSet::all(),
            pipeline: "contrastive".into(),
            node_budget: 2000,
            k_atoms: 10,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), PathwayError> {
        let bad = |field, message: &str| Err(PathwayError::Config { field, message: message.into() });
        if self.depth == 0 {
            return bad("depth", "must be at least 1");
        }
        if self.breadth == 0 {
            return bad("breadth", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return bad("score_threshold", "must lie in [0, 1]");
        }
        if self.node_budget == 0 {
            return bad("node_budget", "must be at least 1");
        }
        if self.k_atoms < 2 {
            return bad("k_atoms", "must be at least 2");
        }
        Ok(())
    }

    /// `Σ_{d=0..depth} breadth^d`, saturating.
    pub fn max_nodes(&self) -> usize {
        let mut total: usize = 0;
        let mut level: usize = 1;
        for _ in 0..=self.depth {
            total = total.saturating_add(level);
            level = level.saturating_mul(self.breadth);
        }
        total
    }

    fn predict_options(&self) -> PredictOptions {
        PredictOptions { top_n: self.breadth, k_atoms: self.k_atoms, rules: self.rules }
    }
}

#[derive(Debug, Clone)]
pub struct PathwayNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Canonical SMILES of the state, without maps.
    pub state: String,
    /// The step from the parent, on the parent's explicit numbering.
    pub step: Option<MechanisticStep>,
    pub score: f64,
    pub cumulative_score: f64,
    pub children: Vec<usize>,
    /// Context insertions along the path from the root, by canonical SMILES.
    pub inserted: BTreeMap<String, u32>,
    pub expanded: bool,
}

#[derive(Debug, Clone)]
pub struct PathwayTree {
    pub nodes: Vec<PathwayNode>,
    pub config: SearchConfig,
    pub context: Vec<ContextSpec>,
    /// Canonical context SMILES to allowed insertions.
    frequency: BTreeMap<String, u32>,
    /// (depth, state, insertions) of existing nodes, for merging.
    index: HashMap<(usize, String, Vec<u32>), usize>,
    pub truncated: bool,
}

impl PathwayTree {
    /// Root state: the reactants plus one copy of each context molecule not
    /// already present.
    pub fn new(reactants: &str, config: SearchConfig, context: Vec<ContextSpec>) -> Result<Self, PathwayError> {
        config.validate()?;
        let root = parse(reactants)?;
        if root.is_empty() {
            return Err(PathwayError::Config { field: "reactants", message: "no molecules".into() });
        }
        let mut frequency = BTreeMap::new();
        for c in &context {
            if c.frequency == 0 {
                return Err(PathwayError::Config { field: "context", message: format!("`{}` has frequency 0", c.smiles) });
            }
            let ms = parse(&c.smiles)?;
            if ms.len() != 1 {
                return Err(PathwayError::Config { field: "context", message: format!("`{}` is not one molecule", c.smiles) });
            }
            *frequency.entry(canonical_set(&ms)).or_insert(0) += c.frequency;
        }
        let mut molecules: Vec<String> = root.molecules.iter().map(canonical_molecule).collect();
        let mut inserted = BTreeMap::new();
        for c in frequency.keys() {
            if !molecules.contains(c) {
                molecules.push(c.clone());
                inserted.insert(c.clone(), 1);
            }
        }
        molecules.sort();
        let state = molecules.join(".");
        let mut tree = PathwayTree { nodes: Vec::new(), config, context, frequency, index: HashMap::new(), truncated: false };
        tree.push(PathwayNode {
            id: 0,
            parent: None,
            depth: 0,
            state,
            step: None,
            score: 1.0,
            cumulative_score: 1.0,
            children: Vec::new(),
            inserted,
            expanded: false,
        });
        Ok(tree)
    }

    fn ledger_key(&self, inserted: &BTreeMap<String, u32>) -> Vec<u32> {
        self.frequency.keys().map(|k| inserted.get(k).copied().unwrap_or(0)).collect()
    }

    fn push(&mut self, mut node: PathwayNode) -> usize {
        let id = self.nodes.len();
        node.id = id;
        let key = (node.depth, node.state.clone(), self.ledger_key(&node.inserted));
        self.index.insert(key, id);
        self.nodes.push(node);
        id
    }

    pub fn node(&self, id: usize) -> Result<&PathwayNode, PathwayError> {
        self.nodes.get(id).ok_or(PathwayError::UnknownNode(id))
    }

    /// Remaining reinsertions of each context molecule at a node.
    pub fn ledger(&self, id: usize) -> Result<BTreeMap<String, u32>, PathwayError> {
        let n = self.node(id)?;
        Ok(self
            .frequency
            .iter()
            .map(|(k, f)| (k.clone(), f - n.inserted.get(k).copied().unwrap_or(0)))
            .collect())
    }

    /// State after `step` from a node: all products, plus a fresh copy of
    /// each consumed context molecule the ledger still allows.
    fn child_state(&self, parent: &PathwayNode, step: &MechanisticStep) -> (String, BTreeMap<String, u32>) {
        let arrow_maps: Vec<u32> = step.arrows.maps();
        let mut inserted = parent.inserted.clone();
        let mut molecules: Vec<String> = step.products.molecules.iter().map(canonical_molecule).collect();
        for m in &step.reactants.set.molecules {
            if !m.map_numbers().any(|x| arrow_maps.contains(&x)) {
                continue;
            }
            let c = canonical_molecule(m);
            if let Some(&freq) = self.frequency.get(&c) {
                let used = inserted.entry(c.clone()).or_insert(0);
                if *used < freq {
                    *used += 1;
                    molecules.push(c);
                }
            }
        }
        inserted.retain(|_, v| *v > 0);
        molecules.sort();
        (molecules.join("."), inserted)
    }

    /// Expands one node with the pipeline's top `breadth` predictions that
    /// clear the threshold. Expanding a node twice returns the existing
    /// children.
    pub fn expand_node(&mut self, id: usize, pipeline: &dyn Pipeline) -> Result<Vec<usize>, PathwayError> {
        let node = self.node(id)?.clone();
        if node.expanded {
            return Ok(node.children);
        }
        if node.depth >= self.config.depth {
            return Err(PathwayError::BeyondDepth { node: id, depth: node.depth, max: self.config.depth });
        }
        let r = Arc::new(make_explicit(&parse(&node.state)?));
        let preds = pipeline.predict(&r, &self.config.predict_options())?;
        let mut children = Vec::new();
        for p in preds {
            if p.score < self.config.score_threshold {
                continue;
            }
            let (state, inserted) = self.child_state(&node, &p.step);
            let key = (node.depth + 1, state.clone(), self.ledger_key(&inserted));
            if self.index.contains_key(&key) {
                continue;
            }
            if self.nodes.len() >= self.config.node_budget {
                self.truncated = true;
                break;
            }
            let child = self.push(PathwayNode {
                id: 0,
                parent: Some(id),
                depth: node.depth + 1,
                state,
                score: p.score,
                cumulative_score: node.cumulative_score * p.score,
                step: Some(p.step),
                children: Vec::new(),
                inserted,
                expanded: false,
            });
            children.push(child);
        }
        let n = &mut self.nodes[id];
        n.children = children.clone();
        n.expanded = true;
        Ok(children)
    }

    /// Unexpanded nodes at the shallowest depth that can still grow.
    pub fn frontier(&self) -> Vec<usize> {
        let open = |n: &&PathwayNode| !n.expanded && n.depth < self.config.depth;
        let Some(d) = self.nodes.iter().filter(open).map(|n| n.depth).min() else { return Vec::new() };
        self.nodes.iter().filter(open).filter(|n| n.depth == d).map(|n| n.id).collect()
    }

    /// Expands the whole next BFS level; returns the new node ids.
    pub fn expand_level(&mut self, pipeline: &dyn Pipeline) -> Result<Vec<usize>, PathwayError> {
        let mut added = Vec::new();
        for id in self.frontier() {
            if self.truncated {
                break;
            }
            added.extend(self.expand_node(id, pipeline)?);
        }
        Ok(added)
    }

    /// BFS to the configured depth. With targets, stops after the first
    /// level at which all of them have been hit.
    pub fn expand_all(&mut self, pipeline: &dyn Pipeline, targets: &[Target]) -> Result<Vec<Hit>, PathwayError> {
        loop {
            if !targets.is_empty() {
                let hits = match_targets(self, targets)?;
                if (0..targets.len()).all(|t| hits.iter().any(|h| h.target == t)) {
                    return Ok(hits);
                }
            }
            if self.frontier().is_empty() || self.truncated {
                break;
            }
            self.expand_level(pipeline)?;
        }
        match_targets(self, targets)
    }

    /// Node ids from the root to `id`.
    pub fn path(&self, id: usize) -> Result<Vec<usize>, PathwayError> {
        let mut out = vec![id];
        let mut cur = self.node(id)?;
        while let Some(p) = cur.parent {
            out.push(p);
            cur = self.node(p)?;
        }
        out.reverse();
        Ok(out)
    }

    /// Replaces the search parameters for later expansions. Existing nodes
    /// are kept, so the depth cannot drop below the deepest one.
    pub fn set_config(&mut self, config: SearchConfig) -> Result<(), PathwayError> {
        config.validate()?;
        let deepest = self.nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        if config.depth < deepest {
            return Err(PathwayError::Config {
                field: "depth",
                message: format!("the tree already reaches depth {deepest}"),
            });
        }
        if self.nodes.len() < config.node_budget {
            self.truncated = false;
        }
        self.config = config;
        Ok(())
    }

    pub fn snapshot(&self, hits: &[Hit]) -> TreeSnapshot {
        TreeSnapshot {
            nodes: self.nodes.iter().map(NodeView::of).collect(),
            hits: hits.to_vec(),
            truncated: self.truncated,
            config: self.config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub target: usize,
    pub node: usize,
    pub depth: usize,
    pub molecule: String,
    pub path: Vec<usize>,
}

/// Every node holding a molecule that matches a target, per target, in
/// node order.
pub fn match_targets(tree: &PathwayTree, targets: &[Target]) -> Result<Vec<Hit>, PathwayError> {
    let matchers: Vec<TargetMatcher> = targets.iter().map(Target::matcher).collect::<Result<_, _>>()?;
    let mut hits = Vec::new();
    for node in &tree.nodes {
        let ms = parse(&node.state)?;
        for m in &ms.molecules {
            let c = canonical_molecule(m);
            for (ti, t) in matchers.iter().enumerate() {
                if t.matches(m, &c) && !hits.iter().any(|h: &Hit| h.target == ti && h.node == node.id) {
                    hits.push(Hit { target: ti, node: node.id, depth: node.depth, molecule: c.clone(), path: tree.path(node.id)? });
                }
            }
        }
    }
    Ok(hits)
}

/// Re-applies every step from the root to `id`, checking balance at each
/// depth and that the recorded states are reproduced. Returns the mapped
/// step lines.
pub fn replay_path(tree: &PathwayTree, id: usize) -> Result<Vec<String>, PathwayError> {
    let mut lines = Vec::new();
    for w in tree.path(id)?.windows(2) {
        let (parent, child) = (tree.node(w[0])?, tree.node(w[1])?);
        let mismatch = |message: String| PathwayError::ReplayMismatch { node: child.id, message };
        let step = child.step.as_ref().ok_or_else(|| mismatch("missing step".into()))?;
        let ex = make_explicit(&parse(&parent.state)?);
        if ex.set != step.reactants.set {
            return Err(mismatch("parent state does not match the step's reactants".into()));
        }
        let products = apply_arrows(&ex.set, &step.arrows).map_err(|e| mismatch(e.to_string()))?;
        check_balance(&ex.set, &products).map_err(|e| mismatch(e.to_string()))?;
        let (state, inserted) = tree.child_state(parent, step);
        if canonical_set(&products) != step.product_smiles || state != child.state || inserted != child.inserted {
            return Err(mismatch(format!("expected state `{}`, replay gives `{state}`", child.state)));
        }
        lines.push(step.mapped_line());
    }
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub smiles: String,
    pub score: f64,
    pub cumulative_score: f64,
    pub expanded: bool,
    pub children: Vec<usize>,
    pub step: Option<StepSummary>,
}

impl NodeView {
    pub fn of(n: &PathwayNode) -> Self {
        NodeView {
            id: n.id,
            parent: n.parent,
            depth: n.depth,
            smiles: n.state.clone(),
            score: n.score,
            cumulative_score: n.cumulative_score,
            expanded: n.expanded,
            children: n.children.clone(),
            step: n.step.as_ref().map(StepSummary::of),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSnapshot {
    pub nodes: Vec<NodeView>,
    pub hits: Vec<Hit>,
    pub truncated: bool,
    pub config: SearchConfig,
}
