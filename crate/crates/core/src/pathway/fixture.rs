//! Benchmark cases for pathway recovery: reactants, targets, context and
//! the depth at which a target appears.
//!
//! Cases are built by following the teacher's top step from a start state
//! with the same state bookkeeping the search uses, so every target is
//! reachable at its stated depth when the true step is always in the top
//! `breadth`.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    canonical_molecule, parse, ContextSpec, PathwayError, PathwayTree, SearchConfig, Target,
};
use crate::chemgraph::{parse_reaction, MassMode, Split};
use crate::dataset::synth::{OXYGEN, POOL, RADICALS};
use crate::dataset::{canonical_reaction, split_for};
use crate::predictor::{Pipeline, TeacherPipeline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub id: String,
    pub reactants: String,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub context: Vec<ContextSpec>,
    pub depth: usize,
}

impl BenchmarkCase {
    pub fn validate(&self) -> Result<(), PathwayError> {
        parse(&self.reactants)?;
        if self.targets.is_empty() {
            return Err(PathwayError::Config { field: "targets", message: "at least one target".into() });
        }
        for t in &self.targets {
            t.validate()?;
        }
        if !(1..=MAX_CASE_DEPTH).contains(&self.depth) {
            return Err(PathwayError::Config { field: "depth", message: format!("must lie in 1..={MAX_CASE_DEPTH}") });
        }
        let cfg = SearchConfig { depth: self.depth, ..SearchConfig::default() };
        PathwayTree::new(&self.reactants, cfg, self.context.clone())?;
        Ok(())
    }
}

pub const MAX_CASE_DEPTH: usize = 8;

/// Reads a JSON-lines benchmark. Blank lines and `#` comments are skipped;
/// every bad line is reported, not only the first.
pub fn load_benchmark(path: &Path) -> Result<Vec<BenchmarkCase>, PathwayError> {
    let file = std::fs::File::open(path)?;
    let mut cases = Vec::new();
    let mut items = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let case = serde_json::from_str::<BenchmarkCase>(text)
            .map_err(|e| e.to_string())
            .and_then(|c| c.validate().map(|_| c).map_err(|e| e.to_string()));
        match case {
            Ok(c) => cases.push(c),
            Err(e) => items.push(format!("line {}: {e}", i + 1)),
        }
    }
    if !items.is_empty() {
        return Err(PathwayError::Fixture { path: path.display().to_string(), items });
    }
    Ok(cases)
}

pub fn write_benchmark(out: &mut impl Write, cases: &[BenchmarkCase]) -> std::io::Result<()> {
    for c in cases {
        serde_json::to_writer(&mut *out, c)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Follows the teacher for `depth` steps and targets the heaviest molecule
/// the last step creates that no earlier state on the path holds. Returns
/// `None` when the chain stops early or the last step makes nothing new.
/// The second value is the unmapped first reaction, used to pick
/// test-split starts.
pub fn construct_case(
    id: &str,
    reactants: &str,
    context: Vec<ContextSpec>,
    depth: usize,
    mass_target: bool,
) -> Result<Option<(BenchmarkCase, String)>, PathwayError> {
    let cfg = SearchConfig { depth, breadth: 1, pipeline: "teacher".into(), ..SearchConfig::default() };
    let mut tree = PathwayTree::new(reactants, cfg, context.clone())?;
    let mut cur = 0;
    for _ in 0..depth {
        match tree.expand_node(cur, &TeacherPipeline)?.first() {
            Some(&c) => cur = c,
            None => return Ok(None),
        }
    }
    let first = tree.node(tree.path(cur)?[1])?.step.clone().expect("child has a step");
    let first_reaction = match parse_reaction(&first.mapped_line()) {
        Ok(r) => canonical_reaction(&r),
        Err(_) => return Ok(None),
    };

    let node = tree.node(cur)?;
    let mut before: Vec<String> = Vec::new();
    for &id in &tree.path(cur)?[..depth] {
        before.extend(parse(&tree.node(id)?.state)?.molecules.iter().map(canonical_molecule));
    }
    let step = node.step.as_ref().expect("child has a step");
    let mut fresh: Vec<(f64, String)> = step
        .products
        .molecules
        .iter()
        .map(|m| (m.molecular_mass(MassMode::Monoisotopic), canonical_molecule(m)))
        .filter(|(_, s)| !before.contains(s))
        .collect();
    fresh.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let Some((mass, smiles)) = fresh.into_iter().next() else { return Ok(None) };
    let target = if mass_target {
        Target::Mass { mass: (mass * 1e4).round() / 1e4, tolerance: super::DEFAULT_MASS_TOLERANCE }
    } else {
        Target::Structure { smiles }
    };
    let case = BenchmarkCase { id: id.into(), reactants: reactants.into(), targets: vec![target], context, depth };
    Ok(Some((case, first_reaction)))
}

pub const FIXTURE_SEED: u64 = 17;
pub const FIXTURE_TEST_FRACTION: f64 = 0.2;
pub const FIXTURE_CASES: usize = 24;
/// Largest pool molecule used as a start; keeps depth-3 trees small.
pub const FIXTURE_MAX_HEAVY_ATOMS: usize = 16;

fn oxygen_context() -> Vec<ContextSpec> {
    vec![ContextSpec { smiles: OXYGEN.into(), frequency: 1 }]
}

/// The shipped fixture: isoprene + HO• with O2 first, then teacher chains
/// from radical + pool starts of at most 16 heavy atoms (shuffled with a
/// fixed seed) whose first step falls in the test split. Depths cycle 1, 2,
/// 3; every fourth case uses a mass target; starts with an OH or Cl radical
/// and a carbon molecule get O2 as context.
pub fn default_cases() -> Result<Vec<BenchmarkCase>, PathwayError> {
    let mut cases = Vec::new();
    if let Some((c, _)) = construct_case("pw000", "C=CC(C)=C.[OH]", oxygen_context(), 3, false)? {
        cases.push(c);
    }
    let mut starts: Vec<(String, bool)> = Vec::new();
    for m in POOL {
        if parse(m)?.heavy_atom_count() > FIXTURE_MAX_HEAVY_ATOMS {
            continue;
        }
        for r in RADICALS {
            let o2 = matches!(*r, "[OH]" | "[Cl]") && m.contains('C');
            starts.push((format!("{r}.{m}"), o2));
        }
    }
    starts.shuffle(&mut ChaCha8Rng::seed_from_u64(FIXTURE_SEED));
    for (reactants, o2) in starts {
        if cases.len() >= FIXTURE_CASES {
            break;
        }
        let n = cases.len();
        let depth = 1 + n % 3;
        let context = if o2 { oxygen_context() } else { Vec::new() };
        let id = format!("pw{n:03}");
        let Some((case, first)) = construct_case(&id, &reactants, context, depth, n % 4 == 3)? else { continue };
        if split_for(FIXTURE_SEED, &first, FIXTURE_TEST_FRACTION) == Split::Test {
            cases.push(case);
        }
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub depth: usize,
    pub recovered: bool,
    /// Shallowest depth at which every target was hit.
    pub hit_depth: Option<usize>,
    pub nodes: usize,
    pub truncated: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub pipeline: String,
    pub cases: usize,
    pub recovered: usize,
    pub rate: f64,
    pub results: Vec<CaseResult>,
}

/// Searches every case to its stated depth with `base`'s breadth,
/// threshold, rules and budget. A case is recovered when all its targets
/// are hit within that depth.
pub fn run_benchmark(
    cases: &[BenchmarkCase],
    pipeline: &dyn Pipeline,
    base: &SearchConfig,
) -> Result<RecoverySummary, PathwayError> {
    let mut results = Vec::with_capacity(cases.len());
    for case in cases {
        let start = Instant::now();
        let cfg = SearchConfig { depth: case.depth, pipeline: pipeline.name().into(), ..base.clone() };
        let mut tree = PathwayTree::new(&case.reactants, cfg, case.context.clone())?;
        let hits = tree.expand_all(pipeline, &case.targets)?;
        let per_target: Option<Vec<usize>> = (0..case.targets.len())
            .map(|t| hits.iter().filter(|h| h.target == t).map(|h| h.depth).min())
            .collect();
        let hit_depth = per_target.and_then(|v| v.into_iter().max());
        tracing::debug!(id = %case.id, ?hit_depth, nodes = tree.nodes.len(), "pathway case");
        results.push(CaseResult {
            id: case.id.clone(),
            depth: case.depth,
            recovered: hit_depth.is_some(),
            hit_depth,
            nodes: tree.nodes.len(),
            truncated: tree.truncated,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let recovered = results.iter().filter(|r| r.recovered).count();
    Ok(RecoverySummary {
        pipeline: pipeline.name().into(),
        cases: results.len(),
        recovered,
        rate: if results.is_empty() { 0.0 } else { recovered as f64 / results.len() as f64 },
        results,
    })
}

/// Oracle wrapper around `inner` whose truth is the teacher.
pub fn teacher_oracle(inner: Arc<dyn Pipeline>) -> crate::predictor::OraclePipeline {
    crate::predictor::OraclePipeline { inner, truth: Arc::new(TeacherPipeline) }
}
