//! Single-step prediction pipelines, their training drivers and the
//! evaluation harness.

pub mod eval;
pub mod pipelines;
pub mod summary;
pub mod training;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{
    evaluate_end_to_end, evaluate_ranker, evaluate_site_scores, evaluate_sites, BucketRow, CategoryRow, EvalReport,
    Outcome, DEFAULT_NS,
};
pub use summary::{ProductMass, StepSummary};
pub use pipelines::{site_scores, ContrastivePipeline, OraclePipeline, TeacherPipeline, TwoStepPipeline};
pub use training::{
    contrastive_examples, fit_contrastive, fit_ranker, fit_sites, ranker_examples, site_descriptors, site_examples,
};

use crate::chemgraph::ExplicitSet;
use crate::featurize::FeatureError;
use crate::neural::{ContrastiveModel, NeuralError, TrainedModel};
use crate::orbchain::{check_rules, MechanisticStep, RuleSet};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("model mismatch: {0}")]
    Mismatch(String),
    #[error("invalid option {field}: {message}")]
    InvalidOption { field: &'static str, message: String },
    #[error("unknown pipeline `{0}`")]
    UnknownPipeline(String),
    #[error("model file {0} not found")]
    MissingModel(PathBuf),
}

/// Scores stay strictly inside (0, 1) so that a threshold of 1 admits
/// nothing.
pub const SCORE_EPS: f64 = 1e-9;

pub fn clamp_score(s: f64) -> f64 {
    s.clamp(SCORE_EPS, 1.0 - SCORE_EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictOptions {
    pub top_n: usize,
    /// Atoms kept by the site filter of the two-step pipeline.
    pub k_atoms: usize,
    pub rules: RuleSet,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions { top_n: 10, k_atoms: 10, rules: RuleSet::all() }
    }
}

impl PredictOptions {
    pub fn validate(&self) -> Result<(), PredictError> {
        if self.top_n == 0 {
            return Err(PredictError::InvalidOption { field: "top_n", message: "must be at least 1".into() });
        }
        if self.k_atoms < 2 {
            return Err(PredictError::InvalidOption { field: "k_atoms", message: "must be at least 2".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub rank: usize,
    pub score: f64,
    pub step: MechanisticStep,
    pub pipeline: String,
}

/// A single-step predictor selectable by name.
pub trait Pipeline: Send + Sync {
    fn name(&self) -> &str;

    /// Scored candidates; may be a superset of the final list and may
    /// repeat a step.
    fn score_candidates(
        &self,
        r: &Arc<ExplicitSet>,
        opts: &PredictOptions,
    ) -> Result<Vec<(MechanisticStep, f64)>, PredictError>;

    fn predict(&self, r: &Arc<ExplicitSet>, opts: &PredictOptions) -> Result<Vec<Prediction>, PredictError> {
        opts.validate()?;
        let scored = self.score_candidates(r, opts)?;
        Ok(rank_predictions(scored, opts, self.name()))
    }
}

/// Keeps the best score per step, drops rule violations, sorts by score
/// (ties by step key) and numbers the first `top_n` from 1.
pub fn rank_predictions(scored: Vec<(MechanisticStep, f64)>, opts: &PredictOptions, pipeline: &str) -> Vec<Prediction> {
    let mut best: BTreeMap<String, (MechanisticStep, f64)> = BTreeMap::new();
    for (step, score) in scored {
        match best.get_mut(&step.key) {
            Some(e) if e.1 >= score => {}
            Some(e) => e.1 = score,
            None => {
                best.insert(step.key.clone(), (step, score));
            }
        }
    }
    let mut list: Vec<(MechanisticStep, f64)> =
        best.into_values().filter(|(s, _)| check_rules(s, &opts.rules).is_ok()).collect();
    list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.key.cmp(&b.0.key)));
    list.truncate(opts.top_n);
    list.into_iter()
        .enumerate()
        .map(|(i, (mut step, score))| {
            step.score = Some(score);
            Prediction { rank: i + 1, score, step, pipeline: pipeline.to_string() }
        })
        .collect()
}

pub const SITES_FILE: &str = "sites.rmm";
pub const RANKER_FILE: &str = "ranker.rmm";
pub const CONTRASTIVE_FILE: &str = "contrastive.rmm";

#[derive(Clone, Default)]
pub struct PipelineRegistry {
    pipelines: BTreeMap<String, Arc<dyn Pipeline>>,
}

impl PipelineRegistry {
    /// Only the model-free teacher pipeline.
    pub fn with_teacher() -> Self {
        let mut r = PipelineRegistry::default();
        r.register(Arc::new(TeacherPipeline));
        r
    }

    /// Registers `two_step` when both its models exist in `dir`,
    /// `contrastive` when its model exists, and the teacher.
    pub fn from_model_dir(dir: &Path) -> Result<Self, PredictError> {
        let mut r = PipelineRegistry::with_teacher();
        let (sites, ranker, pair) = (dir.join(SITES_FILE), dir.join(RANKER_FILE), dir.join(CONTRASTIVE_FILE));
        if sites.exists() && ranker.exists() {
            let s = TrainedModel::from_file(crate::neural::load_model(&sites)?)?;
            let k = TrainedModel::from_file(crate::neural::load_model(&ranker)?)?;
            r.register(Arc::new(TwoStepPipeline::from_models(s, k)?));
        }
        if pair.exists() {
            let c = ContrastiveModel::from_file(crate::neural::load_model(&pair)?)?;
            r.register(Arc::new(ContrastivePipeline::new(c)?));
        }
        Ok(r)
    }

    pub fn register(&mut self, p: Arc<dyn Pipeline>) {
        self.pipelines.insert(p.name().to_string(), p);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Pipeline>, PredictError> {
        self.pipelines.get(name).cloned().ok_or_else(|| PredictError::UnknownPipeline(name.into()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.pipelines.contains_key(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.pipelines.keys().map(String::as_str).collect()
    }

    /// Fails naming the first missing pipeline.
    pub fn require(&self, names: &[&str]) -> Result<(), PredictError> {
        let have: BTreeSet<&str> = self.names().into_iter().collect();
        match names.iter().find(|n| !have.contains(*n)) {
            Some(n) => Err(PredictError::UnknownPipeline((*n).into())),
            None => Ok(()),
        }
    }
}
