use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use super::{clamp_score, training::site_descriptors, Pipeline, PredictError, PredictOptions, Prediction, SCORE_EPS};
use crate::chemgraph::ExplicitSet;
use crate::dataset::teacher_score;
use crate::featurize::{DescriptorVariant, EncoderRegistry, ReactionEncoder};
use crate::neural::{pair_score, sigmoid, ContrastiveModel, TrainedModel};
use crate::orbchain::{build_step, check_rules, enumerate_candidates, MechanisticStep, SitePairIndex};

/// Site-model scores of every eligible site, best first (ties by map).
pub fn site_scores(model: &TrainedModel, r: &ExplicitSet) -> Result<Vec<(u32, f64)>, PredictError> {
    let mut out = Vec::new();
    for (map, d) in site_descriptors(r, DescriptorVariant::Site)? {
        out.push((map, sigmoid(model.score(&d)?)));
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

/// Site filter followed by a plausibility ranker over the surviving
/// candidates.
pub struct TwoStepPipeline {
    pub sites: TrainedModel,
    pub ranker: TrainedModel,
    pub encoder: Arc<dyn ReactionEncoder>,
}

impl TwoStepPipeline {
    pub fn new(sites: TrainedModel, ranker: TrainedModel, encoder: Arc<dyn ReactionEncoder>) -> Result<Self, PredictError> {
        let site_dim = DescriptorVariant::Site.dim();
        if sites.net.spec.input_dim != site_dim {
            return Err(PredictError::Mismatch(format!(
                "site model takes {} inputs, the site descriptor has {site_dim}",
                sites.net.spec.input_dim
            )));
        }
        if ranker.net.spec.input_dim != encoder.dim() {
            return Err(PredictError::Mismatch(format!(
                "ranker takes {} inputs, encoder `{}` produces {}",
                ranker.net.spec.input_dim,
                encoder.name(),
                encoder.dim()
            )));
        }
        Ok(TwoStepPipeline { sites, ranker, encoder })
    }

    /// Picks the encoder named in the ranker's metadata.
    pub fn from_models(sites: TrainedModel, ranker: TrainedModel) -> Result<Self, PredictError> {
        let encoder = EncoderRegistry::default().get(&ranker.meta.feature)?;
        TwoStepPipeline::new(sites, ranker, encoder)
    }

    pub fn rank_steps(&self, steps: Vec<MechanisticStep>) -> Result<Vec<(MechanisticStep, f64)>, PredictError> {
        let vectors = self.encoder.encode_batch(&steps)?;
        let mut out = Vec::with_capacity(steps.len());
        for (s, v) in steps.into_iter().zip(vectors) {
            out.push((s, clamp_score(sigmoid(self.ranker.score(&v)?))));
        }
        Ok(out)
    }
}

impl Pipeline for TwoStepPipeline {
    fn name(&self) -> &str {
        "two_step"
    }

    fn score_candidates(&self, r: &Arc<ExplicitSet>, opts: &PredictOptions) -> Result<Vec<(MechanisticStep, f64)>, PredictError> {
        let kept: BTreeSet<u32> = site_scores(&self.sites, r)?.into_iter().take(opts.k_atoms).map(|(m, _)| m).collect();
        let steps: Vec<MechanisticStep> = enumerate_candidates(r, Some(&kept))
            .into_iter()
            .filter(|s| check_rules(s, &opts.rules).is_ok())
            .collect();
        self.rank_steps(steps)
    }
}

/// Scores ordered site pairs with `σ(f(a1)·g(a2))` and builds steps only
/// for the best pairs.
pub struct ContrastivePipeline {
    pub model: ContrastiveModel,
}

impl ContrastivePipeline {
    pub fn new(model: ContrastiveModel) -> Result<Self, PredictError> {
        let dim = DescriptorVariant::Pair.dim();
        for (name, net) in [("f", &model.f), ("g", &model.g)] {
            if net.spec.input_dim != dim {
                return Err(PredictError::Mismatch(format!(
                    "branch {name} takes {} inputs, the pair descriptor has {dim}",
                    net.spec.input_dim
                )));
            }
        }
        Ok(ContrastivePipeline { model })
    }

    /// Ordered site pairs with at least one admissible orbital pair, best
    /// first.
    pub fn pair_scores(&self, r: &ExplicitSet, index: &SitePairIndex) -> Result<Vec<((u32, u32), f64)>, PredictError> {
        let mut f = std::collections::HashMap::new();
        let mut g = std::collections::HashMap::new();
        for (map, d) in site_descriptors(r, DescriptorVariant::Pair)? {
            f.insert(map, self.model.f.forward(&d)?);
            g.insert(map, self.model.g.forward(&d)?);
        }
        let mut out: Vec<((u32, u32), f64)> = index
            .groups
            .keys()
            .filter_map(|&(a, b)| Some(((a, b), pair_score(*f.get(&a)?, *g.get(&b)?))))
            .collect();
        out.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        Ok(out)
    }
}

impl Pipeline for ContrastivePipeline {
    fn name(&self) -> &str {
        "contrastive"
    }

    fn score_candidates(&self, r: &Arc<ExplicitSet>, opts: &PredictOptions) -> Result<Vec<(MechanisticStep, f64)>, PredictError> {
        let index = SitePairIndex::new(r);
        let mut seen: HashSet<String> = HashSet::new();
        let mut out = Vec::new();
        let mut last = f64::INFINITY;
        for ((a, b), score) in self.pair_scores(r, &index)? {
            // Enough distinct steps, and no remaining pair can tie the last one.
            if seen.len() >= opts.top_n && score < last {
                break;
            }
            for pair in index.pairs_for(a, b) {
                let Ok(step) = build_step(r, pair) else { continue };
                if check_rules(&step, &opts.rules).is_err() || !seen.insert(step.key.clone()) {
                    continue;
                }
                last = score;
                out.push((step, clamp_score(score)));
            }
        }
        Ok(out)
    }
}

/// The rule-based teacher that labels the synthetic corpus, as a pipeline.
pub struct TeacherPipeline;

impl Pipeline for TeacherPipeline {
    fn name(&self) -> &str {
        "teacher"
    }

    fn score_candidates(&self, r: &Arc<ExplicitSet>, _opts: &PredictOptions) -> Result<Vec<(MechanisticStep, f64)>, PredictError> {
        Ok(enumerate_candidates(r, None)
            .into_iter()
            .map(|s| {
                let t = teacher_score(&s);
                (s, clamp_score(sigmoid(t - 6.0)))
            })
            .collect())
    }
}

/// Wraps a pipeline and injects the reference pipeline's top step at rank
/// one, so search can be tested with a model that always contains the
/// true step.
pub struct OraclePipeline {
    pub inner: Arc<dyn Pipeline>,
    pub truth: Arc<dyn Pipeline>,
}

impl Pipeline for OraclePipeline {
    fn name(&self) -> &str {
        "oracle"
    }

    fn score_candidates(&self, r: &Arc<ExplicitSet>, opts: &PredictOptions) -> Result<Vec<(MechanisticStep, f64)>, PredictError> {
        let one = PredictOptions { top_n: 1, ..*opts };
        let truth: Vec<Prediction> = self.truth.predict(r, &one)?;
        let mut out: Vec<(MechanisticStep, f64)> = self
            .inner
            .predict(r, opts)?
            .into_iter()
            .filter(|p| truth.iter().all(|t| t.step.key != p.step.key))
            .map(|p| (p.step, p.score.min(1.0 - 2.0 * SCORE_EPS)))
            .collect();
        out.extend(truth.into_iter().map(|t| (t.step, 1.0 - SCORE_EPS)));
        Ok(out)
    }
}
