//! Builds training sets from a prepared corpus and fits the three models.

use std::collections::{BTreeMap, HashMap};

use super::PredictError;
use crate::chemgraph::ExplicitSet;
use crate::dataset::{sample_contrastive_negatives, sample_ranker_negatives, Prepared};
use crate::featurize::{atom_descriptor, DescriptorVariant, ReactionEncoder, SparseVec};
use crate::neural::{
    train_classifier, train_contrastive, train_siamese, ContrastiveModel, LearningCurve, ModelMeta, NetworkSpec,
    TrainConfig, TrainedModel,
};
use crate::orbchain::eligible_sites;

/// Descriptors of every eligible site, in site order.
pub fn site_descriptors(r: &ExplicitSet, variant: DescriptorVariant) -> Result<Vec<(u32, SparseVec)>, PredictError> {
    eligible_sites(r)
        .into_iter()
        .map(|m| Ok((m, atom_descriptor(&r.set, m, variant)?.values)))
        .collect()
}

pub fn site_examples(p: &Prepared) -> Result<Vec<(SparseVec, bool)>, PredictError> {
    let mut out = Vec::new();
    for r in &p.records {
        for (map, d) in site_descriptors(&r.reactants, DescriptorVariant::Site)? {
            out.push((d, map == r.sites.0 || map == r.sites.1));
        }
    }
    Ok(out)
}

fn meta(kind: &str, feature: &str, cfg: &TrainConfig, dataset_hash: &str, extra: BTreeMap<String, String>) -> ModelMeta {
    ModelMeta {
        kind: kind.into(),
        feature: feature.into(),
        seed: cfg.seed,
        dataset_hash: dataset_hash.into(),
        config: cfg.clone(),
        extra,
    }
}

pub fn fit_sites(p: &Prepared, cfg: &TrainConfig, dataset_hash: &str) -> Result<(TrainedModel, LearningCurve), PredictError> {
    let data = site_examples(p)?;
    tracing::info!(atoms = data.len(), positives = data.iter().filter(|d| d.1).count(), "site training set");
    let (net, curve) = train_classifier(&data, &NetworkSpec::site_classifier(), cfg)?;
    let m = meta("sites", DescriptorVariant::Site.name(), cfg, dataset_hash, BTreeMap::new());
    Ok((TrainedModel { net, meta: m }, curve))
}

/// Encoded steps and (plausible, implausible) index pairs: each record's
/// true step against up to `k_max` sampled negatives.
pub fn ranker_examples(
    p: &Prepared,
    encoder: &dyn ReactionEncoder,
    k_max: usize,
    seed: u64,
) -> Result<(Vec<SparseVec>, Vec<(usize, usize)>), PredictError> {
    let mut features = Vec::new();
    let mut pairs = Vec::new();
    for r in &p.records {
        let mut steps = vec![r.step.clone()];
        steps.extend(sample_ranker_negatives(r, k_max, seed));
        let pos = features.len();
        features.extend(encoder.encode_batch(&steps)?);
        pairs.extend((1..steps.len()).map(|k| (pos, pos + k)));
    }
    Ok((features, pairs))
}

pub fn fit_ranker(
    p: &Prepared,
    encoder: &dyn ReactionEncoder,
    k_max: usize,
    cfg: &TrainConfig,
    dataset_hash: &str,
) -> Result<(TrainedModel, LearningCurve), PredictError> {
    let (features, pairs) = ranker_examples(p, encoder, k_max, cfg.seed)?;
    tracing::info!(steps = features.len(), pairs = pairs.len(), encoder = encoder.name(), "ranker training set");
    let spec = match encoder.name() {
        "drfp" => NetworkSpec::drfp_ranker(),
        _ => NetworkSpec::predefined_ranker(),
    };
    if spec.input_dim != encoder.dim() {
        return Err(PredictError::Mismatch(format!("no ranker spec for a {}-d encoder", encoder.dim())));
    }
    let (net, curve) = train_siamese(&features, &pairs, &spec, cfg)?;
    let extra = BTreeMap::from([("negatives".to_string(), k_max.to_string())]);
    Ok((TrainedModel { net, meta: meta("ranker", encoder.name(), cfg, dataset_hash, extra) }, curve))
}

/// Pair descriptors of all eligible sites and `[a1*, a2*, a1', a2']`
/// tuples indexing into them.
pub fn contrastive_examples(
    p: &Prepared,
    per_type_max: usize,
    seed: u64,
) -> Result<(Vec<SparseVec>, Vec<[usize; 4]>), PredictError> {
    let mut descriptors = Vec::new();
    let mut tuples = Vec::new();
    for r in &p.records {
        let mut at: HashMap<u32, usize> = HashMap::new();
        for (map, d) in site_descriptors(&r.reactants, DescriptorVariant::Pair)? {
            at.insert(map, descriptors.len());
            descriptors.push(d);
        }
        let (a1, a2) = (at[&r.sites.0], at[&r.sites.1]);
        for (x, y, _) in sample_contrastive_negatives(r, per_type_max, seed) {
            tuples.push([a1, a2, at[&x], at[&y]]);
        }
    }
    Ok((descriptors, tuples))
}

pub fn fit_contrastive(
    p: &Prepared,
    per_type_max: usize,
    cfg: &TrainConfig,
    dataset_hash: &str,
) -> Result<(ContrastiveModel, LearningCurve), PredictError> {
    let (descriptors, tuples) = contrastive_examples(p, per_type_max, cfg.seed)?;
    tracing::info!(atoms = descriptors.len(), tuples = tuples.len(), "contrastive training set");
    let spec = NetworkSpec::contrastive_branch();
    let (f, g, curve) = train_contrastive(&descriptors, &tuples, &spec, &spec, cfg)?;
    let extra = BTreeMap::from([("negatives_per_type".to_string(), per_type_max.to_string())]);
    let m = meta("contrastive", DescriptorVariant::Pair.name(), cfg, dataset_hash, extra);
    Ok((ContrastiveModel { f, g, meta: m }, curve))
}
