//! Top-N evaluation. Each protocol reduces a record to the rank at which it
//! first succeeds; accuracies at every N are read off those ranks, so they
//! are monotone by construction.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::pipelines::{site_scores, TwoStepPipeline};
use super::{Pipeline, PredictError, PredictOptions};
use crate::dataset::{bucket_label, sample_ranker_negatives, size_bucket, LabeledRecord, Prepared, SIZE_BUCKETS};
use crate::neural::TrainedModel;
use crate::orbchain::{enumerate_candidates, MechanisticStep};

pub const DEFAULT_NS: [usize; 5] = [1, 2, 3, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: String,
    pub category: String,
    pub heavy_atoms: usize,
    /// 1-based rank of success; `None` when not found at any rank.
    pub rank: Option<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub records: usize,
    pub accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub bucket: String,
    pub records: usize,
    /// Absent for empty buckets.
    pub accuracy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: String,
    pub pipeline: String,
    pub selection: String,
    pub ns: Vec<usize>,
    pub records: usize,
    pub skipped: usize,
    /// Percentages, one per entry of `ns`.
    pub accuracy: Vec<f64>,
    pub by_category: BTreeMap<String, CategoryRow>,
    pub by_size: Vec<BucketRow>,
    pub mean_seconds: f64,
    pub outcomes: Vec<Outcome>,
}

fn accuracies(ns: &[usize], outcomes: &[&Outcome]) -> Vec<f64> {
    ns.iter()
        .map(|&n| {
            if outcomes.is_empty() {
                return 0.0;
            }
            let hits = outcomes.iter().filter(|o| o.rank.is_some_and(|r| r <= n)).count();
            100.0 * hits as f64 / outcomes.len() as f64
        })
        .collect()
}

impl EvalReport {
    pub fn from_outcomes(kind: &str, pipeline: &str, selection: &str, ns: &[usize], outcomes: Vec<Outcome>, skipped: usize) -> Self {
        let mut ns = ns.to_vec();
        ns.sort_unstable();
        ns.dedup();
        let all: Vec<&Outcome> = outcomes.iter().collect();
        let mut by_category = BTreeMap::new();
        let cats: BTreeSet<&str> = outcomes.iter().map(|o| o.category.as_str()).collect();
        for c in cats {
            let sub: Vec<&Outcome> = outcomes.iter().filter(|o| o.category == c).collect();
            by_category.insert(c.to_string(), CategoryRow { records: sub.len(), accuracy: accuracies(&ns, &sub) });
        }
        let by_size = (0..SIZE_BUCKETS.len())
            .map(|b| {
                let sub: Vec<&Outcome> = outcomes.iter().filter(|o| size_bucket(o.heavy_atoms) == b).collect();
                BucketRow {
                    bucket: bucket_label(b),
                    records: sub.len(),
                    accuracy: (!sub.is_empty()).then(|| accuracies(&ns, &sub)),
                }
            })
            .collect();
        let mean_seconds =
            if outcomes.is_empty() { 0.0 } else { outcomes.iter().map(|o| o.seconds).sum::<f64>() / outcomes.len() as f64 };
        EvalReport {
            kind: kind.into(),
            pipeline: pipeline.into(),
            selection: selection.into(),
            accuracy: accuracies(&ns, &all),
            ns,
            records: outcomes.len(),
            skipped,
            by_category,
            by_size,
            mean_seconds,
            outcomes,
        }
    }

    pub fn accuracy_at(&self, n: usize) -> Option<f64> {
        self.ns.iter().position(|&x| x == n).map(|i| self.accuracy[i])
    }

    /// Every accuracy row is non-decreasing in N and within [0, 100].
    pub fn is_monotone(&self) -> bool {
        let ok = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(|x| (0.0..=100.0).contains(x));
        ok(&self.accuracy)
            && self.by_category.values().all(|r| ok(&r.accuracy))
            && self.by_size.iter().all(|r| r.accuracy.as_deref().is_none_or(ok))
    }

    /// Accuracy at `n` per populated size bucket, smallest molecules first.
    pub fn size_trend(&self, n: usize) -> Vec<(String, f64)> {
        let Some(i) = self.ns.iter().position(|&x| x == n) else { return Vec::new() };
        self.by_size.iter().filter_map(|r| r.accuracy.as_ref().map(|a| (r.bucket.clone(), a[i]))).collect()
    }

    pub fn write_size_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["pipeline".to_string(), "bucket".into(), "records".into()];
        header.extend(self.ns.iter().map(|n| format!("top{n}")));
        w.write_record(&header)?;
        for r in &self.by_size {
            let mut row = vec![self.pipeline.clone(), r.bucket.clone(), r.records.to_string()];
            match &r.accuracy {
                Some(a) => row.extend(a.iter().map(|x| format!("{x:.2}"))),
                None => row.extend(self.ns.iter().map(|_| String::new())),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn outcome(r: &LabeledRecord, rank: Option<usize>, seconds: f64) -> Outcome {
    Outcome { id: r.id.clone(), category: r.category.to_string(), heavy_atoms: r.heavy_atoms, rank, seconds }
}

/// Success at N when both reactive sites are among the N best-scored
/// atoms.
pub fn evaluate_site_scores(
    p: &Prepared,
    ns: &[usize],
    label: &str,
    selection: &str,
    mut scorer: impl FnMut(&LabeledRecord) -> Result<Vec<(u32, f64)>, PredictError>,
) -> Result<EvalReport, PredictError> {
    let mut outcomes = Vec::new();
    for r in &p.records {
        let t = Instant::now();
        let mut scores = scorer(r)?;
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let pos = |m: u32| scores.iter().position(|s| s.0 == m);
        let rank = match (pos(r.sites.0), pos(r.sites.1)) {
            (Some(a), Some(b)) => Some(a.max(b) + 1),
            _ => None,
        };
        outcomes.push(outcome(r, rank, t.elapsed().as_secs_f64()));
    }
    Ok(EvalReport::from_outcomes("sites", label, selection, ns, outcomes, p.quarantined.len()))
}

pub fn evaluate_sites(model: &TrainedModel, p: &Prepared, ns: &[usize], selection: &str) -> Result<EvalReport, PredictError> {
    evaluate_site_scores(p, ns, "sites", selection, |r| site_scores(model, &r.reactants))
}

fn rank_of(mut scored: Vec<(MechanisticStep, f64)>, key: &str) -> Option<usize> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.key.cmp(&b.0.key)));
    let mut seen = BTreeSet::new();
    let mut rank = 0;
    for (s, _) in &scored {
        if seen.insert(s.key.as_str()) {
            rank += 1;
            if s.key == key {
                return Some(rank);
            }
        }
    }
    None
}

/// Candidates built on the true reactive atoms plus `k_max` sampled
/// distractors, ranked by the pipeline's ranker alone.
pub fn evaluate_ranker(
    two_step: &TwoStepPipeline,
    p: &Prepared,
    ns: &[usize],
    k_max: usize,
    seed: u64,
    selection: &str,
) -> Result<EvalReport, PredictError> {
    let mut outcomes = Vec::new();
    for r in &p.records {
        let t = Instant::now();
        let atoms = BTreeSet::from([r.sites.0, r.sites.1]);
        let mut pool = enumerate_candidates(&r.reactants, Some(&atoms));
        pool.push(r.step.clone());
        pool.extend(sample_ranker_negatives(r, k_max, seed));
        let mut keys = BTreeSet::new();
        pool.retain(|s| keys.insert(s.key.clone()));
        let rank = rank_of(two_step.rank_steps(pool)?, &r.step.key);
        outcomes.push(outcome(r, rank, t.elapsed().as_secs_f64()));
    }
    let label = format!("ranker/{}", two_step.encoder.name());
    Ok(EvalReport::from_outcomes("ranker", &label, selection, ns, outcomes, p.quarantined.len()))
}

/// Full pipeline: success at N when the recorded step is among the first N
/// predictions. Time is wall-clock per record.
pub fn evaluate_end_to_end(
    pipeline: &dyn Pipeline,
    p: &Prepared,
    ns: &[usize],
    opts: &PredictOptions,
    selection: &str,
) -> Result<EvalReport, PredictError> {
    let top = ns.iter().copied().max().unwrap_or(1);
    let opts = PredictOptions { top_n: top.max(opts.top_n), ..*opts };
    let mut outcomes = Vec::new();
    for r in &p.records {
        let t = Instant::now();
        let preds = pipeline.predict(&r.reactants, &opts)?;
        let secs = t.elapsed().as_secs_f64();
        let rank = preds.iter().find(|x| x.step.key == r.step.key).map(|x| x.rank);
        outcomes.push(outcome(r, rank, secs));
    }
    Ok(EvalReport::from_outcomes("end_to_end", pipeline.name(), selection, ns, outcomes, p.quarantined.len()))
}
