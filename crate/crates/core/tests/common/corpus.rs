//! Small synthetic corpora and quickly trained models for pipeline tests.

use std::sync::OnceLock;

use rmech_core::dataset::synth::POOL;
use rmech_core::dataset::{generate, prepare, Corpus, Prepared, SynthConfig};
use rmech_core::featurize::{Drfp, DrfpEncoder};
use rmech_core::neural::{ContrastiveModel, TrainConfig, TrainedModel};
use rmech_core::predictor::{fit_contrastive, fit_ranker, fit_sites};

/// Teacher corpus over the first `pool` molecules of the default pool.
pub fn small_corpus(pool: usize) -> Corpus {
    let cfg = SynthConfig { pool: POOL[..pool].iter().map(|s| s.to_string()).collect(), ..SynthConfig::default() };
    Corpus::from_records(generate(&cfg))
}

pub fn quick_config(epochs: usize) -> TrainConfig {
    TrainConfig { max_epochs: epochs, patience: epochs, seed: 5, ..TrainConfig::default() }
}

pub struct Models {
    pub prepared: Prepared,
    pub sites: TrainedModel,
    pub ranker: TrainedModel,
    pub contrastive: ContrastiveModel,
}

/// Models fitted once per test binary on a 12-molecule corpus.
pub fn models() -> &'static Models {
    static CELL: OnceLock<Models> = OnceLock::new();
    CELL.get_or_init(|| {
        let prepared = prepare(&small_corpus(12));
        let cfg = quick_config(3);
        let (sites, _) = fit_sites(&prepared, &cfg, "test").unwrap();
        let (ranker, _) = fit_ranker(&prepared, &DrfpEncoder(Drfp::default()), 6, &cfg, "test").unwrap();
        let (contrastive, _) = fit_contrastive(&prepared, 4, &cfg, "test").unwrap();
        Models { prepared, sites, ranker, contrastive }
    })
}
