//! The `rmech` operator CLI.
//!
//! Every verb reads one TOML config, applies `RMECH_PORT` and
//! `RMECH_MODEL_DIR`, then `--set key=value` and the verb's own flags, and
//! writes its artifacts plus a snapshot of the effective config under a run
//! directory. Config problems exit with 2, failures at run time with 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use toml::Value;

use rmech_core::chemgraph::{make_explicit, parse_smiles, write_smiles, SmilesError};
use rmech_core::dataset::{
    generate, load_corpus, prepare, write_corpus_dir, write_quarantine, AdapterRegistry, Corpus, DatasetError, Prepared,
    Selection, SynthConfig,
};
use rmech_core::featurize::{EncoderRegistry, FeatureError};
use rmech_core::neural::{save_model, ContrastiveModel, LearningCurve, NeuralError, TrainConfig, TrainedModel};
use rmech_core::orbchain::RuleSet;
use rmech_core::pathway::{default_cases, load_benchmark, run_benchmark, teacher_oracle, write_benchmark, PathwayError, SearchConfig};
use rmech_core::predictor::{
    evaluate_end_to_end, evaluate_ranker, evaluate_sites, fit_contrastive, fit_ranker, fit_sites, Pipeline,
    PipelineRegistry, PredictError, PredictOptions, StepSummary, TwoStepPipeline, CONTRASTIVE_FILE, RANKER_FILE,
    SITES_FILE,
};

use crate::api::{router, AppState, PredictionView, SingleStepResponse, LEARNED_PIPELINES};
use crate::config::{Config, ConfigError};
use crate::session::SessionStore;

pub const PORT_ENV: &str = "RMECH_PORT";
pub const MODEL_DIR_ENV: &str = "RMECH_MODEL_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Pathway(#[from] PathwayError),
    #[error("reactants: {0}")]
    Smiles(#[from] SmilesError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("server: {0}")]
    Serve(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "rmech", version, about = "Train, evaluate and serve radical mechanism predictors")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.max_epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Exact run directory, instead of a fresh one under `run.root`.
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Generate the synthetic teacher corpus into `data.corpus`.
    SynthCorpus {
        #[command(flatten)]
        common: Common,
    },
    /// Train the reactive-site classifier; writes `sites.rmm` and its learning curve.
    TrainSites {
        #[command(flatten)]
        common: Common,
    },
    /// Train the plausibility ranker on `ranker.encoder` fingerprints.
    TrainRanker {
        #[command(flatten)]
        common: Common,
    },
    /// Train the contrastive pair scorer.
    TrainContrastive {
        #[command(flatten)]
        common: Common,
    },
    /// Top-N evaluation of a pipeline, or of the `sites` or `ranker` model alone.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Overrides `eval.pipeline`.
        #[arg(long)]
        pipeline: Option<String>,
        /// `core-test`, `specific-test`, `combined-test`, `all`, ...
        #[arg(long)]
        split: Option<String>,
    },
    /// Rank the next mechanistic steps for one reactant set.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Reactant SMILES, molecules separated by `.`.
        #[arg(long)]
        reactants: Option<String>,
        /// Overrides `predict.pipeline`.
        #[arg(long)]
        pipeline: Option<String>,
    },
    /// Pathway recovery over a JSON-lines benchmark.
    Pathway {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Overrides `pathway.pipeline`.
        #[arg(long)]
        pipeline: Option<String>,
    },
    /// Write the teacher-built pathway benchmark to `pathway.fixture`.
    Fixture {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API; needs both learned pipelines in the model directory.
    Serve {
        #[command(flatten)]
        common: Common,
        /// 0 picks a free port; the bound address is printed on stdout.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
}

impl Verb {
    fn name(&self) -> &'static str {
        match self {
            Verb::SynthCorpus { .. } => "synth-corpus",
            Verb::TrainSites { .. } => "train-sites",
            Verb::TrainRanker { .. } => "train-ranker",
            Verb::TrainContrastive { .. } => "train-contrastive",
            Verb::Eval { .. } => "eval",
            Verb::Predict { .. } => "predict",
            Verb::Pathway { .. } => "pathway",
            Verb::Fixture { .. } => "fixture",
            Verb::Serve { .. } => "serve",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Verb::SynthCorpus { common }
            | Verb::TrainSites { common }
            | Verb::TrainRanker { common }
            | Verb::TrainContrastive { common }
            | Verb::Eval { common, .. }
            | Verb::Predict { common, .. }
            | Verb::Pathway { common, .. }
            | Verb::Fixture { common, .. }
            | Verb::Serve { common, .. } => common,
        }
    }

    /// Verb flags as config overrides.
    fn flag_overrides(&self) -> Vec<(&'static str, Value)> {
        let s = |v: &String| Value::String(v.clone());
        let p = |v: &PathBuf| Value::String(v.display().to_string());
        let mut out = Vec::new();
        match self {
            Verb::Eval { pipeline, split, .. } => {
                out.extend(pipeline.as_ref().map(|v| ("eval.pipeline", s(v))));
                out.extend(split.as_ref().map(|v| ("eval.split", s(v))));
            }
            Verb::Predict { reactants, pipeline, .. } => {
                out.extend(reactants.as_ref().map(|v| ("predict.reactants", s(v))));
                out.extend(pipeline.as_ref().map(|v| ("predict.pipeline", s(v))));
            }
            Verb::Pathway { fixture, pipeline, .. } => {
                out.extend(fixture.as_ref().map(|v| ("pathway.fixture", p(v))));
                out.extend(pipeline.as_ref().map(|v| ("pathway.pipeline", s(v))));
            }
            Verb::Fixture { out: path, .. } => out.extend(path.as_ref().map(|v| ("pathway.fixture", p(v)))),
            Verb::Serve { port, model_dir, .. } => {
                out.extend(port.map(|v| ("serve.port", Value::Integer(v as i64))));
                out.extend(model_dir.as_ref().map(|v| ("models.dir", p(v))));
            }
            _ => {}
        }
        out
    }
}

/// Config file, then environment, then `--set`, then verb flags.
pub fn effective_config(verb: &Verb) -> Result<Config, CliError> {
    let common = verb.common();
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Ok(port) = std::env::var(PORT_ENV) {
        let port: u16 = port.trim().parse().map_err(|_| CliError::Usage(format!("{PORT_ENV}={port} is not a port")))?;
        cfg.set("serve.port", Value::Integer(port as i64));
    }
    if let Ok(dir) = std::env::var(MODEL_DIR_ENV) {
        cfg.set("models.dir", Value::String(dir));
    }
    for item in &common.set {
        cfg.apply_override(item)?;
    }
    for (key, value) in verb.flag_overrides() {
        cfg.set(key, value);
    }
    Ok(cfg)
}

/// Keys each verb reads; all are checked before any work starts.
pub fn required_keys(verb: &str) -> &'static [&'static str] {
    const TRAIN: &[&str] = &[
        "data.corpus",
        "data.adapter",
        "data.train_split",
        "train.seed",
        "train.learning_rate",
        "train.batch_size",
        "train.max_epochs",
        "train.patience",
        "train.holdout_fraction",
        "train.clip_norm",
    ];
    match verb {
        "synth-corpus" => &["data.corpus", "synth.seed", "synth.test_fraction", "synth.chain_length", "synth.add_oxygen"],
        "train-sites" => TRAIN,
        "train-ranker" => &[
            "data.corpus",
            "data.adapter",
            "data.train_split",
            "train.seed",
            "train.learning_rate",
            "train.batch_size",
            "train.max_epochs",
            "train.patience",
            "train.holdout_fraction",
            "train.clip_norm",
            "ranker.encoder",
            "ranker.negatives",
        ],
        "train-contrastive" => &[
            "data.corpus",
            "data.adapter",
            "data.train_split",
            "train.seed",
            "train.learning_rate",
            "train.batch_size",
            "train.max_epochs",
            "train.patience",
            "train.holdout_fraction",
            "train.clip_norm",
            "contrastive.negatives_per_type",
        ],
        "eval" => &["data.corpus", "data.adapter", "models.dir", "eval.pipeline", "eval.split", "eval.ns", "eval.k_atoms"],
        "predict" => &[
            "models.dir",
            "predict.reactants",
            "predict.pipeline",
            "predict.top_n",
            "predict.k_atoms",
            "predict.rules",
        ],
        "pathway" => &[
            "models.dir",
            "pathway.fixture",
            "pathway.pipeline",
            "pathway.oracle",
            "pathway.breadth",
            "pathway.threshold",
            "pathway.node_budget",
            "pathway.k_atoms",
        ],
        "fixture" => &["pathway.fixture"],
        "serve" => &[
            "models.dir",
            "serve.host",
            "serve.port",
            "serve.idle_timeout_secs",
            "serve.node_budget",
            "serve.max_sessions",
        ],
        _ => &[],
    }
}

/// `--run-dir`, or a fresh `<run.root>/<verb>-<unix seconds>[-n]`.
fn run_dir(verb: &Verb, cfg: &Config) -> Result<PathBuf, CliError> {
    let dir = match &verb.common().run_dir {
        Some(d) => d.clone(),
        None => {
            let root = cfg.path("run.root")?;
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            let base = root.join(format!("{}-{secs}", verb.name()));
            let mut dir = base.clone();
            let mut n = 1;
            while dir.exists() {
                dir = PathBuf::from(format!("{}-{n}", base.display()));
                n += 1;
            }
            dir
        }
    };
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    write_file(path, text.as_bytes())
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.verb) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(verb: &Verb) -> Result<(), CliError> {
    let cfg = effective_config(verb)?;
    let mut keys: Vec<&str> = required_keys(verb.name()).to_vec();
    if verb.common().run_dir.is_none() {
        keys.push("run.root");
    }
    cfg.require(&keys)?;
    let dir = run_dir(verb, &cfg)?;
    write_file(&dir.join(format!("config-{}.toml", verb.name())), cfg.to_toml().as_bytes())?;
    tracing::info!(verb = verb.name(), run_dir = %dir.display(), "starting");
    match verb {
        Verb::SynthCorpus { .. } => synth_corpus(&cfg, &dir),
        Verb::TrainSites { .. } => train(&cfg, &dir, Model::Sites),
        Verb::TrainRanker { .. } => train(&cfg, &dir, Model::Ranker),
        Verb::TrainContrastive { .. } => train(&cfg, &dir, Model::Contrastive),
        Verb::Eval { .. } => eval(&cfg, &dir),
        Verb::Predict { .. } => predict(&cfg, &dir),
        Verb::Pathway { .. } => pathway(&cfg, &dir),
        Verb::Fixture { .. } => fixture(&cfg),
        Verb::Serve { .. } => serve(&cfg),
    }
}

fn synth_corpus(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let mut sc = SynthConfig {
        seed: cfg.u64("synth.seed")?,
        test_fraction: cfg.f64("synth.test_fraction")?,
        chain_length: cfg.usize("synth.chain_length")?,
        add_oxygen: cfg.bool("synth.add_oxygen")?,
        ..SynthConfig::default()
    };
    if cfg.lookup("synth.pool_size").is_some() {
        let n = cfg.usize("synth.pool_size")?.min(sc.pool.len());
        sc.pool.truncate(n);
    }
    let records = generate(&sc);
    let out = cfg.path("data.corpus")?;
    write_corpus_dir(&out, &records).map_err(io_err(&out))?;
    let corpus = Corpus::from_records(records);
    let stats = corpus.stats();
    let summary = serde_json::json!({
        "records": corpus.len(),
        "core_train": stats.core_train,
        "core_test": stats.core_test,
        "specific_train": stats.specific_train,
        "specific_test": stats.specific_test,
        "content_hash": corpus.content_hash(),
    });
    write_json(&dir.join("corpus_stats.json"), &summary)?;
    println!("{} reactions written to {}", corpus.len(), out.display());
    Ok(())
}

fn load_selection(cfg: &Config, key: &str, dir: &Path) -> Result<(Prepared, String, Selection), CliError> {
    let adapter = AdapterRegistry::default().get(&cfg.str("data.adapter")?)?;
    let corpus = load_corpus(&cfg.path("data.corpus")?, adapter.as_ref())?;
    corpus.check_split_integrity()?;
    let sel: Selection = cfg.str(key)?.parse()?;
    let subset = corpus.select(sel);
    if subset.is_empty() {
        return Err(CliError::Usage(format!("{key} = {sel} selects no records")));
    }
    let hash = subset.content_hash();
    let prepared = prepare(&subset);
    if !prepared.quarantined.is_empty() {
        let path = dir.join("quarantine.tsv");
        write_quarantine(&path, &prepared.quarantined).map_err(io_err(&path))?;
    }
    tracing::info!(%sel, records = prepared.records.len(), quarantined = prepared.quarantined.len(), "prepared corpus");
    Ok((prepared, hash, sel))
}

fn train_config(cfg: &Config) -> Result<TrainConfig, CliError> {
    Ok(TrainConfig {
        learning_rate: cfg.f64("train.learning_rate")?,
        batch_size: cfg.usize("train.batch_size")?,
        max_epochs: cfg.usize("train.max_epochs")?,
        patience: cfg.usize("train.patience")?,
        holdout_fraction: cfg.f64("train.holdout_fraction")?,
        clip_norm: cfg.f64("train.clip_norm")?,
        seed: cfg.u64("train.seed")?,
    })
}

#[derive(Clone, Copy)]
enum Model {
    Sites,
    Ranker,
    Contrastive,
}

fn write_curve(dir: &Path, stem: &str, curve: &LearningCurve) -> Result<(), CliError> {
    let path = dir.join(format!("{stem}_curve.csv"));
    let f = std::fs::File::create(&path).map_err(io_err(&path))?;
    curve.write_csv(f)?;
    Ok(())
}

fn train(cfg: &Config, dir: &Path, which: Model) -> Result<(), CliError> {
    let (prepared, hash, _) = load_selection(cfg, "data.train_split", dir)?;
    let tc = train_config(cfg)?;
    let (file, curve, stem) = match which {
        Model::Sites => {
            let (m, c): (TrainedModel, _) = fit_sites(&prepared, &tc, &hash)?;
            (m.to_file(), c, "sites")
        }
        Model::Ranker => {
            let encoder = EncoderRegistry::default().get(&cfg.str("ranker.encoder")?)?;
            let (m, c) = fit_ranker(&prepared, encoder.as_ref(), cfg.usize("ranker.negatives")?, &tc, &hash)?;
            (m.to_file(), c, "ranker")
        }
        Model::Contrastive => {
            let (m, c): (ContrastiveModel, _) =
                fit_contrastive(&prepared, cfg.usize("contrastive.negatives_per_type")?, &tc, &hash)?;
            (m.to_file(), c, "contrastive")
        }
    };
    let name = match which {
        Model::Sites => SITES_FILE,
        Model::Ranker => RANKER_FILE,
        Model::Contrastive => CONTRASTIVE_FILE,
    };
    let path = dir.join(name);
    save_model(&path, &file)?;
    write_curve(dir, stem, &curve)?;
    let last = curve.epochs.last();
    println!(
        "{} written; best epoch {} of {}, holdout accuracy {:.4}",
        path.display(),
        curve.best_epoch,
        curve.epochs.len(),
        curve.epochs.get(curve.best_epoch.saturating_sub(1)).or(last).map_or(0.0, |e| e.holdout_accuracy)
    );
    Ok(())
}

fn registry(cfg: &Config) -> Result<PipelineRegistry, CliError> {
    let dir = cfg.path("models.dir")?;
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("models.dir {} is not a directory", dir.display())));
    }
    Ok(PipelineRegistry::from_model_dir(&dir)?)
}

fn eval(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let name = cfg.str("eval.pipeline")?;
    let ns = cfg.usize_list("eval.ns")?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(ConfigError::Type { key: "eval.ns".into(), expected: "a non-empty list of positive integers" }.into());
    }
    let (prepared, _, sel) = load_selection(cfg, "eval.split", dir)?;
    let label = sel.to_string();
    let models = cfg.path("models.dir")?;
    let report = match name.as_str() {
        "sites" => {
            let m = TrainedModel::from_file(rmech_core::neural::load_model(&models.join(SITES_FILE))?)?;
            evaluate_sites(&m, &prepared, &ns, &label)?
        }
        "ranker" => {
            cfg.require(&["ranker.negatives", "train.seed"])?;
            let s = TrainedModel::from_file(rmech_core::neural::load_model(&models.join(SITES_FILE))?)?;
            let r = TrainedModel::from_file(rmech_core::neural::load_model(&models.join(RANKER_FILE))?)?;
            let two = TwoStepPipeline::from_models(s, r)?;
            evaluate_ranker(&two, &prepared, &ns, cfg.usize("ranker.negatives")?, cfg.u64("train.seed")?, &label)?
        }
        _ => {
            let p = registry(cfg)?.get(&name)?;
            let opts = PredictOptions { k_atoms: cfg.usize("eval.k_atoms")?, ..PredictOptions::default() };
            evaluate_end_to_end(p.as_ref(), &prepared, &ns, &opts, &label)?
        }
    };
    let stem = format!("eval_{name}_{label}");
    write_json(&dir.join(format!("{stem}.json")), &report)?;
    let csv_path = dir.join(format!("{stem}_size.csv"));
    let f = std::fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    report.write_size_csv(f).map_err(|e| CliError::Io { path: csv_path.clone(), source: std::io::Error::other(e) })?;
    let acc: Vec<String> = report.ns.iter().zip(&report.accuracy).map(|(n, a)| format!("top-{n} {a:.1}%")).collect();
    println!(
        "{} on {label}: {} records, {}; {:.4} s per record",
        report.pipeline,
        report.records,
        acc.join(", "),
        report.mean_seconds
    );
    Ok(())
}

fn predict(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let reactants = cfg.str("predict.reactants")?;
    let opts = PredictOptions {
        top_n: cfg.usize("predict.top_n")?,
        k_atoms: cfg.usize("predict.k_atoms")?,
        rules: if cfg.bool("predict.rules")? { RuleSet::all() } else { RuleSet::none() },
    };
    opts.validate()?;
    let ms = parse_smiles(&reactants)?;
    let p = registry(cfg)?.get(&cfg.str("predict.pipeline")?)?;
    let preds = p.predict(&Arc::new(make_explicit(&ms)), &opts)?;
    let resp = SingleStepResponse {
        pipeline: p.name().to_string(),
        reactants: write_smiles(&ms, true, false),
        predictions: preds
            .iter()
            .map(|x| PredictionView { rank: x.rank, score: x.score, step: StepSummary::of(&x.step) })
            .collect(),
    };
    write_json(&dir.join("predictions.json"), &resp)?;
    let mut out = std::io::stdout().lock();
    for v in &resp.predictions {
        let _ = writeln!(out, "{:>3}  {:.4}  {}  {}", v.rank, v.score, v.step.arrows, v.step.products);
    }
    Ok(())
}

fn pathway(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let cases = load_benchmark(&cfg.path("pathway.fixture")?)?;
    let name = cfg.str("pathway.pipeline")?;
    let inner: Arc<dyn Pipeline> = registry(cfg)?.get(&name)?;
    let pipeline: Arc<dyn Pipeline> = if cfg.bool("pathway.oracle")? { Arc::new(teacher_oracle(inner)) } else { inner };
    let base = SearchConfig {
        breadth: cfg.usize("pathway.breadth")?,
        score_threshold: cfg.f64("pathway.threshold")?,
        node_budget: cfg.usize("pathway.node_budget")?,
        k_atoms: cfg.usize("pathway.k_atoms")?,
        ..SearchConfig::default()
    };
    base.validate()?;
    let summary = run_benchmark(&cases, pipeline.as_ref(), &base)?;
    write_json(&dir.join("recovery.json"), &summary)?;
    let mut out = std::io::stdout().lock();
    for r in &summary.results {
        let hit = r.hit_depth.map_or("-".to_string(), |d| d.to_string());
        let _ = writeln!(out, "{}  depth {}  hit {hit}  nodes {}{}", r.id, r.depth, r.nodes, if r.truncated { " (truncated)" } else { "" });
    }
    let _ = writeln!(
        out,
        "{name}{}: recovered {}/{} ({:.1}%)",
        if cfg.bool("pathway.oracle")? { " (oracle)" } else { "" },
        summary.recovered,
        summary.cases,
        100.0 * summary.rate
    );
    Ok(())
}

fn fixture(cfg: &Config) -> Result<(), CliError> {
    let path = cfg.path("pathway.fixture")?;
    let cases = default_cases()?;
    let mut buf = Vec::new();
    write_benchmark(&mut buf, &cases).map_err(io_err(&path))?;
    write_file(&path, &buf)?;
    println!("{} cases written to {}", cases.len(), path.display());
    Ok(())
}

/// Loads both learned pipelines or refuses to start.
pub fn serving_state(cfg: &Config) -> Result<AppState, CliError> {
    let registry = registry(cfg)?;
    registry.require(&LEARNED_PIPELINES).map_err(|e| {
        CliError::Serve(format!("{e}: serve needs {SITES_FILE}, {RANKER_FILE} and {CONTRASTIVE_FILE} in models.dir"))
    })?;
    let node_budget = cfg.usize("serve.node_budget")?;
    let max_sessions = cfg.usize("serve.max_sessions")?;
    if node_budget == 0 || max_sessions == 0 {
        return Err(ConfigError::Type { key: "serve.node_budget".into(), expected: "positive budgets" }.into());
    }
    Ok(AppState {
        registry,
        sessions: SessionStore::new(Duration::from_secs(cfg.u64("serve.idle_timeout_secs")?), max_sessions),
        node_budget,
    })
}

fn serve(cfg: &Config) -> Result<(), CliError> {
    let state = Arc::new(serving_state(cfg)?);
    let addr = format!("{}:{}", cfg.str("serve.host")?, cfg.usize("serve.port")?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Serve(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| CliError::Serve(format!("{addr}: {e}")))?;
        let bound = listener.local_addr().map_err(|e| CliError::Serve(e.to_string()))?;
        tracing::info!(%bound, pipelines = ?state.registry.names(), "listening");
        println!("listening on http://{bound}");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Serve(e.to_string()))
    })
}
