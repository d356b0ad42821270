use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rmech_core::pathway::{load_benchmark, write_benchmark};
use rmech_core::predictor::EvalReport;

const BIN: &str = env!("CARGO_BIN_EXE_rmech");

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn rmech(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("RMECH_PORT")
        .env_remove("RMECH_MODEL_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

const SMALL: &str = r#"
[run]
root = "runs"

[data]
corpus = "corpus"
adapter = "rxn"
train_split = "all"

[synth]
seed = 5
test_fraction = 0.3
chain_length = 2
add_oxygen = true
pool_size = 4

[train]
seed = 5
learning_rate = 0.001
batch_size = 16
max_epochs = 1
patience = 1
holdout_fraction = 0.1
clip_norm = 5.0

[contrastive]
negatives_per_type = 3

[models]
dir = "models"

[eval]
pipeline = "contrastive"
split = "all"
ns = [1, 3, 10]
k_atoms = 10

[predict]
reactants = "[Cl].[CH4]"
pipeline = "teacher"
top_n = 3
k_atoms = 10
rules = true

[pathway]
fixture = "cases.jsonl"
pipeline = "teacher"
oracle = false
breadth = 10
threshold = 0.0
node_budget = 2000
k_atoms = 10
"#;

#[test]
fn missing_config_key_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "[data]\ncorpus = \"x\"\nadapter = \"rxn\"\n").unwrap();
    let out = rmech(&["eval", "-c", "c.toml", "--run-dir", "r", "--split", "core-test"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    for key in ["models.dir", "eval.pipeline", "eval.ns", "eval.k_atoms"] {
        assert!(err.contains(key), "{key} not named in: {err}");
    }
    // Supplied by the flag, so not reported.
    assert!(!err.contains("eval.split"), "{err}");
    assert!(!tmp.path().join("r").exists(), "run dir created before the config check");

    let out = rmech(&["train-sites", "-c", "c.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("run.root"));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(rmech(&["frobnicate"], tmp.path()).status.code(), Some(2));
    assert_eq!(rmech(&["fixture", "--set", "novalue"], tmp.path()).status.code(), Some(2));
    let out = rmech(&["fixture", "--config", "absent.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("absent.toml"));
    std::fs::write(tmp.path().join("bad.toml"), "[eval]\nns = \"one\"\n").unwrap();
    let out = rmech(
        &["eval", "-c", "bad.toml", "--run-dir", "r", "--set", "data.corpus=x", "--set", "data.adapter=rxn", "--set", "models.dir=.",
          "--set", "eval.pipeline=teacher", "--set", "eval.split=all", "--set", "eval.k_atoms=10"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("eval.ns"));
}

#[test]
fn serve_refuses_without_both_pipelines() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("models")).unwrap();
    let cfg = "[serve]\nhost = \"127.0.0.1\"\nport = 0\nidle_timeout_secs = 60\nnode_budget = 100\nmax_sessions = 4\n";
    std::fs::write(tmp.path().join("s.toml"), cfg).unwrap();
    let out = Command::new(BIN)
        .args(["serve", "-c", "s.toml", "--run-dir", "r"])
        .current_dir(tmp.path())
        .env("RMECH_MODEL_DIR", "models")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("two_step") || err.contains("contrastive"), "{err}");
    assert!(err.contains("sites.rmm"), "{err}");

    // The environment names the model directory when the config does not.
    let out = Command::new(BIN)
        .args(["serve", "-c", "s.toml", "--run-dir", "r"])
        .current_dir(tmp.path())
        .env("RMECH_MODEL_DIR", "nowhere")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(text(&out.stderr).contains("nowhere"));
    let out = rmech(&["serve", "-c", "s.toml", "--run-dir", "r"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("models.dir"));
}

#[test]
fn synth_train_eval_predict_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("small.toml"), SMALL).unwrap();

    let out = rmech(&["synth-corpus", "-c", "small.toml", "--run-dir", "runs/synth"], dir);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(dir.join("corpus/core_train.rxn").exists());
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("runs/synth/corpus_stats.json")).unwrap()).unwrap();
    assert!(stats["records"].as_u64().unwrap() > 0);

    let out = rmech(&["train-contrastive", "-c", "small.toml", "--run-dir", "models"], dir);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for f in ["contrastive.rmm", "contrastive_curve.csv", "config-train-contrastive.toml"] {
        assert!(dir.join("models").join(f).exists(), "{f}");
    }

    let out = rmech(&["eval", "-c", "small.toml", "--pipeline", "contrastive", "--split", "all"], dir);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let runs: Vec<PathBuf> = std::fs::read_dir(dir.join("runs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("eval-"))
        .collect();
    assert_eq!(runs.len(), 1);
    let run = &runs[0];
    let snapshot = std::fs::read_to_string(run.join("config-eval.toml")).unwrap();
    assert!(snapshot.contains("split = \"all\""));
    let report: EvalReport =
        serde_json::from_str(&std::fs::read_to_string(run.join("eval_contrastive_combined-all.json")).unwrap()).unwrap();
    assert_eq!(report.ns, vec![1, 3, 10]);
    assert!(report.records > 0);
    assert!(report.is_monotone());
    let csv = std::fs::read_to_string(run.join("eval_contrastive_combined-all_size.csv")).unwrap();
    assert!(csv.starts_with("pipeline,bucket,records,top1,top3,top10"), "{csv}");
    assert!(text(&out.stdout).contains("top-10"));

    let out = rmech(&["predict", "-c", "small.toml", "--run-dir", "runs/p"], dir);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert_eq!(stdout.lines().count(), 3, "{stdout}");
    assert!(stdout.lines().next().unwrap().contains("Cl.[CH3]"), "{stdout}");
    assert!(dir.join("runs/p/predictions.json").exists());

    let out = rmech(&["predict", "-c", "small.toml", "--run-dir", "runs/p", "--reactants", "C("], dir);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("position 1"));
}

#[test]
fn pathway_verb_prints_recovery() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("small.toml"), SMALL).unwrap();
    std::fs::create_dir(dir.join("models")).unwrap();
    let cases = load_benchmark(&repo().join("fixtures/pathway_cases.jsonl")).unwrap();
    let few: Vec<_> = cases.into_iter().filter(|c| c.depth <= 2).take(4).collect();
    let mut buf = Vec::new();
    write_benchmark(&mut buf, &few).unwrap();
    std::fs::write(dir.join("cases.jsonl"), buf).unwrap();

    // The fixture follows the teacher's first choice, so the teacher finds it.
    let out = rmech(&["pathway", "-c", "small.toml", "--run-dir", "runs/pw", "--fixture", "cases.jsonl"], dir);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("teacher: recovered 4/4 (100.0%)"), "{stdout}");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("runs/pw/recovery.json")).unwrap()).unwrap();
    assert_eq!(summary["recovered"], 4);

    std::fs::write(dir.join("broken.jsonl"), "{\"id\": 1}\n").unwrap();
    let out = rmech(&["pathway", "-c", "small.toml", "--run-dir", "runs/pw", "--fixture", "broken.jsonl"], dir);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("line 1"));
}

#[test]
fn fixture_verb_reproduces_the_shipped_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rmech(&["fixture", "--run-dir", "r", "--out", "cases.jsonl"], tmp.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let made = std::fs::read_to_string(tmp.path().join("cases.jsonl")).unwrap();
    let shipped = std::fs::read_to_string(repo().join("fixtures/pathway_cases.jsonl")).unwrap();
    assert_eq!(made, shipped);
}

#[test]
fn shipped_default_config_has_every_key() {
    let cfg = rmech_service::config::Config::load(&repo().join("configs/default.toml")).unwrap();
    for verb in ["synth-corpus", "train-sites", "train-ranker", "train-contrastive", "eval", "predict", "pathway", "fixture", "serve"] {
        cfg.require(rmech_service::cli::required_keys(verb)).unwrap_or_else(|e| panic!("{verb}: {e}"));
    }
    cfg.require(&["run.root"]).unwrap();
}
