//! Starts the real binary on the shipped models and drives it over TCP.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use rmech_core::pathway::load_benchmark;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

struct Server {
    child: Child,
    addr: String,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn start(run_dir: &Path) -> Server {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rmech"))
        .args(["serve", "-c"])
        .arg(repo().join("configs/default.toml"))
        .arg("--run-dir")
        .arg(run_dir)
        .args(["--port", "0"])
        .env("RMECH_MODEL_DIR", repo().join("models"))
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("got `{line}`")).to_string();
    Server { child, addr }
}

fn request(addr: &str, method: &str, path: &str, body: Option<&Value>) -> (u16, Value) {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(60))).unwrap();
    let payload = body.map(|b| b.to_string()).unwrap_or_default();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )
    .unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).unwrap();
    let (head, body) = raw.split_once("\r\n\r\n").unwrap();
    let status: u16 = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, serde_json::from_str(body).unwrap_or(Value::Null))
}

#[test]
fn live_create_expand_inspect_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let server = start(&tmp.path().join("run"));
    let addr = server.addr.as_str();
    let t = Instant::now();

    let (s, health) = request(addr, "GET", "/api/v1/health", None);
    assert_eq!(s, 200);
    assert_eq!(health["pipelines"], json!(["contrastive", "teacher", "two_step"]));

    let (s, single) = request(addr, "POST", "/api/v1/singlestep", Some(&json!({"reactants": "[Cl].[CH4]"})));
    assert_eq!(s, 200, "{single:#}");
    assert!(!single["predictions"][0]["arrows"].as_str().unwrap().is_empty());
    let (s, err) = request(addr, "POST", "/api/v1/singlestep", Some(&json!({"reactants": "C("})));
    assert_eq!(s, 400);
    assert_eq!(err["position"], 1);

    let case = load_benchmark(&repo().join("fixtures/pathway_cases.jsonl")).unwrap().remove(0);
    let req = json!({
        "reactants": case.reactants,
        "targets": case.targets,
        "context": case.context,
        "depth": case.depth,
        "breadth": 10
    });
    let (s, created) = request(addr, "POST", "/api/v1/pathway", Some(&req));
    assert_eq!(s, 200, "{created:#}");
    let session = created["session"].as_str().unwrap().to_string();
    let mut hits = created["snapshot"]["hits"].clone();
    for _ in 1..case.depth {
        if !hits.as_array().unwrap().is_empty() {
            break;
        }
        let (s, body) = request(addr, "POST", &format!("/api/v1/pathway/{session}/expand"), Some(&json!({"next_level": true})));
        assert_eq!(s, 200, "{body:#}");
        hits = body["hits"].clone();
    }
    let hit = hits.as_array().unwrap().first().expect("the contrastive model finds the isoprene target").clone();

    // Inspect the hit: every node on its path carries the step that made it.
    let (s, snap) = request(addr, "GET", &format!("/api/v1/pathway/{session}"), None);
    assert_eq!(s, 200);
    let nodes = snap["snapshot"]["nodes"].as_array().unwrap();
    let path: Vec<usize> = hit["path"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
    assert_eq!(path[0], 0);
    for pair in path.windows(2) {
        let child = &nodes[pair[1]];
        assert_eq!(child["parent"].as_u64().unwrap() as usize, pair[0]);
        assert!(child["step"]["smirks"].as_str().unwrap().contains(">>"));
        assert!(!child["step"]["arrows"].as_str().unwrap().is_empty());
    }
    let elapsed = t.elapsed();
    assert!(elapsed < Duration::from_secs(10), "round trip took {elapsed:?}");
}
