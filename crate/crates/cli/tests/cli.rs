use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use phishguard::features::Feature;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phishguard"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Deterministic ternary table in canonical column order with a label driven
/// by three features.
fn write_toy(dir: &Path) -> PathBuf {
    let names = Feature::canonical_names();
    let mut text = names.join(",") + ",label\n";
    let mut state = 12345u64;
    for _ in 0..240 {
        let row: Vec<i32> = (0..names.len())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 3) as i32 - 1
            })
            .collect();
        let score = 2 * row[0] + row[1] + row[3] + row[7];
        let label = i32::from(score > 0);
        let cells: Vec<String> = row.iter().map(i32::to_string).collect();
        text += &format!("{},{label}\n", cells.join(","));
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, text).unwrap();
    path
}

fn trained(dir: &TempDir, model: &str) -> (PathBuf, PathBuf) {
    let data = write_toy(dir.path());
    let out = dir.path().join(format!("{model}.json"));
    let o = run(&["train", "--data", data.to_str().unwrap(), "--model", model, "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (data, out)
}

#[test]
fn ingest_summary_and_idempotence() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path());
    let once = dir.path().join("once.csv");
    let twice = dir.path().join("twice.csv");
    let o = run(&["ingest", data.to_str().unwrap(), "--out", once.to_str().unwrap()]);
    assert!(o.status.success());
    let line = stdout(&o).lines().next().unwrap().to_string();
    assert!(line.ends_with(')') && line.contains(" samples ("), "{line}");
    assert!(dir.path().join("once.csv.manifest.json").exists());
    let o = run(&["ingest", once.to_str().unwrap(), "--out", twice.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&once).unwrap(), std::fs::read(&twice).unwrap());
}

#[test]
fn ingest_empty_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "having_IP_Address,label\n").unwrap();
    let o = run(&["ingest", empty.to_str().unwrap(), "--out", dir.path().join("o.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}

#[test]
fn train_is_deterministic_and_rejects_unknown_models() {
    let dir = tempfile::tempdir().unwrap();
    let (data, first) = trained(&dir, "logistic");
    let second = dir.path().join("again.json");
    let o = run(&["train", "--data", data.to_str().unwrap(), "--model", "logistic", "--out", second.to_str().unwrap(), "--seed", "7"]);
    assert!(stdout(&o).contains("Accuracy"));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let o = run(&["train", "--data", data.to_str().unwrap(), "--model", "bert", "--out", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = trained(&dir, "tree");
    let roc = dir.path().join("roc.csv");
    let o = run(&["evaluate", "--model", model.to_str().unwrap(), "--data", data.to_str().unwrap(), "--roc-csv", roc.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("tree"));
    let text = std::fs::read_to_string(roc).unwrap();
    assert!(text.starts_with("fpr,tpr,threshold\n0,0,inf"));
}

#[test]
fn explain_methods() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = trained(&dir, "logistic");
    let (d, m) = (data.to_str().unwrap(), model.to_str().unwrap());
    let o = run(&["explain", "--model", m, "--data", d, "--method", "ig"]);
    assert!(stdout(&o).contains("label entropy"));
    let o = run(&["explain", "--model", m, "--data", d, "--method", "shap", "--url", "http://192.168.1.1/a@b"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("having_IP_Address"));
    let lime = || stdout(&run(&["explain", "--model", m, "--data", d, "--method", "lime", "--index", "3", "--seed", "5"]));
    assert_eq!(lime(), lime());
    let o = run(&["explain", "--model", m, "--data", d, "--method", "shap", "--index", "100000"]);
    assert_eq!(o.status.code(), Some(2));
}

const REQUEST: &str = r#"{"id":"r1","tool":"classify_url","arguments":{"url":"http://paypal-secure.example.com/login"}}"#;

fn serve_args<'a>(model: &'a str, data: &'a str) -> Vec<&'a str> {
    vec!["serve", "--model", model, "--reference", data, "--pcs-k", "5"]
}

fn stdio_response(model: &str, data: &str) -> String {
    let mut child = bin()
        .args(serve_args(model, data))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    writeln!(child.stdin.take().unwrap(), "{REQUEST}").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    text.lines().next().unwrap().to_string()
}

#[test]
fn serve_stdio_and_tcp_agree_and_interrupt_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = trained(&dir, "logistic");
    let (d, m) = (data.to_str().unwrap(), model.to_str().unwrap());
    let via_stdio = stdio_response(m, d);
    assert!(via_stdio.contains("\"status\":\"ok\""));

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port().to_string();
    let audit = dir.path().join("audit.jsonl");
    let mut args = serve_args(m, d);
    args.extend(["--tcp", &port, "--audit-log", audit.to_str().unwrap()]);
    let mut child = bin().args(&args).stderr(Stdio::null()).spawn().unwrap();
    let deadline = Instant::now() + Duration::from_secs(30);
    let mut stream = loop {
        match TcpStream::connect(format!("127.0.0.1:{port}")) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => thread::sleep(Duration::from_millis(50)),
            Err(e) => panic!("server never listened: {e}"),
        }
    };
    writeln!(stream, "{REQUEST}").unwrap();
    let mut line = String::new();
    BufReader::new(stream.try_clone().unwrap()).read_line(&mut line).unwrap();
    assert_eq!(line.trim_end(), via_stdio);
    drop(stream);

    let killed = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(killed.success());
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(0));
    let log = std::fs::read_to_string(&audit).unwrap();
    assert_eq!(log.lines().count(), 1);
    assert!(log.contains("\"request_id\":\"r1\""));
}

#[test]
fn robustness_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = trained(&dir, "logistic");
    let (d, m) = (data.to_str().unwrap(), model.to_str().unwrap());
    let o = run(&["robustness", "--model", m, "--data", d, "--rate", "0", "--delta", "0", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for line in stdout(&o).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["cis"], 1.0);
        assert_eq!(v["apf"], 0.0);
    }
    let attacked = || stdout(&run(&["robustness", "--model", m, "--data", d, "--rate", "0.3", "--seed", "4"]));
    let table = attacked();
    assert_eq!(table, attacked());
    let validation = table.lines().find(|l| l.contains("validation")).unwrap();
    assert_eq!(validation.split_whitespace().nth(2), Some("1.0000"));
}

#[test]
fn generate_unique_urls() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("urls.txt");
    let o = run(&["generate", "--count", "200", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let urls: std::collections::HashSet<&str> = text.lines().collect();
    assert_eq!(urls.len(), 200);
}
