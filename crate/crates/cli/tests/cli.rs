use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qdensity::entailment::EntailmentVerdict;
use qdensity::io;
use qdensity::mps::MatrixProductState;
use qdensity::qprob::Reduction;
use serde_json::Value;
use tempfile::TempDir;

const THREE_PHRASE: &str = "x,y,p\norange,fruit,0.3333333333333333\ngreen,fruit,0.3333333333333333\npurple,vegetable,0.3333333333333334\n";

const CORPUS: &str = "small ripe orange fruit\nlarge rotten green vegetable\nlarge ripe orange vegetable\nsmall ripe orange vegetable\nsmall rotten orange fruit\n";

fn qdensity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdensity"))
        .args(args)
        .env_remove("QDENSITY_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qdensity(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stderr.is_empty());
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = qdensity(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    assert!(out.stdout.is_empty());
    String::from_utf8(out.stderr).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reduce_three_phrase() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "pi.csv", THREE_PHRASE);
    let r: Reduction = serde_json::from_str(&ok(&["reduce", "--csv", s(&csv)])).unwrap();
    assert!((r.eigenvalues[0] - 2.0 / 3.0).abs() < 1e-10);
    assert!((r.eigenvalues[1] - 1.0 / 3.0).abs() < 1e-10);
    let t = 1.0 / 3.0;
    let want = [[t, t, 0.0], [t, t, 0.0], [0.0, 0.0, t]];
    for (i, row) in want.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            assert!((r.rho_x.matrix().get(i, j) - w).abs() < 1e-12);
        }
    }
}

#[test]
fn reduce_output_file_and_orderings() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "pi.csv", THREE_PHRASE);
    let order = write(&dir, "y.txt", "vegetable\nfruit\n");
    let out = dir.path().join("r.json");
    assert_eq!(ok(&["reduce", "--csv", s(&csv), "--y-order", s(&order), "--out", s(&out)]), "");
    let r: Reduction = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((r.marginal_y[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((r.marginal_y[1] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn reduce_point_mass_has_zero_entropy() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "pi.csv", "x,y,p\na,b,1\n");
    let v: Value = serde_json::from_str(&ok(&["reduce", "--csv", s(&csv)])).unwrap();
    assert_eq!(v["entanglement_entropy"].as_f64(), Some(0.0));
}

#[test]
fn reduce_dataset_graph() {
    let dir = TempDir::new().unwrap();
    let ds = write(&dir, "ds.txt", "a u\nb u\nb v\nc u\nc v\n");
    let r: Reduction = serde_json::from_str(&ok(&["reduce", "--dataset", s(&ds), "--cut", "1"])).unwrap();
    let x = [[1.0, 1.0, 1.0], [1.0, 2.0, 2.0], [1.0, 2.0, 2.0]];
    for (i, row) in x.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            assert!((r.rho_x.matrix().get(i, j) - w / 5.0).abs() < 1e-15);
        }
    }
    let y = [[3.0, 2.0], [2.0, 2.0]];
    for (i, row) in y.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            assert!((r.rho_y.matrix().get(i, j) - w / 5.0).abs() < 1e-15);
        }
    }
}

#[test]
fn reduce_errors() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "x,y,p\na,b,0.5\na,c,0.4\n");
    let err = fails(&["reduce", "--csv", s(&bad)]);
    assert!(err.contains("0.9"), "{err}");
    let garbled = write(&dir, "g.csv", "x,y,p\na,b,0.5\na,c,half\n");
    assert!(fails(&["reduce", "--csv", s(&garbled)]).contains("line 3"));
    fails(&["reduce"]);
    fails(&["reduce", "--dataset", s(&bad)]);
    fails(&["reduce", "--csv", "/nonexistent/file.csv"]);
}

#[test]
fn concepts_three_edge() {
    let dir = TempDir::new().unwrap();
    let rel = write(&dir, "r.csv", "x,y\norange,fruit\ngreen,fruit\npurple,vegetable\n");
    let v: Value = serde_json::from_str(&ok(&["concepts", s(&rel)])).unwrap();
    assert_eq!(v["concepts"].as_array().unwrap().len(), 2);
    let all: Value = serde_json::from_str(&ok(&["concepts", s(&rel), "--all"])).unwrap();
    assert_eq!(all["concepts"].as_array().unwrap().len(), 4);
    let cmp: Value = serde_json::from_str(&ok(&["concepts", s(&rel), "--compare-eigen"])).unwrap();
    assert_eq!(cmp["comparison"]["coincide"], Value::Bool(true));
}

#[test]
fn concepts_four_edge_mismatch() {
    let dir = TempDir::new().unwrap();
    let rel = write(&dir, "r.csv", "x,y\norange,fruit\ngreen,fruit\ngreen,vegetable\npurple,vegetable\n");
    let v: Value = serde_json::from_str(&ok(&["concepts", s(&rel), "--compare-eigen"])).unwrap();
    assert_eq!(v["concepts"].as_array().unwrap().len(), 3);
    assert_eq!(v["comparison"]["coincide"], Value::Bool(false));
    assert_eq!(v["comparison"]["eigenpairs"].as_array().unwrap().len(), 2);
}

#[test]
fn concepts_empty_file_fails() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "e.csv", "");
    fails(&["concepts", s(&empty)]);
    let header_only = write(&dir, "h.csv", "x,y\n");
    fails(&["concepts", s(&header_only)]);
}

#[test]
fn entail_chain() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "c.txt", CORPUS);
    let v: EntailmentVerdict = serde_json::from_str(&ok(&[
        "entail", s(&corpus), "--pattern", "pos3=orange", "--against", "pos2=ripe,pos3=orange", "--unnormalized",
    ]))
    .unwrap();
    assert!(v.entails);
    assert!(v.min_eigenvalue.abs() < 1e-12);
    assert_eq!(v.scale, 1.0);

    let same: EntailmentVerdict = serde_json::from_str(&ok(&[
        "entail", s(&corpus), "--pattern", "pos3=orange", "--against", "pos3=orange",
    ]))
    .unwrap();
    assert!(same.entails);
    assert!(same.min_eigenvalue.abs() < 1e-12);

    let reversed: EntailmentVerdict = serde_json::from_str(&ok(&[
        "entail", s(&corpus), "--pattern", "pos2=ripe,pos3=orange", "--against", "pos3=orange", "--unnormalized",
    ]))
    .unwrap();
    assert!(!reversed.entails);
    assert!(reversed.min_eigenvalue < -0.1);
}

#[test]
fn entail_unobserved_pattern_fails() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "c.txt", CORPUS);
    fails(&["entail", s(&corpus), "--pattern", "pos3=blue", "--against", "pos3=orange"]);
    fails(&["entail", s(&corpus), "--pattern", "nonsense", "--against", "pos3=orange"]);
}

#[test]
fn parity_train_then_eval() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("m.json");
    ok(&["parity", "train", "--n", "5", "--fraction", "1.0", "--seed", "1", "--out", s(&model)]);
    let m: MatrixProductState = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(m.n(), 5);
    let v: Value = serde_json::from_str(&ok(&["parity", "eval", "--model", s(&model)])).unwrap();
    assert!(v["bhattacharyya"].as_f64().unwrap() < 1e-8);
    assert!(v["odd_mass"].as_f64().unwrap() < 1e-10);
}

#[test]
fn parity_sample_point_mass() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.txt", "01101\n");
    let model = dir.path().join("m.json");
    ok(&["parity", "train", "--data", s(&data), "--out", s(&model)]);
    let text = ok(&["parity", "sample", "--model", s(&model), "--count", "3", "--seed", "2"]);
    assert_eq!(text, "01101\n01101\n01101\n");
}

#[test]
fn parity_experiment_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let args = ["parity", "experiment", "--n", "8", "--fractions", "0.25,0.5,1", "--replicas", "3", "--seed", "7"];
    let mut with_out = args.to_vec();
    with_out.extend(["--out", s(&a)]);
    ok(&with_out);
    let stdout = ok(&args);
    let serial = Command::new(env!("CARGO_BIN_EXE_qdensity"))
        .args(args)
        .env("QDENSITY_THREADS", "1")
        .output()
        .unwrap();
    assert!(serial.status.success());
    let file = fs::read_to_string(&a).unwrap();
    assert_eq!(file, stdout);
    assert_eq!(file.as_bytes(), serial.stdout.as_slice());
    let rows = io::parse_experiment_csv(&file).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows[6..].iter().all(|r| r.bhattacharyya < 1e-8));
}

#[test]
fn parity_flag_validation() {
    fails(&["parity", "train", "--n", "5", "--fraction", "0"]);
    fails(&["parity", "train", "--n", "2"]);
    fails(&["parity", "experiment", "--n", "8", "--fractions", "0.001", "--replicas", "1"]);
    fails(&["parity", "experiment", "--n", "8"]);
    fails(&["parity", "sample", "--model", "/nonexistent.json", "--count", "1"]);
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_qdensity"))
        .args(["parity", "experiment", "--n", "4", "--fractions", "1", "--replicas", "1"])
        .env("QDENSITY_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!bad_threads.status.success());
}
