use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use macnet::inference::Method;
use macnet::network::{infer_network, InferConfig};
use macnet_cli::error::CliError;
use macnet_cli::ingest::ingest;
use macnet_cli::output::{read_network, write_network};
use serde_json::Value;

fn macnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macnet")).args(args).output().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

/// Deterministic pseudo-data: node `v` sample `s` attribute `a`.
fn value(v: usize, s: usize, a: usize) -> f64 {
    let shared = ((s * 7 + 3) % 11) as f64;
    let own = (((v + 1) * (s + 2) * (a + 5)) % 13) as f64;
    if v < 2 {
        shared + 0.3 * own
    } else {
        own
    }
}

fn write_attr(dir: &Path, name: &str, nodes: usize, n: usize, a: usize) -> PathBuf {
    let mut text = String::from("node_id");
    for s in 1..=n {
        text.push_str(&format!(",s{s}"));
    }
    text.push('\n');
    for v in 0..nodes {
        text.push_str(&format!("n{v}"));
        for s in 0..n {
            text.push_str(&format!(",{}", value(v, s, a)));
        }
        text.push('\n');
    }
    let path = dir.join(format!("{name}.csv"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn edge_list_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let files = vec![write_attr(dir.path(), "protein", 6, 30, 0), write_attr(dir.path(), "gene", 6, 30, 1)];
    let data = ingest(&files, None).unwrap();
    assert_eq!(data.attribute_names(), ["protein", "gene"]);
    let net = infer_network(&data, &InferConfig::new(Method::Cca, 0.2)).unwrap();
    assert!(!net.edges.is_empty());
    write_network(&dir.path().join("out"), &net, None).unwrap();
    let back = read_network(&dir.path().join("out/edges.csv")).unwrap();
    assert_eq!(back, net);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_attr(dir.path(), "protein", 6, 30, 0);
    let b = write_attr(dir.path(), "gene", 6, 30, 1);
    let mut outputs = Vec::new();
    for run in ["r1", "r2"] {
        let out = dir.path().join(run);
        let status = macnet(&["infer", a.to_str().unwrap(), b.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push((std::fs::read(out.join("edges.csv")).unwrap(), std::fs::read(out.join("meta.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn single_attribute_pearson_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_attr(dir.path(), "protein", 5, 25, 0);
    let out = dir.path().join("out");
    let res = macnet(&["infer", a.to_str().unwrap(), "--method", "pearson", "--fdr", "0.1", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.join("edges.csv")).unwrap();
    assert!(text.starts_with("node_i,node_j,method,similarity,statistic,df,p,q,contrib_1\n"));
    assert!(text.contains("n0,n1,pearson"));
}

#[test]
fn usage_errors_exit_one() {
    let res = macnet(&["infer", "--no-such-flag"]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(stderr_json(&res)["error"], "Usage");
    let res = macnet(&["classify", "missing.csv", "--threshold", "1.5", "--out", "x"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(macnet(&["--help"]).status.success());
}

#[test]
fn non_numeric_cell_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("protein.csv");
    std::fs::write(&path, "node_id,s1,s2,s3\na,1,2,3\nb,4,oops,6\nc,1,1,2\n").unwrap();
    let res = macnet(&["infer", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert_eq!(err["error"], "NonNumericCell");
    assert_eq!(err["line"], 3);
    assert_eq!(err["column"], 3);
}

#[test]
fn duplicate_node_id_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("protein.csv");
    std::fs::write(&path, "node_id,s1,s2,s3\na,1,2,3\nb,4,5,6\na,1,1,2\n").unwrap();
    match ingest(&[path], None) {
        Err(CliError::DuplicateNodeId { line, id, .. }) => {
            assert_eq!(line, 4);
            assert_eq!(id, "a");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn node_sets_must_agree_across_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("protein.csv");
    let b = dir.path().join("gene.csv");
    std::fs::write(&a, "node_id,s1,s2,s3\na,1,2,3\nb,4,5,7\nc,1,1,2\n").unwrap();
    std::fs::write(&b, "node_id,s1,s2,s3\na,1,2,3\nb,4,5,7\nz,1,1,2\n").unwrap();
    match ingest(&[a, b.clone()], None) {
        Err(CliError::SchemaMismatch { file, message, .. }) => {
            assert_eq!(file, b);
            assert!(message.contains("'c'"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn exit_codes_by_error_kind() {
    assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
    assert_eq!(CliError::Core(macnet::Error::Singular).exit_code(), 3);
    assert_eq!(CliError::Core(macnet::Error::NoConvergence { iterations: 5 }).exit_code(), 3);
    assert_eq!(CliError::Core(macnet::Error::EmptyInput).exit_code(), 2);
    let json = CliError::Core(macnet::Error::Singular).to_json();
    assert_eq!(json["error"], "Singular");
    assert_eq!(json["exit_code"], 3);
}
