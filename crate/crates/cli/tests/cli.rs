#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, Output};

use labelsphere::corpus::{build_vocab, count_cooccurrences, read_annotations};
use labelsphere::factorize::{eigendecompose, explained_variance};
use labelsphere::io::read_embedding;
use labelsphere::pmi::{compute_pmi, PmiOptions};
use labelsphere::trainer::{generate_synthetic, SyntheticConfig};
use rand::Rng;
use serde_json::Value;
use tempfile::TempDir;

const FIXTURE: &str = "i1\tcat,pet,animal\ni2\tdog,pet,animal\ni3\tcat,animal\ni4\tdog,pet\ni5\tfish,pet\ni6\tcat,dog,pet\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labelsphere"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
    String::from_utf8(out.stdout).unwrap()
}

fn json_lines(s: &str) -> Vec<Value> {
    s.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn fixture() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ann.tsv"), FIXTURE).unwrap();
    dir
}

fn cluster_fixture(dir: &Path) {
    let config = SyntheticConfig {
        clusters: 4,
        labels_per_cluster: 4,
        cooccurrence_strength: 1.0,
        ..Default::default()
    };
    let data = generate_synthetic(&config, 600, 2).unwrap();
    let mut text = String::new();
    for (i, set) in data.labelsets.iter().enumerate() {
        let names: Vec<String> = set.iter().map(|l| format!("c{}l{}", l / 4, l % 4)).collect();
        text.push_str(&format!("x{i}\t{}\n", names.join(",")));
    }
    std::fs::write(dir.join("clusters.tsv"), text).unwrap();
}

#[test]
fn build_writes_header_and_reports_diagnostics() {
    let dir = fixture();
    let report = ok(
        dir.path(),
        &["build", "--annotations", "ann.tsv", "--embeddings", "emb.tsv", "--k", "3"],
    );
    let emb = std::fs::read_to_string(dir.path().join("emb.tsv")).unwrap();
    assert!(emb.starts_with("labelsphere v1 N=5 K=3\n"));
    let vocab = std::fs::read_to_string(dir.path().join("emb.vocab")).unwrap();
    assert_eq!(vocab.lines().next(), Some("pet\t0\t5"));

    let v: Value = serde_json::from_str(report.trim()).unwrap();
    assert_eq!(v["n"], 5);
    assert_eq!(v["k"], 3);
    let records = read_annotations(FIXTURE.as_bytes()).unwrap();
    let vocab = build_vocab(&records, 1).unwrap();
    let stats = count_cooccurrences(&records, &vocab).unwrap();
    let spectrum = eigendecompose(&compute_pmi(&stats, PmiOptions::default()).unwrap()).unwrap();
    assert_eq!(v["explained_variance"].as_f64().unwrap(), explained_variance(&spectrum, 3).unwrap());
    assert_eq!(
        v["clamped_count"].as_u64().unwrap() as usize,
        spectrum.eigenvalues()[..3].iter().filter(|&&l| l < 0.0).count()
    );
}

#[test]
fn default_k_is_vocabulary_size_for_small_corpora() {
    let dir = fixture();
    ok(dir.path(), &["build", "--annotations", "ann.tsv", "--embeddings", "emb.tsv"]);
    let file = read_embedding(std::fs::read(dir.path().join("emb.tsv")).unwrap().as_slice()).unwrap();
    assert_eq!(file.embedding.k(), 5);
}

#[test]
fn oversized_k_is_an_argument_error() {
    let dir = fixture();
    let out = run(
        dir.path(),
        &["build", "--annotations", "ann.tsv", "--embeddings", "emb.tsv", "--k", "6"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("k = 6"));
}

#[test]
fn missing_annotations_fail_with_message() {
    let dir = fixture();
    let out = run(dir.path(), &["build", "--annotations", "nope.tsv", "--embeddings", "emb.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.tsv"));
}

#[test]
fn lanczos_solver_matches_dense_embedding() {
    let dir = tempfile::tempdir().unwrap();
    cluster_fixture(dir.path());
    ok(
        dir.path(),
        &["build", "--annotations", "clusters.tsv", "--embeddings", "dense.tsv", "--k", "5"],
    );
    let report = ok(
        dir.path(),
        &[
            "build",
            "--annotations",
            "clusters.tsv",
            "--embeddings",
            "lanczos.tsv",
            "--k",
            "5",
            "--solver",
            "lanczos",
        ],
    );
    assert!(json_lines(&report)[0]["explained_variance"].is_null());
    let read = |name: &str| read_embedding(std::fs::read(dir.path().join(name)).unwrap().as_slice()).unwrap();
    let (a, b) = (read("dense.tsv"), read("lanczos.tsv"));
    let diff = (a.embedding.gram() - b.embedding.gram()).norm();
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn nearest_excludes_self_and_prefers_cluster_mates() {
    let dir = tempfile::tempdir().unwrap();
    cluster_fixture(dir.path());
    ok(
        dir.path(),
        &["build", "--annotations", "clusters.tsv", "--embeddings", "emb.tsv", "--k", "8"],
    );
    for query in ["c0l0", "c2l3"] {
        let lines = json_lines(&ok(
            dir.path(),
            &["query", "--embeddings", "emb.tsv", "--label", query, "--p", "15"],
        ));
        let labels: Vec<&str> = lines.iter().map(|v| v["label"].as_str().unwrap()).collect();
        assert!(!labels.contains(&query));
        let cluster = &query[..2];
        assert!(labels[..3].iter().all(|l| l.starts_with(cluster)), "{labels:?}");
        let prox: Vec<f64> = lines.iter().map(|v| v["proximity"].as_f64().unwrap()).collect();
        assert!(prox.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn encode_decode_returns_the_query_first() {
    let dir = fixture();
    ok(dir.path(), &["build", "--annotations", "ann.tsv", "--embeddings", "emb.tsv"]);
    let lines = json_lines(&ok(
        dir.path(),
        &[
            "query",
            "--embeddings",
            "emb.tsv",
            "--mode",
            "encode-decode",
            "--label",
            "fish",
            "--p",
            "2",
        ],
    ));
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["label"], "fish");
    assert_eq!(lines[0]["proximity"].as_f64(), Some(1.0));
}

#[test]
fn query_errors() {
    let dir = fixture();
    ok(dir.path(), &["build", "--annotations", "ann.tsv", "--embeddings", "emb.tsv"]);
    let out = run(
        dir.path(),
        &[
            "query",
            "--embeddings",
            "emb.tsv",
            "--mode",
            "arithmetic",
            "--label",
            "cat",
            "--minus",
            "cat",
        ],
    );
    assert_ne!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let out = run(dir.path(), &["query", "--embeddings", "emb.tsv", "--label", "zebra"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zebra"));
}

fn eval_fixture(dir: &Path) {
    std::fs::write(dir.join("vocab.tsv"), "a\t0\t5\nb\t1\t3\nc\t2\t2\n").unwrap();
    std::fs::write(dir.join("truth.tsv"), "x1\ta\nx2\tb\nx3\ta,b\n").unwrap();
}

#[test]
fn eval_perfect_predictions_score_counted_class_fraction() {
    let dir = tempfile::tempdir().unwrap();
    eval_fixture(dir.path());
    std::fs::write(dir.path().join("pred.tsv"), "x1\ta\nx2\tb\nx3\ta,b\n").unwrap();
    let v: Value = serde_json::from_str(&ok(
        dir.path(),
        &["eval", "--vocab", "vocab.tsv", "--predictions", "pred.tsv", "--truth", "truth.tsv"],
    ))
    .unwrap();
    assert_eq!(v["weighted_map"].as_f64(), Some(2.0 / 3.0));
    assert_eq!(v["counted_classes"], 2);
}

#[test]
fn eval_empty_predictions_score_zero() {
    let dir = tempfile::tempdir().unwrap();
    eval_fixture(dir.path());
    std::fs::write(dir.path().join("pred.tsv"), "").unwrap();
    let v: Value = serde_json::from_str(&ok(
        dir.path(),
        &["eval", "--vocab", "vocab.tsv", "--predictions", "pred.tsv", "--truth", "truth.tsv"],
    ))
    .unwrap();
    assert_eq!(v["weighted_map"].as_f64(), Some(0.0));
}

#[test]
fn eval_matches_oracle_with_frequency_weights() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = common::rng(21);
    let classes = 6;
    let names: Vec<String> = (0..classes).map(|c| format!("k{c}")).collect();
    let counts: Vec<u64> = (0..classes).map(|_| rng.random_range(1..30)).collect();
    let mut vocab = String::new();
    for c in 0..classes {
        vocab.push_str(&format!("{}\t{c}\t{}\n", names[c], counts[c]));
    }
    let (mut preds, mut truth) = (Vec::new(), Vec::new());
    let (mut pred_text, mut truth_text) = (String::new(), String::new());
    for i in 0..25 {
        let mut p: Vec<usize> = (0..classes).collect();
        for a in (1..classes).rev() {
            p.swap(a, rng.random_range(0..=a));
        }
        p.truncate(rng.random_range(0..=classes));
        let t: Vec<usize> = (0..classes).filter(|_| rng.random_bool(0.35)).collect();
        let join = |v: &[usize]| v.iter().map(|&c| names[c].clone()).collect::<Vec<_>>().join(",");
        pred_text.push_str(&format!("x{i}\t{}\n", join(&p)));
        truth_text.push_str(&format!("x{i}\t{}\n", join(&t)));
        preds.push(p);
        truth.push(t);
    }
    std::fs::write(dir.path().join("weights.tsv"), vocab).unwrap();
    std::fs::write(dir.path().join("pred.tsv"), pred_text).unwrap();
    std::fs::write(dir.path().join("truth.tsv"), truth_text).unwrap();
    let args = [
        "eval",
        "--weights",
        "weights.tsv",
        "--predictions",
        "pred.tsv",
        "--truth",
        "truth.tsv",
        "--cap-min",
        "0.5",
        "--cap-max",
        "2",
    ];
    let v: Value = serde_json::from_str(&ok(dir.path(), &args)).unwrap();

    let total: u64 = counts.iter().sum();
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| (classes as f64 * c as f64 / total as f64).clamp(0.5, 2.0))
        .collect();
    let (expected, _) = common::map_oracle(&preds, &truth, &weights);
    assert!((v["weighted_map"].as_f64().unwrap() - expected).abs() <= 1e-12);
}

#[test]
fn eval_reports_misaligned_labels() {
    let dir = tempfile::tempdir().unwrap();
    eval_fixture(dir.path());
    std::fs::write(dir.path().join("pred.tsv"), "x1\ta,zebra\nx2\tquokka\n").unwrap();
    let out = run(
        dir.path(),
        &["eval", "--vocab", "vocab.tsv", "--predictions", "pred.tsv", "--truth", "truth.tsv"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("quokka, zebra"), "{err}");
}

#[test]
fn zero_shot_reinsertion_reproduces_the_row() {
    let dir = tempfile::tempdir().unwrap();
    cluster_fixture(dir.path());
    ok(dir.path(), &["build", "--annotations", "clusters.tsv", "--embeddings", "emb.tsv"]);
    let report = ok(
        dir.path(),
        &[
            "zero-shot",
            "--embeddings",
            "emb.tsv",
            "--annotations",
            "clusters.tsv",
            "--label",
            "c1l2",
            "--as",
            "copy",
            "--output",
            "grown.tsv",
        ],
    );
    let v = &json_lines(&report)[0];
    assert_eq!(v["n"], 17);
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    let grown = read_embedding(std::fs::read(dir.path().join("grown.tsv")).unwrap().as_slice()).unwrap();
    let original = grown.index_of("c1l2").unwrap();
    let copy = grown.index_of("copy").unwrap();
    assert_eq!(copy, 16);
    let diff = grown
        .embedding
        .row(copy)
        .iter()
        .zip(grown.embedding.row(original))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn zero_shot_preconditions() {
    let dir = fixture();
    ok(dir.path(), &["build", "--annotations", "ann.tsv", "--embeddings", "emb.tsv"]);
    std::fs::write(dir.path().join("empty.tsv"), "").unwrap();
    let out = run(
        dir.path(),
        &[
            "zero-shot",
            "--embeddings",
            "emb.tsv",
            "--annotations",
            "empty.tsv",
            "--label",
            "owl",
            "--output",
            "o.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = run(
        dir.path(),
        &[
            "zero-shot",
            "--embeddings",
            "emb.tsv",
            "--annotations",
            "ann.tsv",
            "--label",
            "cat",
            "--output",
            "o.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o.tsv").exists());
}

#[test]
fn zero_step_demo_writes_single_rows() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok(dir.path(), &["train-demo", "--steps", "0", "--out-dir", "demo"]);
    for name in ["cosine.csv", "logistic.csv"] {
        let text = std::fs::read_to_string(dir.path().join("demo").join(name)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "step,loss,weighted_map");
        assert!(lines[1].starts_with("0,"));
    }
    let v = &json_lines(&summary)[0];
    assert_eq!(v["steps"], 0);
    let comparison = std::fs::read_to_string(dir.path().join("demo/comparison.csv")).unwrap();
    assert!(comparison.starts_with("step,cosine_loss,cosine_map,logistic_loss,logistic_map\n0,"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = fixture();
    std::fs::write(
        dir.path().join("run.toml"),
        "annotations = \"ann.tsv\"\nembeddings = \"emb.tsv\"\nk = 2\n",
    )
    .unwrap();
    let v = &json_lines(&ok(dir.path(), &["--config", "run.toml", "build"]))[0];
    assert_eq!(v["k"], 2);
    let v = &json_lines(&ok(
        dir.path(),
        &["build", "--config", "run.toml", "--k", "4", "--save-config", "saved.toml"],
    ))[0];
    assert_eq!(v["k"], 4);
    let saved = std::fs::read_to_string(dir.path().join("saved.toml")).unwrap();
    assert!(saved.contains("k = 4"));
    let v = &json_lines(&ok(dir.path(), &["build", "--config", "saved.toml"]))[0];
    assert_eq!(v["k"], 4);

    std::fs::write(dir.path().join("bad.toml"), "cap_min = 3.0\ncap_max = 1.0\n").unwrap();
    assert_eq!(
        run(dir.path(), &["stats", "--config", "bad.toml", "--annotations", "ann.tsv"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn stats_summarizes_the_corpus() {
    let dir = fixture();
    let v = &json_lines(&ok(dir.path(), &["stats", "--annotations", "ann.tsv", "--min-count", "2"]))[0];
    assert_eq!(v["records"], 6);
    assert_eq!(v["labels"], 4);
    assert_eq!(v["dropped_labels"], 1);
    assert_eq!(v["pmi_mode"], "positive");
}
