use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mme")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = mme(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = mme(&["build-kg", "--docs", "x", "--out", "y", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("Usage:"), "{err}");
    let json = err.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["error"], "usage");

    assert_eq!(mme(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(mme(&[]).status.code(), Some(1));
}

#[test]
fn data_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = p(dir.path(), "bad.jsonl");
    std::fs::write(&bad, "{\"api\": \"A\"}\nnot json\n").unwrap();
    let o = mme(&["build-kg", "--docs", &bad, "--out", &p(dir.path(), "g.tsv")]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(v["error"], "malformed_record");

    let cfg = p(dir.path(), "bad.conf");
    std::fs::write(&cfg, "encoder.kind = lstm\n").unwrap();
    let o = mme(&["--config", &cfg, "demo", "--out", &p(dir.path(), "d")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn version_lists_formats() {
    let out = ok(&["--version"]);
    for f in ["mme-graph 1", "mme-embedding 1", "mme-model 1", "MMETNSR1"] {
        assert!(out.contains(f), "{out}");
    }
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let conf = p(d, "run.conf");
    std::fs::write(
        &conf,
        "# tiny run\nseed = 3\ngen.families = 3\ngen.months = 4\ngen.traces_per_family_month = 3\n\
         gen.benign_per_month = 8\ntrain.epochs = 5\nhash.bins = 16\nseq.max_len = 60\n",
    )
    .unwrap();
    let with = |args: &[&str]| -> String {
        let mut all = vec!["--config", conf.as_str()];
        all.extend_from_slice(args);
        ok(&all)
    };

    let stats = with(&["build-kg", "--docs", &fixture("docs.jsonl"), "--templates", &fixture("templates.jsonl"), "--out", &p(d, "g.tsv")]);
    assert!(stats.contains("replaced_by"), "{stats}");
    with(&["train-kg-embed", "--graph", &p(d, "g.tsv"), "--dim", "8", "--epochs", "5", "--out", &p(d, "e.emb")]);
    with(&["gen", "--graph", &p(d, "g.tsv"), "--out", &p(d, "t.jsonl")]);
    let traces = std::fs::read_to_string(p(d, "t.jsonl")).unwrap();
    assert_eq!(traces.lines().count(), 3 * 4 * 3 + 8 * 4);
    assert!(std::fs::read_to_string(p(d, "t.jsonl.subs.tsv")).unwrap().starts_with("family\t"));
    let echo = std::fs::read_to_string(p(d, "t.jsonl.conf")).unwrap();
    assert!(echo.contains("seed = 3") && echo.contains("gen.families = 3"), "{echo}");

    with(&["embed", "--traces", &p(d, "t.jsonl"), "--emb", &p(d, "e.emb"), "--out", &p(d, "t.bin")]);
    for mode in ["regular", "mme"] {
        let model = p(d, &format!("{mode}.model"));
        with(&["train", "--mode", mode, "--encoder", "meanpool", "--traces", &p(d, "t.jsonl"), "--emb", &p(d, "e.emb"), "--period", "2017-01", "--out", &model]);
        let data = ["--model", model.as_str(), "--traces", &p(d, "t.jsonl"), "--emb", &p(d, "e.emb")];
        with(&[&["predict"], &data[..], &["--out", &p(d, "s.csv")]].concat());
        let scores = std::fs::read_to_string(p(d, "s.csv")).unwrap();
        assert!(scores.starts_with("id,y_true,f_x,y_hat\n"));
        assert_eq!(scores.lines().count(), 1 + 3 * 4 * 3 + 8 * 4);

        let metrics = with(&[&["evaluate"], &data[..], &["--split", "monthly"]].concat());
        assert!(metrics.starts_with("period,tp,fp,tn,fn,fpr,fnr,f1\n2017-02,"), "{metrics}");
        assert!(metrics.lines().last().unwrap().starts_with("average,"));

        with(&[&["maintain"], &data[..], &["--strategy", "budget", "--budget", "2", "--out", &p(d, "mb.csv")]].concat());
        let log: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p(d, "mb.csv.labels.json")).unwrap()).unwrap();
        assert_eq!(log.as_array().unwrap().len(), 2 * 3);
        with(&[&["maintain"], &data[..], &["--strategy", "threshold", "--T", "0.9", "--out", &p(d, "mt.csv")]].concat());

        let stab: serde_json::Value = serde_json::from_str(&with(&[&["stability"], &data[..], &["--families", "1,2"]].concat())).unwrap();
        let fams: Vec<&String> = stab["families"].as_object().unwrap().keys().collect();
        assert_eq!(fams, ["1", "2"]);
    }
}

#[test]
fn seeded_generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["build-kg", "--docs", &fixture("docs.jsonl"), "--templates", &fixture("templates.jsonl"), "--out", &p(d, "g.tsv")]);
    for (seed, name) in [("5", "a"), ("5", "b"), ("6", "c")] {
        ok(&["--seed", seed, "gen", "--graph", &p(d, "g.tsv"), "--families", "2", "--months", "3", "--out", &p(d, name)]);
    }
    let read = |n: &str| std::fs::read(p(d, n)).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}
