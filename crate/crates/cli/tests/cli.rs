use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use smoothcert_cli::records::parse_certify_records;
use tempfile::TempDir;

fn smoothcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothcert")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = smoothcert(args);
    assert!(
        out.status.success(),
        "smoothcert {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.path(name);
        fs::write(&path, text).unwrap();
        path
    }

    /// Ten points in two dimensions with label 0.
    fn points(&self) -> PathBuf {
        let mut text = String::from("x0,x1,label\n");
        for i in 0..10 {
            text.push_str(&format!("{},{},0\n", i as f64 * 0.3 - 1.5, 0.25));
        }
        self.write("points.csv", &text)
    }

    fn constant_model(&self) -> PathBuf {
        self.write("constant.txt", "smoothcert-model 1 constant 0 1\n0\n")
    }

    /// Label 1 where `x0 - 0.2 > 0`.
    fn linear_model(&self) -> PathBuf {
        self.write("linear.txt", "smoothcert-model 1 linear 2 2\n1\n0\n-0.2\n")
    }

    /// An MLP trained on overlapping classes, and held-out data from the
    /// same distribution.
    fn trained_mlp(&self) -> (PathBuf, PathBuf) {
        let (train, test, model) = (self.path("train.csv"), self.path("test.csv"), self.path("mlp.txt"));
        let blobs = ["generate", "two-gaussians", "--mean", "0.5", "--std", "1"];
        ok(&[&blobs[..], &["--count", "200", "--seed", "3", "--out", p(&train)]].concat());
        ok(&[&blobs[..], &["--count", "200", "--seed", "4", "--out", p(&test)]].concat());
        ok(&["train", "--data", p(&train), "--out", p(&model), "--epochs", "10", "--seed", "3"]);
        (test, model)
    }
}

#[test]
fn missing_model_is_an_input_error_naming_the_path() {
    let ws = Workspace::new();
    let missing = ws.path("nope.txt");
    let out = smoothcert(&["certify", "--model", p(&missing), "--data", p(&ws.points())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}

#[test]
fn malformed_inputs_exit_with_two() {
    let ws = Workspace::new();
    let bad_model = ws.write("bad.txt", "not a model\n");
    let out = smoothcert(&["certify", "--model", p(&bad_model), "--data", p(&ws.points())]);
    assert_eq!(out.status.code(), Some(2));

    let no_label = ws.write("nolabel.csv", "x0,x1\n1,2\n");
    let out = smoothcert(&["certify", "--model", p(&ws.constant_model()), "--data", p(&no_label)]);
    assert_eq!(out.status.code(), Some(2));

    let wide = ws.write("wide.csv", "x0,x1,x2,label\n1,2,3,0\n");
    let out = smoothcert(&["certify", "--model", p(&ws.linear_model()), "--data", p(&wide), "--n", "100"]);
    assert_eq!(out.status.code(), Some(2));

    let out = smoothcert(&["certify", "--model", p(&ws.constant_model()), "--data", p(&ws.points()), "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let out = smoothcert(&["certify", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_model_certifies_every_point_at_the_ceiling() {
    let ws = Workspace::new();
    let out = ws.path("records.jsonl");
    ok(&[
        "certify", "--model", p(&ws.constant_model()), "--data", p(&ws.points()), "--out", p(&out),
        "--sigma", "1", "--n", "100",
    ]);
    let records = parse_certify_records(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 10);
    for r in &records {
        assert_eq!(r.predicted_label, Some(0));
        let radius = r.radius.unwrap().finite().unwrap();
        assert!((radius - 1.500475).abs() < 1e-5, "{radius}");
    }
}

#[test]
fn records_have_the_frozen_schema_and_replay_exactly() {
    let ws = Workspace::new();
    let (a, b) = (ws.path("a.jsonl"), ws.path("b.jsonl"));
    for out in [&a, &b] {
        ok(&[
            "certify", "--model", p(&ws.linear_model()), "--data", p(&ws.points()), "--out", p(out),
            "--n", "2000", "--seed", "5", "--store-counts",
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let values = lines(&a);
    assert_eq!(
        values[0],
        serde_json::json!({"schema": "smoothcert-records", "version": 1, "kind": "certify"})
    );
    let keys: Vec<&str> = values[1].as_object().unwrap().keys().map(String::as_str).collect();
    let mut want = vec![
        "example_index", "true_label", "outcome", "predicted_label", "radius", "pa_lower", "counts",
        "sigma", "n0", "n", "alpha", "seed", "wall_time_ms",
    ];
    want.sort_unstable();
    let mut keys = keys;
    keys.sort_unstable();
    assert_eq!(keys, want);
    assert!(values[1..].iter().all(|v| v["wall_time_ms"].is_null()));
    assert!(values[1..].iter().all(|v| ["certified", "abstain"].contains(&v["outcome"].as_str().unwrap())));
}

#[test]
fn flags_override_the_config_file() {
    let ws = Workspace::new();
    let config = ws.write("run.toml", "sigma = 0.25\nn = 300\nseed = 8\n");
    let out = ws.path("r.jsonl");
    ok(&[
        "certify", "--model", p(&ws.constant_model()), "--data", p(&ws.points()), "--out", p(&out),
        "--config", p(&config), "--n", "400",
    ]);
    let first = &lines(&out)[1];
    assert_eq!(first["sigma"], 0.25);
    assert_eq!(first["n"], 400);
    assert_eq!(first["n0"], 100);
    assert_eq!(first["seed"], 8);
    assert_eq!(first["alpha"], 0.001);

    let bad = ws.write("bad.toml", "sigmaa = 1\n");
    let out = smoothcert(&["certify", "--model", p(&ws.constant_model()), "--data", p(&ws.points()), "--config", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_tables() {
    let ws = Workspace::new();
    let records = ws.path("r.jsonl");
    ok(&[
        "certify", "--model", p(&ws.constant_model()), "--data", p(&ws.points()), "--out", p(&records),
        "--sigma", "1", "--n", "100", "--store-counts",
    ]);
    let tsv = String::from_utf8(ok(&["report", p(&records), "--radii", "0,1,1.5,2"]).stdout).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], "radius");
    let accuracy: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(accuracy, [1.0, 1.0, 1.0, 0.0]);

    let json: Value =
        serde_json::from_slice(&ok(&["report", p(&records), "--radii", "0,1", "--format", "json"]).stdout).unwrap();
    let columns = json["columns"].as_array().unwrap();
    assert_eq!(columns.len(), rows[0].len());
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);

    let projected = String::from_utf8(ok(&["report", p(&records), "--radii", "3", "--project-n", "100000"]).stdout).unwrap();
    let last: Vec<&str> = projected.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(last[1].parse::<f64>().unwrap(), 1.0);

    let plain = ws.path("plain.jsonl");
    ok(&["certify", "--model", p(&ws.constant_model()), "--data", p(&ws.points()), "--out", p(&plain), "--n", "100"]);
    let out = smoothcert(&["report", p(&plain), "--project-n", "1000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn predict_abstains_less_with_more_samples() {
    let ws = Workspace::new();
    let (data, model) = ws.trained_mlp();
    let rate = |n: &str| {
        let out = ws.path(&format!("predict-{n}.jsonl"));
        ok(&[
            "predict", "--model", p(&model), "--data", p(&data), "--out", p(&out), "--sigma", "2", "--n", n,
            "--alpha", "0.01",
        ]);
        let values = lines(&out);
        assert_eq!(values[0]["kind"], "predict");
        values[1..].iter().filter(|v| v["predicted_label"].is_null()).count()
    };
    let abstentions: Vec<usize> = ["100", "1000", "10000"].iter().map(|n| rate(n)).collect();
    assert!(abstentions.windows(2).all(|w| w[1] < w[0]), "{abstentions:?}");
}

#[test]
fn linear_oracle_at_defaults_is_sound() {
    let ws = Workspace::new();
    let data = ws.path("blobs.csv");
    ok(&["generate", "two-gaussians", "--count", "200", "--seed", "6", "--out", p(&data)]);
    let text = fs::read_to_string(&data).unwrap();
    let x0: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    for seed in ["1", "2", "3"] {
        let out = ws.path(&format!("r-{seed}.jsonl"));
        ok(&["certify", "--model", p(&ws.linear_model()), "--data", p(&data), "--out", p(&out), "--seed", seed]);
        let records = parse_certify_records(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(records.len(), 200);
        let abstained = records.iter().filter(|r| r.predicted_label.is_none()).count();
        assert!(abstained as f64 <= 0.05 * 200.0, "{abstained} abstentions");
        for (r, &x) in records.iter().zip(&x0) {
            if let Some(radius) = r.radius {
                assert_eq!(r.predicted_label, Some(usize::from(x > 0.2)));
                assert!(radius.to_scalar() <= (x - 0.2).abs(), "{radius:?} at {x}");
            }
        }
    }
}

#[test]
fn attack_and_bounds_output() {
    let ws = Workspace::new();
    let out = ws.path("attack.jsonl");
    ok(&["attack", "--model", p(&ws.linear_model()), "--data", p(&ws.points()), "--out", p(&out), "--radius", "0.1"]);
    let values = lines(&out);
    assert_eq!(values[0]["kind"], "attack");
    assert_eq!(values.len(), 11);
    for v in &values[1..] {
        assert!(v["delta_norm"].as_f64().unwrap() <= 0.1 + 1e-12);
        assert_eq!(v["delta"].as_array().unwrap().len(), 2);
    }

    let tsv = String::from_utf8(ok(&["bounds", "--pa", "0.9", "--pb", "0.1", "--samples", "100000"]).stdout).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows[0], ["bound", "radius"]);
    let names: Vec<&str> = rows[1..].iter().map(|r| r[0]).collect();
    assert_eq!(names, ["cohen", "lecuyer", "li", "ceiling"]);
    let cohen: f64 = rows[1][1].parse().unwrap();
    assert!((cohen - 1.2815516).abs() < 1e-6);
    let ceiling: f64 = rows[4][1].parse().unwrap();
    assert!((ceiling - 3.811457).abs() < 1e-5);

    let out = smoothcert(&["bounds", "--pa", "0.4", "--pb", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}
