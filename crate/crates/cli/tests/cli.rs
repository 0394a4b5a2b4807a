use std::path::Path;
use std::process::{Command, Output};

use slid_core::io::{read_truth, TRUTH_FILE};

fn slid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slid")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The single machine-readable error line; log lines may precede it.
fn error_line(o: &Output) -> String {
    let err = stderr(o);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("ERROR ")).collect();
    assert_eq!(lines.len(), 1, "{err}");
    lines[0].to_string()
}

fn generate(dir: &Path, config: &str) {
    let cfg = dir.join("corpus.conf");
    std::fs::write(&cfg, config).unwrap();
    let o = slid(&["generate", "--config", p(&cfg), "--out", p(&dir.join("corpus"))]);
    assert!(o.status.success(), "{}", stderr(&o));
}

const SMALL: &str = "seed = 5\nlegitimate = 6\nrugpull = 4\nhoneypot = 3\nslid = 5\nslid_drain_count = 40\ninvestor_arrival = 2\n";

fn detect_args<'a>(corpus: &'a Path, out: &'a Path, profiles: &'a Path) -> Vec<&'a str> {
    vec!["detect", "--pools", p(corpus), "--orders", p(out), "--profiles", p(profiles)]
}

#[test]
fn detect_matches_generator_truth() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), SMALL);
    let c = dir.path().join("corpus");
    let out = dir.path().join("verdicts.csv");
    let (pools, orders, profiles) = (c.join("pools.jsonl"), c.join("orders.jsonl"), c.join("profiles.jsonl"));
    let mut args = detect_args(&pools, &orders, &profiles);
    args.extend(["--out", p(&out)]);
    let o = slid(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    let truth = read_truth(&c.join(TRUTH_FILE)).unwrap();
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["pool_address", "label", "honeypot_pass", "profit_pass", "owner_activity_pass", "realized_usd", "unrealized_1m_usd", "max_impact", "c"]
    );
    let mut seen = 0;
    let mut last = String::new();
    for rec in r.records() {
        let rec = rec.unwrap();
        assert!(rec[0] > *last);
        last = rec[0].to_string();
        assert_eq!(rec[1], truth[&rec[0]].true_label.to_string());
        seen += 1;
    }
    assert_eq!(seen, 18);
}

#[test]
fn missing_profiles_file_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), SMALL);
    let c = dir.path().join("corpus");
    let out = dir.path().join("verdicts.csv");
    let (pools, orders, absent) = (c.join("pools.jsonl"), c.join("orders.jsonl"), c.join("nope.jsonl"));
    let mut args = detect_args(&pools, &orders, &absent);
    args.extend(["--out", p(&out)]);
    let o = slid(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("Unknown"));
}

#[test]
fn error_codes_are_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, SMALL);
    let c = d.join("corpus");
    let out = d.join("v.csv");

    let bad = d.join("bad.jsonl");
    std::fs::write(&bad, "{\"block\": 1}\n").unwrap();
    let o = slid(&["detect", "--pools", p(&c.join("pools.jsonl")), "--orders", p(&bad), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = error_line(&o);
    assert!(err.starts_with("ERROR SCHEMA: ") && err.contains("bad.jsonl:1"), "{err}");

    let empty = d.join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let o = slid(&["detect", "--pools", p(&empty), "--orders", p(&empty), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(error_line(&o).starts_with("ERROR EMPTY_DATASET: "));

    let conf = d.join("h.conf");
    std::fs::write(&conf, "t_impact = 2\n").unwrap();
    let o = slid(&["detect", "--pools", p(&c.join("pools.jsonl")), "--orders", p(&c.join("orders.jsonl")), "--config", p(&conf), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(error_line(&o).starts_with("ERROR CONFIG: "));

    let o = slid(&["detect", "--bogus"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(error_line(&o).starts_with("ERROR USAGE: "));
}

#[test]
fn features_train_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, SMALL);
    let c = d.join("corpus");
    let features = d.join("f.csv");
    let o = slid(&[
        "features", "--pools", p(&c.join("pools.jsonl")), "--orders", p(&c.join("orders.jsonl")),
        "--profiles", p(&c.join("profiles.jsonl")), "--window", "57", "--out", p(&features),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&features).unwrap();
    assert_eq!(text.lines().count(), 19);
    assert!(text.starts_with("pool_address,window_days,label,Owner_dep,"));

    let model = d.join("model.bin");
    let o = slid(&["train", "--features", p(&features), "--model", "forest", "--seed", "3", "--grid", "single", "--out", p(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scores = d.join("scores.csv");
    let o = slid(&["predict", "--model", p(&model), "--features", p(&features), "--out", p(&scores)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&scores).unwrap().lines().count(), 19);
}

#[test]
fn sweep_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, "seed = 2\nlegitimate = 20\nrugpull = 5\nhoneypot = 5\nslid = 10\nslid_drain_count = 40\ninvestor_arrival = 2\n");
    let c = d.join("corpus");
    let run = |name: &str| {
        let out = d.join(name);
        let o = slid(&["sweep", "--corpus", p(&c), "--d-list", "120,57", "--seed", "4", "--grid", "single", "--out", p(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 7);
}

#[test]
fn reports_and_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, SMALL);
    let c = d.join("corpus");
    let (pools, orders, profiles) = (c.join("pools.jsonl"), c.join("orders.jsonl"), c.join("profiles.jsonl"));
    let base = ["--pools", p(&pools), "--orders", p(&orders)];
    for kind in ["age", "profit", "trend"] {
        let out = d.join(format!("{kind}.csv"));
        let mut args = vec!["report", "--kind", kind, "--only", "SLID"];
        args.extend(base);
        args.extend(["--out", p(&out)]);
        let o = slid(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(std::fs::read_to_string(&out).unwrap().lines().count() > 1);
    }

    let again = d.join("again");
    let mut args = vec!["ingest"];
    args.extend(base);
    args.extend(["--profiles", p(&profiles), "--out", p(&again)]);
    let o = slid(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["pools.jsonl", "orders.jsonl", "profiles.jsonl"] {
        assert!(std::fs::read(c.join(f)).unwrap() == std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}
