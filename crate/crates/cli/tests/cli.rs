use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn serkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serkit")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = serkit(args);
    assert!(
        out.status.success(),
        "serkit {} failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn utterance_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (train, test) = (d.join("train.csv"), d.join("test.csv"));
    ok(&["synth", "--preset", "imbalanced10to1", "--seed", "1", "--out", p(&train)]);
    ok(&["synth", "--preset", "imbalanced10to1", "--seed", "2", "--out", p(&test)]);

    let (sel, idx, sel_test) = (d.join("sel.csv"), d.join("idx.json"), d.join("sel_test.csv"));
    ok(&["select", "--k", "4", "--in", p(&train), "--out", p(&sel), "--indices", p(&idx)]);
    ok(&["select", "--use", p(&idx), "--in", p(&test), "--out", p(&sel_test)]);
    let header = fs::read_to_string(&sel).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 6);
    assert_eq!(
        header,
        fs::read_to_string(&sel_test).unwrap().lines().next().unwrap()
    );

    let (red, mat, trace, red_test) = (d.join("red.csv"), d.join("p.json"), d.join("trace.csv"), d.join("red_test.csv"));
    ok(&[
        "reduce", "--dout", "2", "--iterations", "15", "--particles", "8", "--in", p(&sel), "--out", p(&red),
        "--matrix", p(&mat), "--trace", p(&trace),
    ]);
    ok(&["reduce", "--apply", p(&mat), "--in", p(&sel_test), "--out", p(&red_test)]);
    assert!(fs::read_to_string(&trace).unwrap().starts_with("iteration,best_cost,alpha,mt"));
    assert!(fs::read_to_string(&red_test).unwrap().starts_with("p0,p1,speaker,label"));

    let cfg = d.join("elm.toml");
    fs::write(&cfg, "hidden = 60\nc = 1.0\n").unwrap();
    let (model, preds) = (d.join("model.json"), d.join("preds.csv"));
    ok(&["train", "--kind", "elm", "--scheme", "w1", "--cfg", p(&cfg), "--in", p(&red), "--model", p(&model)]);
    ok(&["predict", "--model", p(&model), "--in", p(&red_test), "--out", p(&preds)]);
    let preds_text = fs::read_to_string(&preds).unwrap();
    assert_eq!(preds_text.lines().count(), 1101);
    assert!(preds_text.starts_with("index,speaker,truth,pred"));

    let report: serde_json::Value =
        serde_json::from_str(&ok(&["metrics", "--truth", p(&test), "--pred", p(&preds)])).unwrap();
    assert_eq!(report["n"], 1100);
    assert!(report["war"].as_f64().unwrap() > 0.8, "{report}");
    assert!((report["ir"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn helm_model_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("moons.csv");
    ok(&["synth", "--preset", "two-moons", "--out", p(&data)]);
    let cfg = d.join("helm.toml");
    fs::write(&cfg, "sparse_sizes = [20]\nproj_size = 60\nfista_iters = 20\n").unwrap();
    let model = d.join("m.json");
    ok(&["train", "--kind", "helm", "--scheme", "none", "--cfg", p(&cfg), "--in", p(&data), "--model", p(&model)]);
    let text = fs::read_to_string(&model).unwrap();
    assert!(text.contains("\"kind\": \"helm\""));
    let preds = d.join("preds.csv");
    ok(&["predict", "--model", p(&model), "--in", p(&data), "--out", p(&preds)]);
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["metrics", "--truth", p(&preds), "--pred", p(&preds)])).unwrap();
    assert!(report["war"].as_f64().unwrap() > 0.9, "{report}");
}

#[test]
fn loso_writes_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(
        &cfg,
        "seed = 1\n[data.synth]\ncounts = [40, 20]\ndims = 4\nspeakers = 3\n[classifier]\nkind = \"elm\"\nelm = { hidden = 30 }\n",
    )
    .unwrap();
    let stdout = ok(&["loso", "--config", p(&cfg)]);
    assert!(stdout.contains("3 folds"), "{stdout}");
    let run = dir.path().join("runs").join("small");
    for f in ["report.json", "seeds.json", "config.toml", "predictions/fold_00.csv", "predictions/fold_02.csv"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["per_fold"].as_array().unwrap().len(), 3);
    for key in ["war", "uar", "gmean", "ir", "confusion", "per_pair_errors"] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
}

#[test]
fn errors_are_reported_with_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = serkit(&["synth", "--preset", "nonsense", "--out", p(&d.join("x.csv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let out = serkit(&["train", "--scheme", "w9", "--in", p(&d.join("missing.csv")), "--model", p(&d.join("m.json"))]);
    assert!(!out.status.success());

    let bad = d.join("bad.toml");
    fs::write(&bad, "seed = 1\n[data]\n").unwrap();
    let out = serkit(&["loso", "--config", p(&bad)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exactly one"));

    let out = serkit(&["select", "--in", p(&bad), "--out", p(&d.join("o.csv"))]);
    assert!(!out.status.success());
}
