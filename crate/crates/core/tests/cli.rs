use std::path::Path;
use std::process::{Command, Output};

use hypvmc::cli::{self, RunStatus, SweepSummary};
use hypvmc::metrics::{read_metrics, ResultFile};

fn hypvmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypvmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn smoke(dir: &Path, variant: &str, epochs: &str) -> Output {
    hypvmc(&[
        "train",
        "--preset",
        "smoke",
        "--variant",
        variant,
        "--epochs",
        epochs,
        "--seed",
        "3",
        "--quiet",
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn ed_prints_energy_and_guards_size() {
    let o = hypvmc(&["ed", "--n", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "-0.7500000000");

    let o = hypvmc(&["ed", "--n", "10", "--j2", "0.5", "--method", "lanczos"]);
    let e: f64 = stdout(&o).trim().parse().unwrap();
    assert!((e + 3.75).abs() < 1e-8);

    let o = hypvmc(&["ed", "--n", "25"]);
    assert_eq!(o.status.code(), Some(3));
    let o = hypvmc(&["ed", "--n", "14", "--method", "dense"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ed_dumps_normalized_vector() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.json");
    let o = hypvmc(&["ed", "--n", "6", "--dump-vector", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let amps = v["ground_vector"].as_array().unwrap();
    assert_eq!(amps.len(), 64);
    let norm: f64 = amps.iter().map(|a| a.as_f64().unwrap().powi(2)).sum();
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(hypvmc(&["train"]).status.code(), Some(1));
    assert_eq!(hypvmc(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(hypvmc(&["train", "--preset", "huge"]).status.code(), Some(1));
    assert_eq!(hypvmc(&["ed", "--n", "4", "--method", "qr"]).status.code(), Some(1));
    assert_eq!(hypvmc(&["evaluate", "--checkpoint", "/nonexistent"]).status.code(), Some(1));
    assert_eq!(hypvmc(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"model": {"variant": "poincare_rnn", "hidden": 4, "depth": 2}, "system": {"n": 4}}"#).unwrap();
    let o = hypvmc(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("depth"));
}

#[test]
fn train_writes_complete_run_and_evaluate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(smoke(&run, "lorentz_gru", "8").status.success());
    for f in [
        cli::CONFIG_FILE,
        cli::METRICS_FILE,
        cli::TIMING_FILE,
        cli::RESULT_FILE,
        cli::RUN_FILE,
    ] {
        assert!(run.join(f).is_file(), "{f}");
    }
    assert_eq!(read_metrics(&run.join(cli::METRICS_FILE)).unwrap().len(), 8);

    // the run directory alone is enough to evaluate again
    let args = ["evaluate", "--checkpoint", run.to_str().unwrap(), "--samples", "500", "--seed", "9"];
    let a = hypvmc(&args);
    let b = hypvmc(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let results = ResultFile::load(&run.join(cli::RESULT_FILE)).unwrap();
    assert_eq!(results.evaluations.len(), 3);
    assert_eq!(results.evaluations[1], results.evaluations[2]);
    assert!(results.evaluations[1].reference_energy.is_some());

    // refuses to overwrite
    assert_eq!(smoke(&run, "lorentz_gru", "8").status.code(), Some(1));
}

#[test]
fn sweep_records_failures_and_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"model": {"variant": "poincare_rnn", "hidden": 4},
            "system": {"n": 4},
            "train": {"epochs": 5, "eval_samples": 200}}"#,
    )
    .unwrap();
    let out = dir.path().join("sweep");
    let o = hypvmc(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "r_max",
        "--values",
        "0.99,1.5,0.618",
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(o.status.success());
    let s: SweepSummary =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s.ranking.len(), 3);
    let means: Vec<f64> = s.ranking.iter().filter_map(|e| e.mean).collect();
    assert_eq!(means.len(), 2);
    assert!(means[0] <= means[1]);
    let failed = &s.ranking[2];
    assert_eq!((failed.value, failed.status), (1.5, RunStatus::Failed));
    assert!(std::fs::read_to_string(out.join("summary.md")).unwrap().contains("| 1 |"));

    let o = hypvmc(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "hidden", "--values", "3"]);
    assert_eq!(o.status.code(), Some(1));

    // plots over the sweep directory expand to its runs
    let svg = dir.path().join("rank.svg");
    let o = hypvmc(&["plot", "--runs", out.to_str().unwrap(), "--out", svg.to_str().unwrap(), "--style", "ranking"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("class=\"rank\"").count(), 2);
}

#[test]
fn plots_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(smoke(&a, "euclidean_rnn", "12").status.success());
    assert!(smoke(&b, "poincare_rnn", "12").status.success());
    for style in ["dots", "curves", "ranking"] {
        let render = |name: &str| {
            let out = dir.path().join(name);
            let o = hypvmc(&[
                "plot", "--runs", a.to_str().unwrap(), b.to_str().unwrap(),
                "--out", out.to_str().unwrap(), "--style", style,
            ]);
            assert!(o.status.success());
            std::fs::read(out).unwrap()
        };
        let first = render(&format!("{style}1.svg"));
        assert_eq!(first, render(&format!("{style}2.svg")), "{style}");
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("<svg") && text.ends_with("</svg>\n"));
        if style == "dots" {
            assert_eq!(text.matches("class=\"marker\"").count(), 2);
        }
        if style == "curves" {
            assert!(text.contains("main best"));
        }
    }
}
