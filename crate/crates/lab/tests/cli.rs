use lrvoter_lab::output::read_csv;
use std::path::Path;
use std::process::{Command, Output};

fn lrvoter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrvoter")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn analytic_prints_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrvoter(&["analytic", "--alpha", "0.5", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("c_alpha,")).unwrap();
    let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
    assert!((v - 1.2533).abs() < 1e-4, "{line}");
    let (header, rows) = read_csv(&dir.path().join("analytic.csv")).unwrap();
    assert_eq!(header, ["quantity", "argument", "value"]);
    assert!(rows.iter().any(|r| r[0] == "sigma_n" && r[1] == "n=1024"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "analytic");
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f["name"] == "analytic.csv"));
}

#[test]
fn invalid_alpha_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrvoter(&["simulate-field", "--alpha", "1.2", "--seed", "1", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("(0,1)"), "{err}");
}

#[test]
fn usage_errors_and_missing_seed() {
    assert_eq!(lrvoter(&["hurst", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(lrvoter(&["no-such-command"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let o = lrvoter(&["coalesce-prob", "--reps", "10", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("seed"));
    assert_eq!(lrvoter(&["gauss-test", "--seed", "1", "--reps", "zero", "--out", &out_arg(dir.path())]).status.code(), Some(1));
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = lrvoter(&[
            "simulate-field",
            "--seed",
            seed,
            "--n",
            "300",
            "--reps",
            "12",
            "--slice-times",
            "0,0.5",
            "--threads",
            threads,
            "--out",
            &out_arg(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("field_n300.csv")).unwrap()
    };
    let a = run("a", "1", "5");
    assert_eq!(a, run("b", "1", "5"));
    assert_eq!(a, run("c", "2", "5"));
    assert_ne!(a, run("d", "1", "6"));
    let (header, rows) = read_csv(&dir.path().join("a/field_n300.csv")).unwrap();
    assert_eq!(&header[..3], ["replicate", "slice", "t"]);
    assert_eq!(header.len(), 3 + 17);
    assert_eq!(rows.len(), 24);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/field_n300.json")).unwrap()).unwrap();
    assert_eq!(sidecar["residual_clusters"].as_array().unwrap().len(), 12);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# coalescence smoke run\nversion = 1\nalpha = 0.6\nk = 1, 3\nreps = 500\nt_max = 2000\nseed = 11\n").unwrap();
    let out = dir.path().join("out");
    let o = lrvoter(&["coalesce-prob", "--config", cfg.to_str().unwrap(), "--reps", "300", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("coalescence.csv")).unwrap();
    assert_eq!(&header[..5], ["k", "mc_estimate", "stderr", "live_fraction", "fourier_value"]);
    assert_eq!(rows.len(), 2);
    let copy = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(copy.contains("alpha = 0.6") && copy.contains("reps = 300") && copy.contains("t_max = 2000"));
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "version = 7\n").unwrap();
    let o = lrvoter(&["coalesce-prob", "--config", bad.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn enforce_turns_failures_into_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let args = |enforce: bool| {
        let mut v = vec![
            "gauss-test".to_string(),
            "--seed".into(),
            "3".into(),
            "--n".into(),
            "64".into(),
            "--reps".into(),
            "50".into(),
            "--set".into(),
            "threshold.max_abs_skewness=0".into(),
            "--out".into(),
            out_arg(dir.path()),
        ];
        if enforce {
            v.push("--enforce".into());
        }
        v
    };
    let run = |enforce| Command::new(env!("CARGO_BIN_EXE_lrvoter")).args(args(enforce)).output().unwrap();
    let report = run(false);
    assert_eq!(report.status.code(), Some(0));
    assert!(String::from_utf8(report.stdout).unwrap().contains("FAIL skewness"));
    assert_eq!(run(true).status.code(), Some(2));
    let verdicts: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verdicts.json")).unwrap()).unwrap();
    let v = verdicts["verdicts"].as_array().unwrap();
    assert!(v.iter().all(|x| x.get("estimate").is_some() && x.get("stderr").is_some() && x.get("threshold").is_some()));
}

#[test]
fn all_singleton_cutoff_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrvoter(&[
        "component-scaling",
        "--seed",
        "1",
        "--n",
        "1,2",
        "--reps",
        "1",
        "--t-max",
        "1",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stderr).unwrap().contains("singleton"));
}
