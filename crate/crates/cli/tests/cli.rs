use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use arsearch_cli::plot::{cmd_plot_data, load_traces, PlotKind, PlotOptions};
use arsearch_cli::run::RunHeader;
use arsearch_cli::ExperimentConfig;

fn arsearch(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arsearch"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    std::fs::write(dir.join(name), json).unwrap();
    name.to_string()
}

const MINIMAL: &str = r#"{"problem": {"name": "sphere", "n": 1}, "algorithm": {"variant": "HAS"}, "run": {"runs": 1}}"#;

#[test]
fn minimal_run_writes_one_contiguous_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", MINIMAL);
    let o = arsearch(&["run", "--config", &cfg, "--out", "out"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 runs, 1 reached"));
    let traces = load_traces(&tmp.path().join("out")).unwrap();
    assert_eq!(traces.len(), 1);
    for (i, r) in traces[0].rows.iter().enumerate() {
        assert_eq!(r.k, i);
    }
    assert!(tmp.path().join("out/run-00000.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = r#"{"problem": {"name": "sphere", "n": 2, "sigma": 0.05}, "algorithm": {"variant": "QASE", "gamma": 0.5}, "run": {"runs": 4, "seed": 9}}"#;
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let cfg = write_config(d.path(), "c.json", config);
        assert!(
            arsearch(&["run", "--config", &cfg, "--out", "out"], d.path())
                .status
                .success()
        );
    }
    for i in 0..4 {
        for ext in ["csv", "json"] {
            let name = format!("out/run-{i:05}.{ext}");
            let a = std::fs::read(dirs[0].path().join(&name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(&name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }
    let d = dirs[0].path();
    assert!(arsearch(
        &["run", "--config", "c.json", "--out", "other", "--seed", "10"],
        d
    )
    .status
    .success());
    let a = std::fs::read(d.join("out/run-00000.csv")).unwrap();
    let c = std::fs::read(d.join("other/run-00000.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn header_round_trips_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", MINIMAL);
    assert!(
        arsearch(&["run", "--config", &cfg, "--out", "out"], tmp.path())
            .status
            .success()
    );
    let text = std::fs::read_to_string(tmp.path().join("out/run-00000.json")).unwrap();
    let header: RunHeader = serde_json::from_str(&text).unwrap();
    let mut original = ExperimentConfig::from_json(MINIMAL).unwrap();
    original.output.directory = "out".into();
    assert_eq!(header.config, original);
    assert_eq!(header.config_sha256, original.sha256());
    let reparsed =
        ExperimentConfig::from_json(&serde_json::to_string(&header.config).unwrap()).unwrap();
    assert_eq!(reparsed, original);
}

#[test]
fn invalid_config_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &MINIMAL.replace("\"HAS\"", "\"HSA\""));
    let o = arsearch(&["run", "--config", &cfg], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("algorithm.variant"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());

    let cfg = write_config(
        tmp.path(),
        "d.json",
        &MINIMAL.replace("\"runs\": 1", "\"runs\": 0"),
    );
    let o = arsearch(&["run", "--config", &cfg], tmp.path());
    assert!(stderr(&o).contains("run.runs"), "{}", stderr(&o));

    let cfg = write_config(
        tmp.path(),
        "e.json",
        &MINIMAL.replace("\"HAS\"", "\"QASE\", \"m\": 2"),
    );
    let o = arsearch(&["bounds", "--config", &cfg], tmp.path());
    assert!(stderr(&o).contains("algorithm.m"), "{}", stderr(&o));
}

#[test]
fn bounds_report_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"problem": {"name": "sphere", "n": 2, "radius": 1, "sigma": 0.05}, "algorithm": {"variant": "HASE", "gamma": 1, "alpha": 0.05, "q": 0.5, "epsilon": 0.1}}"#,
    );
    let o = arsearch(&["bounds", "--config", &cfg, "--integral"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lip = v["lipschitz_iteration_bound"].as_f64().unwrap();
    assert!((lip - (1.0 + 2.0 / 0.475 * 20f64.ln())).abs() < 1e-12);
    assert!((lip - 13.6136).abs() < 1e-4);
    assert_eq!(v["qase_iteration_bound"], v["iteration_bound"]);
    assert_eq!(v["qase_evaluation_bound"], v["evaluation_bound"]);
    assert!(
        (v["has_integral_bound"].as_f64().unwrap() - v["iteration_bound"].as_f64().unwrap()).abs()
            < 1e-6
    );

    let cfg = write_config(
        tmp.path(),
        "z.json",
        &std::fs::read_to_string(tmp.path().join("c.json"))
            .unwrap()
            .replace("0.05}", "0}"),
    );
    let o = arsearch(&["bounds", "--config", &cfg], tmp.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["R_theorem1"], 1);
    assert_eq!(v["evaluation_bound"], 0.0);
    assert_eq!(v["cubic_evaluation_bound"], 0.0);
    assert!(v.get("has_integral_bound").unwrap().is_null());
}

#[test]
fn verify_lemma2_is_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = arsearch(&["verify", "lemma2", "--out", "rep"], tmp.path());
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("PASS lemma2"));
    let v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("rep/verify-report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["checks"][0]["report"]["points"], 6336);
}

#[test]
fn verify_theorem1_and_negative_control() {
    let tmp = tempfile::tempdir().unwrap();
    let o = arsearch(&["verify", "theorem1", "--scale", "0.1"], tmp.path());
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(
        stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(),
        9
    );
    let o = arsearch(
        &[
            "verify",
            "theorem1",
            "--scale",
            "0.1",
            "--reduce-replications",
            "100000",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn verify_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = arsearch(
            &[
                "verify",
                "dominance-hase",
                "--scale",
                "0.05",
                "--seed",
                "3",
                "--out",
                out,
            ],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", stdout(&o));
    }
    let a = std::fs::read(tmp.path().join("a/verify-report.json")).unwrap();
    let b = std::fs::read(tmp.path().join("b/verify-report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unknown_selector_and_kind_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(!arsearch(&["verify", "everything"], tmp.path())
        .status
        .success());
    let o = arsearch(&["plot-data", "histogram", "--traces", "."], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown plot kind"), "{}", stderr(&o));
}

#[test]
fn trace_panel_has_every_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"problem": {"name": "sphere", "n": 2, "sigma": 0.05}, "algorithm": {"variant": "QASE", "gamma": 0.5, "replications": {"mode": "constant", "r": 4}, "max_iterations": 3, "stop": "never"}}"#,
    );
    assert!(
        arsearch(&["run", "--config", &cfg, "--out", "t"], tmp.path())
            .status
            .success()
    );
    let opts = PlotOptions {
        traces: Some(tmp.path().join("t")),
        ..Default::default()
    };
    let csv = cmd_plot_data(PlotKind::TracePanel, &opts).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("series,x,y"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    for series in ["y_true", "y_est", "y_high", "best_true", "best_high"] {
        let xs: Vec<&str> = rows
            .iter()
            .filter(|r| r[0] == series)
            .map(|r| r[1])
            .collect();
        assert_eq!(xs, ["0", "1", "2"], "{series}");
    }
}

#[test]
fn cdf_panel_covers_both_populations() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(
        tmp.path(),
        "a.json",
        r#"{"problem": {"name": "sphere", "n": 2, "sigma": 0.05}, "algorithm": {"variant": "HASE"}, "run": {"runs": 20, "k_max": 5}}"#,
    );
    let b = write_config(
        tmp.path(),
        "b.json",
        r#"{"problem": {"name": "sphere", "n": 2}, "algorithm": {"variant": "HAS1"}, "run": {"runs": 20, "k_max": 5}}"#,
    );
    assert!(arsearch(&["run", "--config", &a, "--out", "a"], tmp.path())
        .status
        .success());
    assert!(arsearch(&["run", "--config", &b, "--out", "b"], tmp.path())
        .status
        .success());
    let o = arsearch(
        &[
            "plot-data",
            "cdf-panel",
            "--traces",
            "a",
            "--traces-b",
            "b",
            "--points",
            "4",
            "--out",
            "cdf.csv",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("cdf.csv")).unwrap();
    for label in ["HASE", "HAS1"] {
        for k in 0..=5 {
            let n = csv
                .lines()
                .filter(|l| l.starts_with(&format!("{label}:k={k},")))
                .count();
            assert_eq!(n, 4);
        }
    }
    for line in csv.lines().skip(1) {
        let y: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&y));
    }
}

#[test]
fn ratio_curve_matches_the_sphere() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"problem": {"name": "sphere", "n": 2}, "algorithm": {"variant": "HAS"}}"#,
    );
    let o = arsearch(
        &[
            "plot-data",
            "ratio-curve",
            "--config",
            &cfg,
            "--points",
            "11",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<(f64, f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].trim_start_matches("y=").parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 33);
    for (y, delta, ratio) in rows {
        assert!((ratio - (y / (y + delta)).powi(2)).abs() < 1e-12);
    }
}

#[test]
fn bound_vs_empirical_requires_reached_targets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"problem": {"name": "sphere", "n": 2}, "algorithm": {"variant": "HAS1"}, "run": {"runs": 50}}"#,
    );
    assert!(
        arsearch(&["run", "--config", &cfg, "--out", "r"], tmp.path())
            .status
            .success()
    );
    let o = arsearch(
        &["plot-data", "bound-vs-empirical", "--traces", "r"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(
        text.lines().filter(|l| l.starts_with("N_I-mean,")).count(),
        50
    );
    assert!(text.lines().any(|l| l.starts_with("N_I-bound,50,10.695")));

    let cut = write_config(
        tmp.path(),
        "d.json",
        r#"{"problem": {"name": "sphere", "n": 2}, "algorithm": {"variant": "HAS1", "max_iterations": 1}, "run": {"runs": 50}}"#,
    );
    assert!(
        arsearch(&["run", "--config", &cut, "--out", "s"], tmp.path())
            .status
            .success()
    );
    let o = arsearch(
        &["plot-data", "bound-vs-empirical", "--traces", "s"],
        tmp.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("never reached"), "{}", stderr(&o));
}

#[test]
fn box_problem_runs_with_rejection_sampling() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"problem": {"name": "box-quadratic", "n": 2, "sigma": 0.01}, "algorithm": {"variant": "HASE", "epsilon": 0.05, "replications": {"mode": "constant", "r": 16}}, "run": {"runs": 5}}"#,
    );
    let o = arsearch(&["run", "--config", &cfg, "--out", "b"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("5 runs, 5 reached"), "{}", stdout(&o));
    let o = arsearch(&["bounds", "--config", &cfg], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
}
