use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcs"))
        .args(args)
        .env_remove("BCS_SEED")
        .output()
        .expect("run bcs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn write_sample(dir: &Path, args: &[&str]) -> String {
    let path = dir.join("sample.csv");
    let path_s = path.to_str().unwrap().to_string();
    let mut all = vec!["sample"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--output", &path_s]);
    let out = bcs(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path_s
}

#[test]
fn fit_reports_four_parameters_with_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(
        dir.path(),
        &["--family", "t", "--tau", "5", "--mu", "2", "--sigma", "0.3", "--lambda", "0.5", "-n", "400", "--seed", "4"],
    );
    let out = bcs(&["fit", "--input", &path, "--column", "y", "--family", "t", "--tau", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["schema_version"], 1);
    let fit = &doc["fit"];
    assert_eq!(fit["free_parameters"], 4);
    assert_eq!(fit["converged"], true);
    let mu = fit["params"]["mu"].as_f64().unwrap();
    assert!((mu - 2.0).abs() < 0.2, "{mu}");
    for key in ["mu", "sigma", "lambda", "extra"] {
        let se = fit["std_errors"][key].as_f64().unwrap();
        assert!(se > 0.0 && se.is_finite(), "{key}: {se}");
    }
    assert_eq!(doc["gof"]["quantile_residuals"].as_array().unwrap().len(), 400);
}

#[test]
fn fixed_lambda_counts_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path(), &["--sigma", "0.4", "-n", "200", "--seed", "1"]);
    let out = bcs(&["fit", "--input", &path, "--column", "y", "--fix-lambda", "0"]);
    let doc = json(&out);
    assert_eq!(doc["fit"]["free_parameters"], 2);
    assert_eq!(doc["fit"]["params"]["lambda"], 0.0);
    assert!(doc["fit"]["std_errors"]["lambda"].is_null());

    let out = bcs(&["fit", "--input", &path, "--column", "y", "--family", "t", "--tau", "8", "--fix-lambda", "0"]);
    assert_eq!(json(&out)["fit"]["free_parameters"], 3);
    let out = bcs(&[
        "fit", "--input", &path, "--column", "y", "--family", "t", "--tau", "8", "--fix-lambda", "0",
        "--no-extra",
    ]);
    let doc = json(&out);
    assert_eq!(doc["fit"]["free_parameters"], 2);
    assert_eq!(doc["fit"]["params"]["family"]["tau"], 8.0);
}

#[test]
fn qq_file_has_one_row_per_observation() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path(), &["--sigma", "0.4", "--lambda", "0.3", "-n", "50", "--seed", "2"]);
    let qq = dir.path().join("qq.csv");
    let out = bcs(&["fit", "--input", &path, "--column", "y", "--qq-out", qq.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(qq).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theoretical,empirical"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn empty_input_is_an_ingestion_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "y\n").unwrap();
    let out = bcs(&["fit", "--input", path.to_str().unwrap(), "--column", "y"]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "ingestion");
}

#[test]
fn nonpositive_values_need_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut body = String::from("y\n");
    for i in 1..=40 {
        body.push_str(&format!("{}\n", 1.0 + (i as f64 * 0.37).sin().abs()));
    }
    body.push_str("-1\n");
    std::fs::write(&path, body).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(bcs(&["fit", "--input", p, "--column", "y"]).status.code(), Some(3));
    let out = bcs(&["fit", "--input", p, "--column", "y", "--drop-nonpositive", "--fix-lambda", "0"]);
    assert_eq!(json(&out)["dataset"]["rejected_rows"], 1);
}

#[test]
fn compare_needs_two_families() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path(), &["-n", "100", "--seed", "3"]);
    let out = bcs(&["compare", "--input", &path, "--column", "y", "--families", "normal"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_ranks_families() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path(), &["--sigma", "0.3", "--lambda", "0.5", "-n", "200", "--seed", "5"]);
    let out = bcs(&[
        "compare", "--input", &path, "--column", "y", "--families", "normal,t:5,logistic-ii",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("aic"));
}

#[test]
fn sample_is_deterministic_and_positive() {
    let args = ["sample", "--family", "cauchy", "--lambda", "-0.5", "--sigma", "0.8", "-n", "200", "--seed", "9"];
    let a = bcs(&args);
    let b = bcs(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let values: Vec<f64> = text.lines().skip(2).map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 200);
    assert!(values.iter().all(|v| *v > 0.0 && v.is_finite()));
    let c = bcs(&["sample", "-n", "5", "--seed", "10"]);
    assert_ne!(bcs(&["sample", "-n", "5", "--seed", "11"]).stdout, c.stdout);
}

#[test]
fn seed_comes_from_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_bcs"))
            .args(["sample", "-n", "3"])
            .env("BCS_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("21"), bcs(&["sample", "-n", "3", "--seed", "21"]).stdout);
}

#[test]
fn tail_reports_index_and_category() {
    let doc = json(&bcs(&["tail", "--family", "t", "--tau", "4", "--sigma", "0.5", "--lambda", "0.5"]));
    assert_eq!(doc["report"]["tail_index"], 0.5);
    assert_eq!(doc["report"]["heaviness"], "Paretian");

    let doc = json(&bcs(&["tail", "--lambda", "-2"]));
    assert_eq!(doc["report"]["tail_index"], 0.5);

    let doc = json(&bcs(&["tail", "--family", "cauchy"]));
    assert_eq!(doc["tail_index_text"], "inf");
    assert_eq!(doc["report"]["heaviness"], "HeavierThanParetian");

    let doc = json(&bcs(&["tail", "--family", "t", "--tau", "4", "--lambda", "-1", "--verify"]));
    let slope = doc["verification"]["empirical_slope"].as_f64().unwrap();
    assert!(slope < 0.0);
    assert_eq!(doc["verification"]["expected_slope"], -1.0);
}

#[test]
fn unknown_family_is_a_usage_error() {
    let out = bcs(&["tail", "--family", "gumbel"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bcs(&["tail", "--family", "t"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_reports_cells() {
    let out = bcs(&[
        "simulate", "--family", "t", "--tau", "4", "--sizes", "40", "--replicates", "30", "--seed", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    let cells = doc["result"]["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    for c in cells {
        let rate = c["rejection_rate"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
}

#[test]
fn simulate_rejects_nonzero_lambda_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(
        &plan,
        r#"{"true_params":{"mu":1.0,"sigma":1.0,"lambda":0.3,"family":{"kind":"normal"}},
            "sample_sizes":[5],"replicates":0,"nominal_level":0.05,"seed":1,"derivative_mode":"both"}"#,
    )
    .unwrap();
    let out = bcs(&["simulate", "--plan", plan.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
