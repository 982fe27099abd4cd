use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chancekit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn problem() -> String {
    data("uniform_1d.json").display().to_string()
}

#[test]
fn prior_certificate_picks_59() {
    let o = run(&["solve", "--problem", &problem(), "--generate", "--certify", "prior", "--beta", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["n_scenarios"], 59);
    assert_eq!(v["certificate"]["detail"]["n_required"], 59);
    assert_eq!(v["status"], "optimal");
}

#[test]
fn undersized_sample_has_no_certificate() {
    let o = run(&["solve", "--problem", &problem(), "--generate", "--n-scenarios", "20", "--certify", "prior"]);
    assert_eq!(o.status.code(), Some(3));
    let v = json_out(&o);
    assert!(v["certificate"].is_null());
    assert!(v["certificate_unavailable"].as_str().unwrap().contains("59"));
    assert!(v["objective"].is_number());
}

#[test]
fn saa_at_level_zero_matches_scenario() {
    let base = ["solve", "--problem", &problem(), "--generate", "--n-scenarios", "80", "--seed", "4"];
    let s = json_out(&run(&base));
    let mut saa = base.to_vec();
    saa.extend(["--method", "saa", "--eps-level", "0.0"]);
    let a = json_out(&run(&saa));
    let (x, y) = (s["objective"].as_f64().unwrap(), a["objective"].as_f64().unwrap());
    assert!((x - y).abs() < 1e-9, "{x} vs {y}");
}

#[test]
fn gaussian_on_uniform_is_an_input_error() {
    let o = run(&["solve", "--problem", &problem(), "--method", "gaussian"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not Gaussian"));
}

#[test]
fn schema_errors_exit_1_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let text = std::fs::read_to_string(data("uniform_1d.json")).unwrap().replace("\"m\": 1", "\"m\": 2");
    std::fs::write(&p, text).unwrap();
    let o = run(&["solve", "--problem", p.to_str().unwrap(), "--generate", "--n-scenarios", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("cc_rows: expected m = 2 entries, got 1"), "{err}");
}

#[test]
fn infeasible_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tight.json");
    let text = std::fs::read_to_string(data("uniform_1d.json"))
        .unwrap()
        .replace("\"upper\": [10.0]", "\"upper\": [0.1]");
    std::fs::write(&p, text).unwrap();
    let o = run(&["solve", "--problem", p.to_str().unwrap(), "--scenarios", data("two_scenarios.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json_out(&o)["status"], "infeasible");
}

#[test]
fn posterior_on_two_scenarios() {
    let o = run(&[
        "solve",
        "--problem",
        &problem(),
        "--scenarios",
        data("two_scenarios.csv").to_str().unwrap(),
        "--certify",
        "posterior",
        "--beta",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["support_set"], serde_json::json!([1]));
    assert_eq!(v["certificate"]["detail"]["k"], 1);
}

#[test]
fn certify_examples() {
    let v = json_out(&run(&["certify", "--mode", "prior", "--eps", "0.05", "--beta", "0.05", "--h", "1"]));
    assert_eq!(v["N"], 59);
    assert_eq!(v["input"]["eps"], 0.05);
    let v = json_out(&run(&["certify", "--mode", "feasibility", "--N", "100", "--V", "0", "--rho", "0.05"]));
    assert!((v["eps_bar"].as_f64().unwrap() - 0.02951).abs() < 5e-6);
    let v = json_out(&run(&["certify", "--mode", "posterior", "--N", "1", "--k", "0", "--beta", "0.1"]));
    // (β/2)(1 + t) = t gives t = β/(2 − β) = 1/19; eps_k is reported as 1 − t
    assert!((v["t_k"].as_f64().unwrap() - 0.05263).abs() < 5e-6);
    assert!((v["eps_k"].as_f64().unwrap() - 18.0 / 19.0).abs() < 1e-9);
    let o = run(&["certify", "--mode", "prior", "--eps", "1.5", "--beta", "0.05"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["certify", "--mode", "posterior", "--N", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn emit_matches_golden_file() {
    let o = run(&["emit", "--problem", &problem(), "--scenarios", data("two_scenarios.csv").to_str().unwrap(), "--format", "lp"]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(data("two_scenarios.lp")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), golden);
}

#[test]
fn emitted_lp_reloads_and_reemits_identically() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("p.lp");
    let scen = data("two_scenarios.csv");
    let solved = json_out(&run(&["solve", "--problem", &problem(), "--scenarios", scen.to_str().unwrap()]));
    let mut texts = Vec::new();
    for _ in 0..2 {
        let o = run(&["emit", "--problem", &problem(), "--scenarios", scen.to_str().unwrap(), "--output", lp.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        texts.push(std::fs::read(&lp).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert!(!dir.path().join("p.soc.json").exists());
    let loaded = json_out(&run(&["load", lp.to_str().unwrap()]));
    let a = solved["objective"].as_f64().unwrap();
    let b = loaded["objective"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9);
}

#[test]
fn cone_programs_write_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("ball.lp");
    let o = run(&["emit", "--problem", &problem(), "--method", "robust", "--set", "ball", "--output", lp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("ball.soc.json").exists());
    let solved = json_out(&run(&["solve", "--problem", &problem(), "--method", "robust", "--set", "ball"]));
    let loaded = json_out(&run(&["load", lp.to_str().unwrap()]));
    let a = solved["objective"].as_f64().unwrap();
    let b = loaded["objective"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    // without --output the sidecar has nowhere to go
    let o = run(&["emit", "--problem", &problem(), "--method", "robust", "--set", "ball"]);
    assert_eq!(o.status.code(), Some(1));
}

fn strip_times(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(a, _)| a).to_owned()).collect()
}

#[test]
fn validate_is_deterministic_and_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for (i, extra) in [&[][..], &["--sequential"][..]].iter().enumerate() {
        let csv = dir.path().join(format!("t{i}.csv"));
        let summary = dir.path().join(format!("s{i}.json"));
        let mut args = vec![
            "validate",
            "--problem",
            &problem(),
            "--trials",
            "40",
            "--seed",
            "11",
        ]
        .into_iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
        args.extend(["--output", csv.to_str().unwrap(), "--summary", summary.to_str().unwrap()].map(str::to_owned));
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = run(&refs);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "trial,N,objective,violation,support_count,method,wall_time_ms"
        );
        assert_eq!(text.lines().count(), 41);
        let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
        assert_eq!(s["trials"], 40);
        assert!(s["coverage"].as_f64().unwrap() >= 0.0);
        outs.push(strip_times(&text));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn thread_cap_does_not_change_results() {
    let one = Command::new(env!("CARGO_BIN_EXE_chancekit"))
        .env("CHANCEKIT_THREADS", "1")
        .args(["validate", "--problem", &problem(), "--trials", "10", "--seed", "2"])
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_chancekit"))
        .env("CHANCEKIT_THREADS", "4")
        .args(["validate", "--problem", &problem(), "--trials", "10", "--seed", "2"])
        .output()
        .unwrap();
    assert_eq!(
        strip_times(&String::from_utf8_lossy(&one.stdout)),
        strip_times(&String::from_utf8_lossy(&many.stdout))
    );
}

#[test]
fn lower_bound_experiment_reports_l() {
    let o = run(&[
        "validate",
        "--problem",
        &problem(),
        "--experiment",
        "lower-bound",
        "--M",
        "20",
        "--n-scenarios",
        "5",
        "--beta",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(s["M"], 20);
    assert!(s["lower_bound"].as_f64().unwrap() <= 0.95);
}
