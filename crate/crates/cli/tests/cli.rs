//! End-to-end checks of the binary: exit codes, CSV schemas, determinism,
//! and config-file handling.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiring"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn simulate_emits_stable_header_and_is_deterministic() {
    let args = [
        "simulate", "--policy", "alg2", "--dist", "uniform01", "--n", "32,64", "--reps", "400",
        "--seed", "7",
    ];
    let a = run(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "policy,n,dist,reps,seed,mean_cost,stderr,opt_mean,opt_stderr,ratio,max_concurrency,mean_hires"
    );
    assert_eq!(lines.count(), 2);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout, "same flags and seed must reproduce bytes");
}

#[test]
fn simulate_rejects_bad_policy_with_exit_2() {
    let out = run(&["simulate", "--policy", "alg9", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).is_empty(), "no partial output on config error");
}

#[test]
fn simulate_reports_coverage_violation_with_exit_3() {
    // The doubling policy's thresholds live in [0,1]; Pareto costs start at 1,
    // so it can never hire and the very first step is uncovered.
    let out = run(&[
        "simulate", "--policy", "alg1", "--dist", "pareto:3,1", "--n", "16", "--reps", "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dp_exact_small_case() {
    let out = run(&["dp", "--n", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("7/8"), "{text}");
    assert!(text.contains("ratio = 1.05"), "{text}");
}

#[test]
fn dp_rejects_zero_horizon() {
    assert_eq!(run(&["dp", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn dp_tier_gate_is_a_resource_limit() {
    assert_eq!(run(&["dp", "--n", "5000"]).status.code(), Some(4));
    assert_eq!(run(&["dp", "--n", "5000", "--tier", "smoke"]).status.code(), Some(4));
}

#[test]
fn dp_curve_schema() {
    let out = run(&["dp", "--n", "12", "--curve"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "n,cost,opt,ratio");
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn figure4_schema_and_lower_bound_relation() {
    let out = run(&["figure4", "--n-max", "96", "--reps", "200", "--seed", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,alg2_ratio,dp_ratio,gm_lower");
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 4);
        assert!(cols[3] <= cols[2] + 1e-9, "gm_lower above dp_ratio in {line}");
    }
}

#[test]
fn bounds_all_satisfied() {
    let out = run(&["bounds"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "name,n,value,bound,satisfied");
    let mut rows = 0;
    for line in lines {
        assert!(line.ends_with(",true"), "unsatisfied bound: {line}");
        rows += 1;
    }
    assert!(rows >= 5);
}

#[test]
fn markov_schema_and_domain_error() {
    let out = run(&["markov", "--family", "mhat", "--p", "0.75", "--k", "3", "--reps", "20000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "quantity,reference,reference_kind,simulated,stderr,sigmas"
    );
    // 4 visit rows + total transitions.
    assert_eq!(text.lines().count(), 6);

    let bad = run(&["markov", "--family", "mhat", "--p", "0.4", "--k", "3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = std::env::temp_dir().join(format!("hiring-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("sim.json");
    std::fs::write(&cfg, r#"{"policy":"alg2","dist":"uniform01","n":[16],"reps":200,"seed":3}"#)
        .unwrap();
    let from_config = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(from_config.status.success());
    assert!(stdout(&from_config).contains("alg2,16,uniform01,200,3,"));

    // An explicit flag wins over the config value.
    let overridden =
        run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert!(stdout(&overridden).contains("alg2,16,uniform01,200,9,"));

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"policy":"alg2","frobnicate":1}"#).unwrap();
    assert_eq!(
        run(&["simulate", "--config", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("hiring-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("rows.csv");
    let out = run(&[
        "simulate", "--policy", "alg5", "--dist", "uniform01", "--n", "50", "--reps", "300",
        "--seed", "4", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("policy,n,dist,"));
    // Sequential policy: exactly one contract at a time.
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[10], "1", "max_concurrency column");
    std::fs::remove_dir_all(&dir).ok();
}
