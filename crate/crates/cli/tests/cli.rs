//! End-to-end checks of the `wncs` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PAPER_CONFIG: &str = r#"
[system]
a = 1.2
b = 1.0
k = -1.2
r = 1.0
q = 1.0

[channel]
kind = "exponential"
p0 = 0.8
ratio = 0.5

[solver]
n = 70
m = 5

[sim]
t = 4000
warmup = 200
seeds = [1, 2, 3, 4, 5]
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn wncs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wncs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = wncs(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn solve_writes_policy_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), PAPER_CONFIG);
    let out = dir.path().join("out");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "solve",
    ]);
    let policy = read(&out.join("policy.csv"));
    let lines: Vec<&str> = policy.lines().collect();
    assert_eq!(lines[0], "d,l");
    assert_eq!(lines.len(), 71);
    assert_eq!(lines[1], "1,1");
    assert_eq!(lines[8], "8,3");
    let summary = read(&out.join("solve_summary.json"));
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert!((v["gain"].as_f64().unwrap() - 15.787745268).abs() < 1e-6);
    assert_eq!(v["n"], 70);
}

#[test]
fn stability_table_matches_the_products() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), PAPER_CONFIG);
    let out = dir.path().join("out");
    let stdout = run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "stability",
    ]);
    assert!(stdout.contains("variable-length: stable"));
    let table = read(&out.join("stability.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "l,g,rho2l,product,stable");
    assert!(lines[1].starts_with("1,") && lines[1].ends_with("false"));
    for line in &lines[2..=5] {
        assert!(line.ends_with("true"), "{line}");
    }
}

#[test]
fn evaluate_fixed_length_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), PAPER_CONFIG);
    let out = dir.path().join("out");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "-n",
        "300",
        "evaluate",
        "--fixed-length",
        "3",
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&read(&out.join("evaluate_summary.json"))).unwrap();
    assert!((v["gain"].as_f64().unwrap() - 18.005672884425945).abs() < 1e-6);
}

#[test]
fn evaluate_accepts_solved_policy_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), PAPER_CONFIG);
    let out = dir.path().join("out");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "solve",
    ]);
    let policy = out.join("policy.csv");
    let stdout = run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "evaluate",
        "--policy",
        policy.to_str().unwrap(),
    ]);
    assert!(stdout.contains("gain=1.578774526"), "{stdout}");
}

#[test]
fn fig2_columns_agree_with_single_solves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), PAPER_CONFIG);
    let out = dir.path().join("out");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "fig2",
        "--n-list",
        "30,50,70",
    ]);
    let table = read(&out.join("fig2_policies.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "d,l_n30,l_n50,l_n70");
    assert_eq!(lines.len(), 31);
    // the single-N solve writes the same actions as the N=70 column
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "solve",
    ]);
    let policy = read(&out.join("policy.csv"));
    let solo: Vec<&str> = policy.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    for (i, line) in lines[1..].iter().enumerate() {
        let col70 = line.split(',').nth(3).unwrap();
        assert_eq!(col70, solo[i], "row d={}", i + 1);
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), PAPER_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "simulate",
            "--fixed-length",
            "3",
        ]);
    }
    assert_eq!(
        read(&out_a.join("sim_seeds.csv")),
        read(&out_b.join("sim_seeds.csv"))
    );
    assert_eq!(
        read(&out_a.join("aoi_histogram.csv")),
        read(&out_b.join("aoi_histogram.csv"))
    );
    assert_eq!(
        read(&out_a.join("sim_summary.json")),
        read(&out_b.join("sim_summary.json"))
    );
    // seed override changes the outputs
    let out_c = dir.path().join("c");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_c.to_str().unwrap(),
        "--seeds",
        "11..15",
        "simulate",
        "--fixed-length",
        "3",
    ]);
    assert_ne!(
        read(&out_a.join("sim_seeds.csv")),
        read(&out_c.join("sim_seeds.csv"))
    );
}

#[test]
fn unstable_instance_is_refused_with_category() {
    let unstable = PAPER_CONFIG
        .replace("p0 = 0.8", "p0 = 0.9")
        .replace("ratio = 0.5", "ratio = 0.8");
    // products: 0.9*1.44 = 1.296 rising by 0.8*1.44 = 1.152 per step
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &unstable);
    let out = wncs(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "solve",
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[divergence]:"), "{stderr}");
    assert!(stderr.contains("g(l)*rho^(2l)"), "{stderr}");
}

#[test]
fn missing_config_block_is_reported() {
    let broken = PAPER_CONFIG.replace("[channel]", "[chan]");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &broken);
    let out = wncs(&["--config", cfg.to_str().unwrap(), "stability"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[config]:"), "{stderr}");
    assert!(stderr.contains("channel"), "{stderr}");
}

#[test]
fn matrix_plant_config_runs_solve_and_stability() {
    let matrix_config = r#"
[system]
a = [[1.05, 0.3], [0.0, 0.9]]
b = [[1.0, 0.0], [0.0, 1.0]]
k = [[-1.05, -0.3], [0.0, -0.9]]
r = [[1.0, 0.0], [0.0, 1.0]]
q = [[1.0, 0.0], [0.0, 2.0]]

[channel]
kind = "exponential"
p0 = 0.8
ratio = 0.5

[solver]
n = 40
m = 3
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), matrix_config);
    let out = dir.path().join("out");
    let stdout = run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "stability",
    ]);
    assert!(stdout.contains("variable-length: stable"), "{stdout}");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "solve",
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&read(&out.join("solve_summary.json"))).unwrap();
    assert!(v["gain"].as_f64().unwrap().is_finite());
    // the solved policy evaluates to the same gain
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "evaluate",
        "--policy",
        out.join("policy.csv").to_str().unwrap(),
    ]);
    let e: serde_json::Value =
        serde_json::from_str(&read(&out.join("evaluate_summary.json"))).unwrap();
    let gain = v["gain"].as_f64().unwrap();
    let eval = e["gain"].as_f64().unwrap();
    assert!(((gain - eval) / gain).abs() < 1e-6, "{gain} vs {eval}");
}

#[test]
fn action_truncation_override_limits_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), PAPER_CONFIG);
    let out = dir.path().join("out");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "-m",
        "2",
        "solve",
    ]);
    let policy = read(&out.join("policy.csv"));
    for line in policy.lines().skip(1) {
        let l: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(l <= 2, "{line}");
    }
}

#[test]
fn fig3_reports_divergent_unit_length_and_saving() {
    let dir = tempfile::tempdir().unwrap();
    // small Monte Carlo load: the CSV structure is what matters here
    let quick = PAPER_CONFIG
        .replace("t = 4000", "t = 1500")
        .replace("seeds = [1, 2, 3, 4, 5]", "seeds = [1, 2, 3]");
    let cfg = write_config(dir.path(), &quick);
    let out = dir.path().join("out");
    let stdout = run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "fig3",
    ]);
    assert!(stdout.contains("saving:"), "{stdout}");
    let table = read(&out.join("fig3_costs.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[1].starts_with("1,divergent"));
    for line in &lines[2..=5] {
        assert!(line.contains(",stable,"), "{line}");
    }
    assert!(lines[6].starts_with("variable,stable"));
    let v: serde_json::Value = serde_json::from_str(&read(&out.join("fig3_summary.json"))).unwrap();
    assert!(v["saving_vs_best_fixed"].as_f64().unwrap().is_finite());
    assert_eq!(v["fixed"]["1"]["status"], "divergent");
}
