//! End-to-end runs of the binary: artifacts, exit codes, and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hjnet"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("hjnet_cli_tests").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn trivial_stationary_solve_writes_constant_solution() {
    let dir = scratch("trivial_stationary");
    // u + |u_x| = 1 has the constant solution u = 1
    let cfg = write_config(
        &dir,
        r#"
[problem]
edges = 3
edge_length = 2.0
hamiltonian = "abs"
source = "constant"
constant_value = 1.0
far_end = [1.0, 1.0, 1.0]

[numerics]
dx = 0.1

[run]
workers = 1
"#,
    );
    let out_dir = dir.join("out");
    let out = run(bin()
        .arg("solve-stationary")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir));
    assert_exit(&out, 0);

    let csv = fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let value: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(
            (value - 1.0).abs() < 1e-8,
            "solution value {value} should be 1"
        );
        rows += 1;
    }
    assert_eq!(rows, 3 * 20 + 1);
}

#[test]
fn rates_study_passes_threshold_and_is_deterministic() {
    let dir = scratch("rates");
    let cfg = write_config(
        &dir,
        r#"
[problem]
edges = 3
edge_length = 2.0
coefficients = [0.5, 0.5, -1.0]

[study]
kind = "stationary"
dx_list = [0.1, 0.05, 0.025]
min_order = 0.45

[run]
workers = 1
"#,
    );
    let out_a = dir.join("a");
    let out = run(bin()
        .arg("rates")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_a));
    assert_exit(&out, 0);
    let rates_a = fs::read_to_string(out_a.join("rates.csv")).unwrap();
    let summary = fs::read_to_string(out_a.join("summary.csv")).unwrap();
    assert!(rates_a.starts_with("h,eps,dt,nodes,sweeps_or_steps,sup_error"));
    assert!(summary.contains("true"), "summary should pass: {summary}");

    // identical config, fresh directory: bitwise-identical artifacts
    let out_b = dir.join("b");
    let out = run(bin()
        .arg("rates")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_b));
    assert_exit(&out, 0);
    let rates_b = fs::read_to_string(out_b.join("rates.csv")).unwrap();
    assert_eq!(rates_a, rates_b);

    // an unreachable threshold flips the exit code to 5
    let out = run(bin()
        .arg("rates")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("c"))
        .arg("--min-order")
        .arg("3.0"));
    assert_exit(&out, 5);
}

#[test]
fn cauchy_cfl_violation_exits_3_and_names_the_ratio() {
    let dir = scratch("cfl");
    let cfg = write_config(
        &dir,
        r#"
[problem]
edges = 2
edge_length = 2.0
coefficients = [0.5, -0.5]
horizon = 0.5

[numerics]
dx = 0.1
dt = 0.09

[run]
workers = 1
"#,
    );
    let out = run(bin()
        .arg("solve-cauchy")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert_exit(&out, 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Δx/Δt"), "stderr: {stderr}");
    // no partial artifact may remain
    assert!(!dir.join("out").join("solution.csv").exists());
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = scratch("config_err");
    let cfg = write_config(&dir, "[problem]\nedges = 1\n");
    let out = run(bin().arg("solve-stationary").arg("--config").arg(&cfg));
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.edges"));

    let cfg = write_config(&dir, "[problem]\nedgs = 3\n");
    let out = run(bin().arg("solve-stationary").arg("--config").arg(&cfg));
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("edgs"));
}

#[test]
fn print_config_round_trips_through_a_run() {
    let dir = scratch("print_config");
    let out = run(&mut bin().arg("print-config"));
    assert_exit(&out, 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[problem]"));
    assert!(text.contains("edges = 3"));

    // the emitted config is a valid input again
    let cfg = write_config(&dir, &text);
    let out = run(bin()
        .arg("verify-junction")
        .arg("--config")
        .arg(&cfg)
        .arg("--dx")
        .arg("0.1")
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert_exit(&out, 0);
    let junction = fs::read_to_string(dir.join("out").join("junction.csv")).unwrap();
    assert!(junction.starts_with("u0,flux,sub_residual"));
}

#[test]
fn solve_cauchy_writes_space_time_csv() {
    let dir = scratch("cauchy_solve");
    let cfg = write_config(
        &dir,
        r#"
[problem]
edges = 2
edge_length = 2.0
coefficients = [1.0, -1.0]
horizon = 0.2

[numerics]
dx = 0.1

[output]
time_stride = 5

[run]
workers = 1
"#,
    );
    let out_dir = dir.join("out");
    let out = run(bin()
        .arg("solve-cauchy")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir));
    assert_exit(&out, 0);
    let csv = fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    assert!(csv.starts_with("edge,m,x,s,t,value"));
    // only every 5th level is written
    let s_values: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert!(s_values
        .iter()
        .all(|s| s.parse::<usize>().unwrap() % 5 == 0));
}

#[test]
fn certify_monotone_writes_certificate() {
    let dir = scratch("certify");
    let cfg = write_config(
        &dir,
        r#"
[problem]
edges = 3
edge_length = 3.0
hamiltonian = "abs"
source = "zero"
initial = "zero"
horizon = 1.0

[numerics]
dx = 0.5

[run]
workers = 1
trials = 20
"#,
    );
    let out_dir = dir.join("out");
    let out = run(bin()
        .arg("certify-monotone")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir));
    assert_exit(&out, 0);
    let cert = fs::read_to_string(out_dir.join("certificate.csv")).unwrap();
    assert!(cert.contains("cauchy,pass"));
    assert!(cert.contains("stationary,pass"));
}

#[test]
fn viscosity_sweep_runs_on_a_small_problem() {
    let dir = scratch("visc");
    let cfg = write_config(
        &dir,
        r#"
[problem]
edges = 2
edge_length = 2.0
coefficients = [0.5, -0.5]

[study]
kind = "stationary"
eps_list = [0.4, 0.2, 0.1]
min_order = 0.4

[run]
workers = 1
"#,
    );
    let out = run(bin()
        .arg("viscosity-sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert_exit(&out, 0);
    assert!(dir.join("out").join("rates.csv").exists());
    assert!(dir.join("out").join("summary.csv").exists());
}

#[test]
fn full_stationary_acceptance_study_through_the_cli() {
    // the canonical sin problem over six grid levels must clear the 0.45
    // order gate end to end
    let dir = scratch("full_rates");
    let cfg = write_config(
        &dir,
        r#"
[problem]
edges = 3
edge_length = 5.0
coefficients = [1.0, 1.0, -2.0]

[study]
kind = "stationary"
dx_list = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125]
min_order = 0.45
"#,
    );
    let out_dir = dir.join("out");
    let out = run(bin()
        .arg("rates")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir));
    assert_exit(&out, 0);
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let fields: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[0], "fitted");
    let order: f64 = fields[1].parse().unwrap();
    assert!(order >= 0.45, "fitted order {order}");
    assert_eq!(fields[5], "true");
}
