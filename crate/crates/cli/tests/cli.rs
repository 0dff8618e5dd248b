use std::path::Path;
use std::process::Command;

use tapc_core::model::{parse_allocation, parse_scenario};
use tapc_core::oracle::analytic_2cell_fixed_point;

const NOISE: f64 = 3.981071705534972e-21;
const B: f64 = 18e6;

fn tapc(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tapc"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const SINGLE: &str = "[scenario]\nsites = 1\nsectors_per_site = 1\nusers_per_cell = 9\n\
demand = 2.5e6\npower_limit = 1.0\n[sweep]\nalgorithms = [\"pm-sc\", \"rm-sc\"]\n";

#[test]
fn single_cell_runs_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SINGLE);
    for algo in ["pm-sc", "rm-sc"] {
        let out = dir.path().join(algo);
        let (code, _, err) = tapc(&[
            "run",
            "--config",
            &cfg,
            "--algo",
            algo,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let sc = parse_scenario(&read(&out, "scenario.txt")).unwrap();
        assert_eq!((sc.cell_count(), sc.user_count()), (1, 9));
        let alloc = parse_allocation(&read(&out, "solution.txt")).unwrap();
        let load: f64 = alloc.load.iter().sum();
        assert!((load - 1.0).abs() < 1e-9);
        let diag = read(&out, "diagnostics.txt");
        assert!(diag.contains("status = solved"));
        assert!(read(&out, "trace.csv").starts_with("# tapc-trace v1\n"));
        if algo == "rm-sc" {
            let total: f64 = alloc.avg_power.iter().sum::<f64>() * B;
            assert!((total - 1.0).abs() < 1e-9);
            assert!(diag.contains("mode = Surplus"));
        } else {
            for (r, d) in alloc.rate.iter().zip(sc.demands()) {
                assert!((r / d - 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn two_cell_dtapc_pm_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (g, gc, d) = (1e-10, 1e-11, 1e6);
    let scenario = format!(
        "# tapc scenario v1\ncells = 2\nusers = 2\nnoise_density = {NOISE:e}\nbandwidth = {B:e}\n\
         power_limits = 1e1 1e1\nserving = 0 1\ndemands = {d:e} {d:e}\ngains:\n{g:e} {gc:e}\n{gc:e} {g:e}\n"
    );
    let sc_path = write(dir.path(), "two.txt", &scenario);
    parse_scenario(&scenario).expect("hand-written scenario parses");
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("scenario_file = \"{sc_path}\"\n"),
    );
    let out = dir.path().join("o");
    let (code, _, err) = tapc(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let sc = parse_scenario(&read(&out, "scenario.txt")).unwrap();
    let alloc = parse_allocation(&read(&out, "solution.txt")).unwrap();
    let q = analytic_2cell_fixed_point(g, gc, d, B, NOISE).unwrap();
    for i in 0..2 {
        let qi: f64 = sc.users_of(i).iter().map(|&u| alloc.avg_power[u]).sum();
        assert!((qi / q - 1.0).abs() < 1e-8);
    }
    let trace = read(&out, "trace.csv");
    assert!(trace
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("iteration,residual,q_0,q_1"));
}

#[test]
fn infeasible_run_exits_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[scenario]\nsites = 3\nsectors_per_site = 1\nusers_per_cell = 3\ndemand = 5e7\n",
    );
    let out = dir.path().join("o");
    let (code, _, _) = tapc(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(read(&out, "diagnostics.txt").contains("status = infeasible"));
    assert!(!out.join("solution.txt").exists());
    assert!(out.join("trace.csv").exists());
}

#[test]
fn config_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "out_dir = \"x\"\nalgorithm = \"fastest\"\n",
    );
    let (code, _, err) = tapc(&["run", "--config", &bad]);
    assert_eq!(code, 64);
    assert!(err.contains("line 2"), "{err}");

    let (code, _, _) = tapc(&["run", "--algo", "fastest"]);
    assert_eq!(code, 64);

    let multi = write(
        dir.path(),
        "m.toml",
        "algorithm = \"pm-sc\"\n[scenario]\nsites = 2\nusers_per_cell = 2\n",
    );
    let (code, _, err) = tapc(&[
        "run",
        "--config",
        &multi,
        "--out",
        dir.path().join("m").to_str().unwrap(),
    ]);
    assert_eq!(code, 64);
    assert!(err.contains("single-cell"), "{err}");
}

#[test]
fn corrupted_gain_sign_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = "# tapc scenario v1\ncells = 1\nusers = 2\nnoise_density = 3.98e-21\n\
                bandwidth = 1.8e7\npower_limits = 1e0\nserving = 0 0\ndemands = 1e6 1e6\n\
                gains:\n1e-10 -2e-11\n";
    let sc = write(dir.path(), "s.txt", text);
    let cfg = write(dir.path(), "c.toml", &format!("scenario_file = \"{sc}\"\n"));
    let (code, _, err) = tapc(&[
        "check",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code, 64);
    assert!(err.contains("gain must be positive"), "{err}");
    assert!(err.contains("line 10"), "{err}");
}

#[test]
fn sweep_is_deterministic_and_dominance_holds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[scenario]\nsites = 3\nsectors_per_site = 1\nusers_per_cell = 3\nseed = 4\n\
         [sweep]\nstart = 2e5\nstop = 1.4e6\npoints = 4\nalgorithms = [\"dtapc-pm\", \"opv-pm\", \"dtapc-rm\"]\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        tapc(&["sweep", "--config", &cfg, "--out", a.to_str().unwrap()]).0,
        0
    );
    assert_eq!(
        tapc(&["sweep", "--config", &cfg, "--out", b.to_str().unwrap()]).0,
        0
    );
    let csv = read(&a, "sweep.csv");
    assert_eq!(csv, read(&b, "sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# tapc-sweep v1"));
    assert_eq!(
        lines.next(),
        Some("demand_bps,algorithm,status,sum_power_w,sum_rate_bps,iterations")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    for chunk in rows.chunks(3) {
        assert_eq!(
            (chunk[0][1], chunk[1][1], chunk[2][1]),
            ("dtapc-pm", "opv-pm", "dtapc-rm")
        );
        if chunk[0][2] == "solved" && chunk[1][2] == "solved" {
            let dp: f64 = chunk[0][3].parse().unwrap();
            let op: f64 = chunk[1][3].parse().unwrap();
            assert!(dp <= op);
        }
    }
}

#[test]
fn empty_sweep_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SINGLE}points = 0\n"));
    let out = dir.path().join("o");
    assert_eq!(
        tapc(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]).0,
        0
    );
    assert_eq!(read(&out, "sweep.csv").lines().count(), 2);
}

#[test]
fn check_passes_and_skips_multi_cell_for_one_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SINGLE);
    let out = dir.path().join("o");
    let (code, stdout, err) = tapc(&["check", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{err}");
    assert!(stdout.contains("SKIP multi-cell checks"));
    assert!(!stdout.contains("FAIL"));

    let multi = write(
        dir.path(),
        "m.toml",
        "[scenario]\nsites = 3\nsectors_per_site = 1\nusers_per_cell = 2\nseed = 2\n[check]\nsamples = 50\ninits = 4\n",
    );
    let (code, stdout, err) = tapc(&["check", "--config", &multi, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{err}");
    for name in [
        "interference axioms",
        "uniqueness",
        "dominance over opv-pm",
        "dtapc-rm monotone",
    ] {
        assert!(stdout.contains(&format!("PASS {name}")), "{stdout}");
    }
}
