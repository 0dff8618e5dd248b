//! Property suite on one seeded scenario.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tapc_core::baselines::opv_pm;
use tapc_core::model::{validate_allocation, NetworkScenario};
use tapc_core::oracle::{grid_oracle_pm_sc, grid_oracle_rm_sc};
use tapc_core::pm::{dtapc_pm, interference_property_check, uniqueness_check};
use tapc_core::rm::dtapc_rm;
use tapc_core::single_cell::{min_power_of_demands, pm_sc, rm_sc, SingleCellProblem};

use crate::config::Config;
use crate::{build_scenario, create_dir, num, write_file, CliError, EXIT_OK, EXIT_VIOLATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub verdict: Verdict,
    pub name: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    fn push(&mut self, verdict: Verdict, name: &str, detail: impl Into<String>) {
        self.lines.push(CheckLine {
            verdict,
            name: name.to_string(),
            detail: detail.into(),
        });
    }

    fn assert(&mut self, ok: bool, name: &str, detail: impl Into<String>) {
        let v = if ok { Verdict::Pass } else { Verdict::Fail };
        self.push(v, name, detail);
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.verdict != Verdict::Fail)
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let tag = match l.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
                Verdict::Skip => "SKIP",
            };
            let _ = writeln!(s, "{tag} {}: {}", l.name, l.detail);
        }
        s
    }
}

/// Single-cell instances built from `M ∈ {2, 3}` random users of one random
/// cell, seen against noise only.
fn oracle_instances(sc: &NetworkScenario, count: usize, seed: u64) -> Vec<SingleCellProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..count {
        let cell = rng.random_range(0..sc.cell_count());
        let users = sc.users_of(cell);
        if users.len() < 2 {
            continue;
        }
        let m = rng.random_range(2..=users.len().min(3));
        let picked: Vec<usize> = sample(&mut rng, users.len(), m)
            .into_iter()
            .map(|k| users[k])
            .collect();
        let prob = SingleCellProblem::new(
            picked.iter().map(|&u| sc.gain(cell, u)).collect(),
            picked.iter().map(|&u| sc.demand(u)).collect(),
            sc.noise_density(),
            sc.bandwidth(),
            f64::INFINITY,
        );
        out.extend(prob.ok());
    }
    out
}

fn oracle_checks(
    report: &mut CheckReport,
    sc: &NetworkScenario,
    cfg: &Config,
) -> Result<(), CliError> {
    let c = &cfg.check;
    let instances = oracle_instances(sc, c.oracle_instances, c.seed);
    if instances.is_empty() {
        report.push(Verdict::Skip, "oracle", "no cell has two or more users");
        return Ok(());
    }
    let (mut pm_worst, mut pm_ok) = (0.0f64, true);
    let (mut rm_worst, mut rm_ok) = (0.0f64, true);
    for prob in &instances {
        let sol = pm_sc(prob)?;
        let grid = grid_oracle_pm_sc(prob, c.oracle_resolution);
        let gap = (sol.total_power() - grid.objective) / grid.objective;
        pm_worst = pm_worst.max(gap.abs());
        pm_ok &= sol.total_power() <= grid.objective + grid.error_bound
            && (sol.total_load() - 1.0).abs() <= 1e-9;

        let cap = 2.0 * min_power_of_demands(prob)?;
        let capped = SingleCellProblem::new(
            prob.gains().to_vec(),
            prob.demands().to_vec(),
            sc.noise_density(),
            sc.bandwidth(),
            cap,
        )?;
        let out = rm_sc(&capped)?;
        match (
            out.solution(),
            grid_oracle_rm_sc(&capped, c.oracle_resolution),
        ) {
            (Some(sol), Some(grid)) => {
                let gap = (grid.objective - sol.sum_rate()) / grid.objective;
                rm_worst = rm_worst.max(gap.abs());
                rm_ok &= sol.sum_rate() >= grid.objective - grid.error_bound
                    && (sol.total_load() - 1.0).abs() <= 1e-9;
            }
            _ => rm_ok = false,
        }
    }
    report.assert(
        pm_ok,
        "pm-sc vs grid oracle",
        format!(
            "{} instances, worst relative gap {}",
            instances.len(),
            num(pm_worst)
        ),
    );
    report.assert(
        rm_ok,
        "rm-sc vs grid oracle",
        format!(
            "{} instances, worst relative gap {}",
            instances.len(),
            num(rm_worst)
        ),
    );
    Ok(())
}

fn multi_cell_checks(
    report: &mut CheckReport,
    sc: &NetworkScenario,
    cfg: &Config,
) -> Result<(), CliError> {
    let c = &cfg.check;
    let pm_opts = cfg.solver.pm_options();
    let axioms = interference_property_check(sc, c.samples, c.seed)?;
    report.assert(
        axioms.passed(),
        "interference axioms",
        format!(
            "{} samples; violations positivity {} monotonicity {} scalability {}",
            axioms.samples,
            axioms.positivity_violations,
            axioms.monotonicity_violations,
            axioms.scalability_violations
        ),
    );

    let pm = dtapc_pm(sc, &pm_opts)?;
    let Some(pm_sol) = pm.solution() else {
        report.push(
            Verdict::Skip,
            "fixed-point checks",
            "DTAPC-PM reports the demands infeasible for this scenario",
        );
        return Ok(());
    };
    report.assert(
        validate_allocation(&pm_sol.allocation, sc, 1e-6).all_satisfied(),
        "dtapc-pm constraints",
        format!("{} iterations", pm_sol.iterations),
    );

    let uni = uniqueness_check(sc, c.inits, c.seed, &pm_opts)?;
    report.assert(
        uni.agrees_within(c.uniqueness_tol),
        "uniqueness",
        format!(
            "{} starts, {} solved, max relative spread {}",
            uni.initial_points.len(),
            uni.fixed_points.iter().flatten().count(),
            num(uni.max_rel_spread)
        ),
    );

    match opv_pm(sc, &pm_opts)?.solution() {
        Some(opv) => {
            let below = pm_sol
                .q
                .0
                .iter()
                .zip(&opv.q.0)
                .all(|(d, o)| *d <= *o * (1.0 + 1e-9));
            let (pd, po) = (pm_sol.sum_power_watts(sc), opv.sum_power_watts(sc));
            report.assert(
                below && pd <= po,
                "dominance over opv-pm",
                format!("sum power {} W vs {} W", num(pd), num(po)),
            );
        }
        None => report.push(
            Verdict::Pass,
            "dominance over opv-pm",
            "OPV-PM is infeasible where DTAPC-PM is feasible",
        ),
    }

    if let Some(rm) = dtapc_rm(sc, &cfg.solver.rm_options())?.solution() {
        let monotone = rm
            .sum_rate_trace
            .windows(2)
            .all(|w| w[1] >= w[0] * (1.0 - 1e-12));
        report.assert(
            monotone,
            "dtapc-rm monotone sum rate",
            format!("{} sweeps, converged {}", rm.sweeps, rm.converged),
        );
        let broken = rm.compliance.iter().filter(|x| !x.holds()).count();
        report.assert(
            broken == 0,
            "dtapc-rm cell structure",
            format!("{broken} cells out of structure"),
        );
    }
    Ok(())
}

fn single_cell_checks(report: &mut CheckReport, sc: &NetworkScenario) -> Result<(), CliError> {
    let users = sc.users_of(0);
    let prob = SingleCellProblem::new(
        users.iter().map(|&u| sc.gain(0, u)).collect(),
        users.iter().map(|&u| sc.demand(u)).collect(),
        sc.noise_density(),
        sc.bandwidth(),
        sc.power_cap_density(0),
    )?;
    let pm = pm_sc(&prob)?;
    report.assert(
        (pm.total_load() - 1.0).abs() <= 1e-9,
        "pm-sc full load",
        format!("sum of loads {}", num(pm.total_load())),
    );
    match rm_sc(&prob)?.solution() {
        Some(rm) => report.assert(
            (rm.total_load() - 1.0).abs() <= 1e-9,
            "rm-sc full load",
            format!("sum of loads {}", num(rm.total_load())),
        ),
        None => report.push(
            Verdict::Skip,
            "rm-sc full load",
            "demands exceed the power limit",
        ),
    }
    Ok(())
}

/// Runs the suite on the configured scenario. Multi-cell checks are skipped
/// with a notice when the scenario has one cell.
pub fn run_checks(sc: &NetworkScenario, cfg: &Config) -> Result<CheckReport, CliError> {
    let mut report = CheckReport::default();
    oracle_checks(&mut report, sc, cfg)?;
    if sc.cell_count() == 1 {
        single_cell_checks(&mut report, sc)?;
        report.push(
            Verdict::Skip,
            "multi-cell checks",
            "scenario has a single cell",
        );
    } else {
        multi_cell_checks(&mut report, sc, cfg)?;
    }
    Ok(report)
}

/// Prints the report, writes it to `check.txt` and returns 3 on any failure.
pub fn cmd_check(cfg: &Config) -> Result<u8, CliError> {
    let sc = build_scenario(cfg)?;
    let report = run_checks(&sc, cfg)?;
    let text = report.text();
    print!("{text}");
    create_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join("check.txt"), &text)?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}
