//! One algorithm on one scenario, with its artifacts.

use std::fmt::Write as _;

use tapc_core::baselines::opv_pm;
use tapc_core::model::{
    validate_allocation, write_allocation, write_scenario, Allocation, NetworkScenario,
};
use tapc_core::pm::{dtapc_pm, PmInfeasible, PmOutcome, PmTraceRow};
use tapc_core::rm::{dtapc_rm, RmOutcome, RmSolution};
use tapc_core::single_cell::{
    pm_sc, rm_sc, Multipliers, RmScResult, SingleCellProblem, SingleCellSolution,
};

use crate::config::{Algorithm, Config};
use crate::{build_scenario, create_dir, num, write_file, CliError, EXIT_INFEASIBLE, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Solved,
    Infeasible,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Solved => "solved",
            Status::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub status: Status,
    pub allocation: Option<Allocation>,
    /// PM iterations or RM sweeps; 0 for the closed forms.
    pub iterations: usize,
    pub sum_power_w: Option<f64>,
    pub sum_rate_bps: Option<f64>,
    /// `key = value` lines.
    pub diagnostics: Vec<(String, String)>,
    pub trace_csv: String,
}

impl RunReport {
    pub fn diagnostics_text(&self) -> String {
        let mut s = String::from("# tapc diagnostics v1\n");
        for (k, v) in &self.diagnostics {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn single_cell_problem(
    sc: &NetworkScenario,
    alg: Algorithm,
) -> Result<SingleCellProblem, CliError> {
    if sc.cell_count() != 1 {
        return Err(CliError::Config(format!(
            "{alg} needs a single-cell scenario, got {} cells",
            sc.cell_count()
        )));
    }
    let users = sc.users_of(0);
    Ok(SingleCellProblem::new(
        users.iter().map(|&u| sc.gain(0, u)).collect(),
        users.iter().map(|&u| sc.demand(u)).collect(),
        sc.noise_density(),
        sc.bandwidth(),
        sc.power_cap_density(0),
    )?)
}

fn from_single_cell(sc: &NetworkScenario, sol: &SingleCellSolution) -> Allocation {
    let mut alloc = Allocation::zeros(sc.user_count());
    for (k, &u) in sc.users_of(0).iter().enumerate() {
        alloc.load[u] = sol.load[k];
        alloc.avg_power[u] = sol.avg_power[k];
        alloc.rate[u] = sol.rate[k];
    }
    alloc
}

fn pm_trace(rows: &[PmTraceRow], cells: usize) -> String {
    let mut s = String::from("# tapc-trace v1\niteration,residual");
    for i in 0..cells {
        let _ = write!(s, ",q_{i}");
    }
    s.push('\n');
    for row in rows {
        let _ = write!(
            s,
            "{},{}",
            row.iteration,
            row.residual.map(num).unwrap_or_default()
        );
        for q in &row.q {
            let _ = write!(s, ",{}", num(*q));
        }
        s.push('\n');
    }
    s
}

fn rm_trace(sol: &RmSolution) -> String {
    let mut s = String::from("# tapc-trace v1\nsweep,sum_rate_bps\n");
    for (k, r) in sol.sum_rate_trace.iter().enumerate() {
        let _ = writeln!(s, "{k},{}", num(*r));
    }
    s
}

fn single_trace(power_w: f64, rate: f64) -> String {
    format!(
        "# tapc-trace v1\nstep,sum_power_w,sum_rate_bps\n0,{},{}\n",
        num(power_w),
        num(rate)
    )
}

fn kv(diag: &mut Vec<(String, String)>, k: &str, v: impl ToString) {
    diag.push((k.to_string(), v.to_string()));
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

fn infeasible_report(
    alg: Algorithm,
    sc: &NetworkScenario,
    inf: &PmInfeasible,
    mut diag: Vec<(String, String)>,
) -> RunReport {
    kv(&mut diag, "reason", format!("{:?}", inf.reason));
    kv(&mut diag, "iterations", inf.iterations);
    kv(&mut diag, "last_q", list(&inf.q));
    for c in &inf.offending {
        kv(
            &mut diag,
            &format!("offending_cell_{}", c.cell),
            format!(
                "power {} cap {} ratio {}",
                num(c.power),
                num(c.cap),
                num(c.ratio())
            ),
        );
    }
    RunReport {
        algorithm: alg,
        status: Status::Infeasible,
        allocation: None,
        iterations: inf.iterations,
        sum_power_w: None,
        sum_rate_bps: None,
        diagnostics: diag,
        trace_csv: pm_trace(&inf.trace, sc.cell_count()),
    }
}

fn solved_report(
    alg: Algorithm,
    sc: &NetworkScenario,
    allocation: Allocation,
    iterations: usize,
    mut diag: Vec<(String, String)>,
    trace_csv: String,
) -> RunReport {
    let sum_power_w = allocation.sum_power_watts(sc);
    let sum_rate_bps = allocation.sum_rate();
    kv(&mut diag, "iterations", iterations);
    kv(&mut diag, "sum_power_w", num(sum_power_w));
    kv(&mut diag, "sum_rate_bps", num(sum_rate_bps));
    kv(
        &mut diag,
        "cell_power_w",
        list(
            &allocation
                .cell_powers(sc)
                .0
                .iter()
                .map(|q| q * sc.bandwidth())
                .collect::<Vec<_>>(),
        ),
    );
    let report = validate_allocation(&allocation, sc, 1e-6);
    for (name, c) in [
        ("rate_consistency", &report.rate_consistency),
        ("power_cap", &report.power_cap),
        ("load_cap", &report.load_cap),
        ("demand", &report.demand),
        ("nonnegativity", &report.nonnegativity),
    ] {
        kv(
            &mut diag,
            &format!("check_{name}"),
            format!(
                "{} worst {}",
                if c.satisfied { "ok" } else { "violated" },
                num(c.worst)
            ),
        );
    }
    RunReport {
        algorithm: alg,
        status: Status::Solved,
        allocation: Some(allocation),
        iterations,
        sum_power_w: Some(sum_power_w),
        sum_rate_bps: Some(sum_rate_bps),
        diagnostics: diag,
        trace_csv,
    }
}

/// Runs `alg` on `sc` without touching the file system.
pub fn solve(alg: Algorithm, sc: &NetworkScenario, cfg: &Config) -> Result<RunReport, CliError> {
    let mut diag = Vec::new();
    kv(&mut diag, "algorithm", alg);
    kv(&mut diag, "cells", sc.cell_count());
    kv(&mut diag, "users", sc.user_count());
    let pm_opts = cfg.solver.pm_options();
    match alg {
        Algorithm::PmSc => {
            let prob = single_cell_problem(sc, alg)?;
            let sol = pm_sc(&prob)?;
            let power_w = sol.total_power() * sc.bandwidth();
            if sol.total_power() > prob.power_cap() * (1.0 + 1e-9) {
                kv(&mut diag, "status", "infeasible");
                kv(&mut diag, "reason", "CapExceeded");
                kv(&mut diag, "min_power_w", num(power_w));
                return Ok(RunReport {
                    algorithm: alg,
                    status: Status::Infeasible,
                    allocation: None,
                    iterations: 0,
                    sum_power_w: None,
                    sum_rate_bps: None,
                    diagnostics: diag,
                    trace_csv: single_trace(power_w, sol.sum_rate()),
                });
            }
            kv(&mut diag, "status", "solved");
            if let Multipliers::Pm { lambda } = sol.multipliers {
                kv(&mut diag, "lambda", num(lambda));
            }
            let alloc = from_single_cell(sc, &sol);
            let trace = single_trace(power_w, sol.sum_rate());
            Ok(solved_report(alg, sc, alloc, 0, diag, trace))
        }
        Algorithm::RmSc => {
            let prob = single_cell_problem(sc, alg)?;
            match rm_sc(&prob)? {
                RmScResult::Infeasible {
                    min_power,
                    power_cap,
                    deficit,
                } => {
                    kv(&mut diag, "status", "infeasible");
                    kv(&mut diag, "reason", "CapExceeded");
                    kv(&mut diag, "min_power_w", num(min_power * sc.bandwidth()));
                    kv(&mut diag, "power_cap_w", num(power_cap * sc.bandwidth()));
                    kv(&mut diag, "deficit_w", num(deficit * sc.bandwidth()));
                    Ok(RunReport {
                        algorithm: alg,
                        status: Status::Infeasible,
                        allocation: None,
                        iterations: 0,
                        sum_power_w: None,
                        sum_rate_bps: None,
                        diagnostics: diag,
                        trace_csv: single_trace(min_power * sc.bandwidth(), 0.0),
                    })
                }
                RmScResult::Solved(sol) => {
                    kv(&mut diag, "status", "solved");
                    kv(
                        &mut diag,
                        "mode",
                        format!("{:?}", sol.mode.expect("rm solutions carry a mode")),
                    );
                    if let Some(b) = sol.best_user {
                        kv(&mut diag, "best_user", sc.users_of(0)[b]);
                    }
                    kv(&mut diag, "ties_perturbed", sol.ties_perturbed);
                    let alloc = from_single_cell(sc, &sol);
                    let trace = single_trace(sol.total_power() * sc.bandwidth(), sol.sum_rate());
                    Ok(solved_report(alg, sc, alloc, 0, diag, trace))
                }
            }
        }
        Algorithm::DtapcPm | Algorithm::OpvPm => {
            let out = if alg == Algorithm::DtapcPm {
                dtapc_pm(sc, &pm_opts)?
            } else {
                opv_pm(sc, &pm_opts)?
            };
            match out {
                PmOutcome::Infeasible(inf) => {
                    kv(&mut diag, "status", "infeasible");
                    Ok(infeasible_report(alg, sc, &inf, diag))
                }
                PmOutcome::Solved(sol) => {
                    kv(&mut diag, "status", "solved");
                    kv(&mut diag, "residual", num(sol.residual));
                    if !sol.lambda.is_empty() {
                        kv(&mut diag, "lambda", list(&sol.lambda));
                    }
                    let trace = pm_trace(&sol.trace, sc.cell_count());
                    Ok(solved_report(
                        alg,
                        sc,
                        sol.allocation,
                        sol.iterations,
                        diag,
                        trace,
                    ))
                }
            }
        }
        Algorithm::DtapcRm => match dtapc_rm(sc, &cfg.solver.rm_options())? {
            RmOutcome::Infeasible(inf) => {
                kv(&mut diag, "status", "infeasible");
                Ok(infeasible_report(alg, sc, &inf, diag))
            }
            RmOutcome::Solved(sol) => {
                kv(&mut diag, "status", "solved");
                kv(&mut diag, "converged", sol.converged);
                kv(&mut diag, "start", sol.start);
                kv(&mut diag, "start_sum_rates_bps", list(&sol.start_sum_rates));
                kv(&mut diag, "skipped_updates", sol.skipped_updates);
                kv(&mut diag, "rejected_updates", sol.rejected_updates);
                kv(
                    &mut diag,
                    "achieved_sum_rate_bps",
                    num(sol.achieved_rates.iter().sum()),
                );
                let broken: Vec<String> = sol
                    .compliance
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.holds())
                    .map(|(i, _)| i.to_string())
                    .collect();
                kv(
                    &mut diag,
                    "structure_violations",
                    if broken.is_empty() {
                        "none".into()
                    } else {
                        broken.join(" ")
                    },
                );
                let trace = rm_trace(&sol);
                Ok(solved_report(
                    alg,
                    sc,
                    sol.allocation,
                    sol.sweeps,
                    diag,
                    trace,
                ))
            }
        },
    }
}

/// Runs the configured algorithm and writes `scenario.txt`, `solution.txt`
/// (when solved), `diagnostics.txt` and `trace.csv` into the output
/// directory. Returns the exit code.
pub fn cmd_run(cfg: &Config) -> Result<u8, CliError> {
    let sc = build_scenario(cfg)?;
    let report = solve(cfg.algorithm, &sc, cfg)?;
    let dir = &cfg.out_dir;
    create_dir(dir)?;
    write_file(&dir.join("scenario.txt"), &write_scenario(&sc))?;
    if let Some(alloc) = &report.allocation {
        write_file(&dir.join("solution.txt"), &write_allocation(alloc))?;
    }
    write_file(&dir.join("diagnostics.txt"), &report.diagnostics_text())?;
    write_file(&dir.join("trace.csv"), &report.trace_csv)?;
    Ok(match report.status {
        Status::Solved => EXIT_OK,
        Status::Infeasible => EXIT_INFEASIBLE,
    })
}
