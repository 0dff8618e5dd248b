//! Demand sweeps: every configured algorithm at every demand of the grid.

use std::fmt::Write as _;

use rayon::prelude::*;
use tapc_core::model::NetworkScenario;

use crate::config::{Algorithm, Config};
use crate::run::solve;
use crate::{build_scenario, create_dir, num, write_file, CliError, EXIT_OK};

pub const SWEEP_HEADER: &str =
    "# tapc-sweep v1\ndemand_bps,algorithm,status,sum_power_w,sum_rate_bps,iterations\n";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub demand: f64,
    pub algorithm: Algorithm,
    /// `solved`, `infeasible` or `error`.
    pub status: &'static str,
    pub sum_power_w: Option<f64>,
    pub sum_rate_bps: Option<f64>,
    pub iterations: Option<usize>,
}

fn point(sc: &NetworkScenario, cfg: &Config, demand: f64, alg: Algorithm) -> SweepRow {
    let report = sc
        .with_uniform_demand(demand)
        .map_err(CliError::from)
        .and_then(|s| solve(alg, &s, cfg));
    match report {
        Ok(r) => SweepRow {
            demand,
            algorithm: alg,
            status: r.status.name(),
            sum_power_w: r.sum_power_w,
            sum_rate_bps: r.sum_rate_bps,
            iterations: Some(r.iterations),
        },
        Err(_) => SweepRow {
            demand,
            algorithm: alg,
            status: "error",
            sum_power_w: None,
            sum_rate_bps: None,
            iterations: None,
        },
    }
}

/// Rows ordered by demand index, then by algorithm as listed in the config.
pub fn sweep_rows(sc: &NetworkScenario, cfg: &Config) -> Result<Vec<SweepRow>, CliError> {
    let algorithms = &cfg.sweep.algorithms;
    if sc.cell_count() != 1 {
        if let Some(a) = algorithms.iter().find(|a| a.single_cell_only()) {
            return Err(CliError::Config(format!(
                "{a} needs a single-cell scenario, got {} cells",
                sc.cell_count()
            )));
        }
    }
    let jobs: Vec<(f64, Algorithm)> = cfg
        .sweep
        .grid()
        .into_iter()
        .flat_map(|d| algorithms.iter().map(move |a| (d, *a)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.sweep.workers)
        .build()
        .map_err(|e| CliError::Config(format!("sweep.workers: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(d, a)| point(sc, cfg, d, a))
            .collect()
    }))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(r.demand),
            r.algorithm,
            r.status,
            opt(r.sum_power_w),
            opt(r.sum_rate_bps),
            r.iterations.map(|n| n.to_string()).unwrap_or_default()
        );
    }
    s
}

/// Writes `sweep.csv` into the output directory. Infeasible or failing
/// points are recorded in their row; the exit code is 0 either way.
pub fn cmd_sweep(cfg: &Config) -> Result<u8, CliError> {
    let sc = build_scenario(cfg)?;
    let rows = sweep_rows(&sc, cfg)?;
    create_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join("sweep.csv"), &sweep_csv(&rows))?;
    Ok(EXIT_OK)
}
