//! Uniform-power baseline (OPV-PM).
//!
//! Every base station uses one power density for all of its users and runs at
//! full load. Given the other cells' powers, cell `i` picks the smallest `p_i`
//! with `Σ_j D_ij / (B·log₂(1 + p_i·g_ij/I_ij)) = 1`; the outer loop is the
//! same fixed-point iteration as DTAPC-PM.

use std::f64::consts::LN_2;

use crate::error::SolveError;
use crate::kernels::{bisect_monotone, Bracket};
use crate::model::{Allocation, NetworkScenario};
use crate::pm::{
    cell_interference, infeasible_from_run, over_cap, run_fixed_point, FixedPointRun, PmOptions,
    PmOutcome, PmSolution, RunStatus,
};

/// Multiple of the cap at which a cell's power search gives up.
pub const OPV_STRESS_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct OpvCell {
    /// Uniform power density, W/Hz.
    pub power: f64,
    /// Loads at `power`, in the order of `sc.users_of(i)`.
    pub load: Vec<f64>,
    /// Even `OPV_STRESS_FACTOR × cap` cannot bring the load down to 1;
    /// `power` is that bound.
    pub stressed: bool,
}

fn loads_at(p: f64, c: &[f64], demands: &[f64], kappa: f64) -> Vec<f64> {
    c.iter()
        .zip(demands)
        .map(|(ci, d)| kappa * d / (p * ci).ln_1p())
        .collect()
}

/// Cell `i`'s uniform power with the other cells fixed at `q`.
pub fn per_cell_opv(sc: &NetworkScenario, i: usize, q: &[f64]) -> Result<OpvCell, SolveError> {
    let users = sc.users_of(i);
    let interference = cell_interference(sc, i, q);
    let c: Vec<f64> = users
        .iter()
        .zip(&interference)
        .map(|(&u, ii)| sc.gain(i, u) / ii)
        .collect();
    let demands: Vec<f64> = users.iter().map(|&u| sc.demand(u)).collect();
    let kappa = LN_2 / sc.bandwidth();
    let bound = OPV_STRESS_FACTOR * sc.power_cap_density(i);
    let m = users.len() as f64;

    let lo = c
        .iter()
        .zip(&demands)
        .map(|(ci, d)| (kappa * d).exp_m1() / ci)
        .fold(0.0, f64::max);
    let hi = c
        .iter()
        .zip(&demands)
        .map(|(ci, d)| (m * kappa * d).exp_m1() / ci)
        .fold(0.0, f64::max);

    let total_load = |p: f64| loads_at(p, &c, &demands, kappa).iter().sum::<f64>();
    if lo >= bound || total_load(bound) > 1.0 {
        return Ok(OpvCell {
            power: bound,
            load: loads_at(bound, &c, &demands, kappa),
            stressed: true,
        });
    }
    let power = if lo < hi {
        bisect_monotone(
            |p| total_load(p) - 1.0,
            &Bracket::positive(lo, hi.min(bound)),
        )?
    } else {
        lo
    };
    Ok(OpvCell {
        power,
        load: loads_at(power, &c, &demands, kappa),
        stressed: false,
    })
}

/// Runs the uniform-power fixed point from `q⁽⁰⁾ = Q^max`. The returned
/// solution's `lambda` is empty.
pub fn opv_pm(sc: &NetworkScenario, opts: &PmOptions) -> Result<PmOutcome, SolveError> {
    let run = run_fixed_point(sc, sc.power_cap_densities(), opts, false, |i, q| {
        per_cell_opv(sc, i, q).map(|cell| cell.load.iter().sum::<f64>() * cell.power)
    })?;
    if run.status != RunStatus::Converged {
        return Ok(PmOutcome::Infeasible(infeasible_from_run(sc, run)));
    }
    let kappa = LN_2 / sc.bandwidth();
    let mut allocation = Allocation::zeros(sc.user_count());
    for i in 0..sc.cell_count() {
        let cell = per_cell_opv(sc, i, &run.q)?;
        let interference = cell_interference(sc, i, &run.q);
        for (k, &u) in sc.users_of(i).iter().enumerate() {
            let m = cell.load[k];
            allocation.load[u] = m;
            allocation.avg_power[u] = m * cell.power;
            allocation.rate[u] = m * (cell.power * sc.gain(i, u) / interference[k]).ln_1p() / kappa;
        }
    }
    let q = allocation.cell_powers(sc);
    if !over_cap(sc, q.as_slice()).is_empty() {
        return Ok(PmOutcome::Infeasible(infeasible_from_run(
            sc,
            FixedPointRun { q: q.0, ..run },
        )));
    }
    Ok(PmOutcome::Solved(PmSolution {
        allocation,
        q,
        lambda: Vec::new(),
        iterations: run.iterations,
        residual: run.residual,
        trace: run.trace,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_scenario, validate_allocation, ScenarioGenConfig};
    use crate::pm::{dtapc_pm, per_cell_pm};

    const NOISE: f64 = 3.981071705534972e-21;
    const B: f64 = 18e6;

    #[test]
    fn one_user_matches_closed_form_and_pm() {
        let sc = NetworkScenario::new(
            vec![vec![1e-10, 3e-12], vec![2e-12, 5e-11]],
            vec![0, 1],
            vec![1e6, 2e6],
            vec![10.0, 10.0],
            NOISE,
            B,
        )
        .unwrap();
        let q = [0.0, 1e-12];
        let cell = per_cell_opv(&sc, 0, &q).unwrap();
        let interference = NOISE + 1e-12 * 2e-12;
        let expected = interference * (2f64.powf(1e6 / B) - 1.0) / 1e-10;
        assert!((cell.power / expected - 1.0).abs() < 1e-12);
        let pm = per_cell_pm(&sc, 0, &q).unwrap();
        assert!((cell.power / pm.cell_power - 1.0).abs() < 1e-12);

        let a = opv_pm(&sc, &PmOptions::default()).unwrap();
        let b = dtapc_pm(&sc, &PmOptions::default()).unwrap();
        for (x, y) in a
            .solution()
            .unwrap()
            .q
            .0
            .iter()
            .zip(&b.solution().unwrap().q.0)
        {
            assert!((x / y - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn two_identical_users() {
        let (g, d) = (4e-11, 1.5e6);
        let sc = NetworkScenario::single_cell(vec![g, g], vec![d, d], 1.0, NOISE, B).unwrap();
        let cell = per_cell_opv(&sc, 0, &[0.0]).unwrap();
        let expected = NOISE * (2f64.powf(2.0 * d / B) - 1.0) / g;
        assert!((cell.power / expected - 1.0).abs() < 1e-12);
        let out = opv_pm(&sc, &PmOptions::default()).unwrap();
        assert!((out.solution().unwrap().q.0[0] / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_users_fill_frame() {
        let sc = NetworkScenario::single_cell(
            vec![4e-11, 1e-12, 7e-10],
            vec![1e6, 2e6, 5e5],
            1.0,
            NOISE,
            B,
        )
        .unwrap();
        let cell = per_cell_opv(&sc, 0, &[0.0]).unwrap();
        assert!(!cell.stressed);
        assert!((cell.load.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dominated_by_dtapc() {
        let sc = generate_scenario(&ScenarioGenConfig {
            sites: 1,
            users_per_cell: 4,
            seed: 21,
            ..ScenarioGenConfig::default()
        })
        .unwrap();
        let opv = opv_pm(&sc, &PmOptions::default()).unwrap();
        let dtapc = dtapc_pm(&sc, &PmOptions::default()).unwrap();
        let (opv, dtapc) = (opv.solution().unwrap(), dtapc.solution().unwrap());
        assert!(validate_allocation(&opv.allocation, &sc, 1e-6).all_satisfied());
        for (x, y) in opv.q.0.iter().zip(&dtapc.q.0) {
            assert!(x >= y);
        }
        assert!(opv.sum_power_watts(&sc) > dtapc.sum_power_watts(&sc));
    }

    #[test]
    fn stressed_cell_returns_bound() {
        let sc = NetworkScenario::single_cell(vec![1e-16, 1e-16], vec![1e8, 1e8], 1.0, NOISE, B)
            .unwrap();
        let cell = per_cell_opv(&sc, 0, &[0.0]).unwrap();
        assert!(cell.stressed);
        assert_eq!(cell.power, OPV_STRESS_FACTOR * (1.0 / B));
    }
}
