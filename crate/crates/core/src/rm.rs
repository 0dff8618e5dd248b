//! Multi-cell sum-rate maximisation (DTAPC-RM).
//!
//! Cells are re-optimised one at a time with every other cell frozen. Cell
//! `i` maximises its own sum rate under its demands and a coupled power cap:
//! the largest `q_i` that leaves every foreign user's current rate achievable.
//! With the users' effective gains `ḡ_ij = g_ij / I_ij`, the per-cell problem
//! has the single-cell structure and is solved in closed form.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::SolveError;
use crate::model::{
    cell_power, received_interference, recompute_rates, Allocation, NetworkScenario,
};
use crate::pm::{dtapc_pm, per_cell_pm, PmInfeasible, PmOptions, PmOutcome};
use crate::single_cell::{rm_sc, RmMode, RmScResult, SingleCellProblem};

/// Relative tolerance for "rate equals demand" in the compliance flags.
pub const DEMAND_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RmOptions {
    /// Stop once a sweep improves the sum rate by at most this fraction.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Number of starts. Start 0 is the given initial point; start `s > 0`
    /// is `capped_start` with seeded factors in `[0.5, 1]`, or the initial
    /// point again when that start is infeasible.
    pub multistart: usize,
    pub seed: u64,
    /// Options for the power-minimising initialisation.
    pub pm: PmOptions,
}

impl Default for RmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 500,
            multistart: 8,
            seed: 0,
            pm: PmOptions::default(),
        }
    }
}

/// `g_iu / I_u` for user `u` served by cell `i`.
pub fn effective_gain(alloc: &Allocation, sc: &NetworkScenario, user: usize) -> f64 {
    sc.gain(sc.serving_cell(user), user) / received_interference(alloc, sc, user)
}

fn all_interference(sc: &NetworkScenario, q: &[f64]) -> Vec<f64> {
    (0..sc.user_count())
        .map(|u| sc.interference_plus_noise(u, q))
        .collect()
}

/// Largest power density cell `i` may use without pushing any foreign user
/// below its stored rate, capped at `P_i^max / B`.
///
/// For foreign user `l` of cell `k` the bound is
///
/// ```text
///   P̄_kli = p̄_kl·g_kl / (m_kl·g_il·(2^{r_kl/(B·m_kl)} − 1)) − E_kli / g_il
/// ```
///
/// with `E_kli` the interference-plus-noise at `l` excluding cell `i`. Users
/// with zero load or rate impose no bound.
pub fn coupled_power_cap(alloc: &Allocation, sc: &NetworkScenario, i: usize) -> f64 {
    let q = alloc.cell_powers(sc);
    let interference = all_interference(sc, q.as_slice());
    coupled_cap_with(alloc, sc, i, q.as_slice(), &interference)
}

fn coupled_cap_with(
    alloc: &Allocation,
    sc: &NetworkScenario,
    i: usize,
    q: &[f64],
    interference: &[f64],
) -> f64 {
    let kappa = LN_2 / sc.bandwidth();
    let mut cap = sc.power_cap_density(i);
    for (l, &i_l) in interference.iter().enumerate() {
        let k = sc.serving_cell(l);
        let (m, p, r) = (alloc.load[l], alloc.avg_power[l], alloc.rate[l]);
        if k == i || m <= 0.0 || r <= 0.0 {
            continue;
        }
        let g_il = sc.gain(i, l);
        let e = i_l - q[i] * g_il;
        let bound = p * sc.gain(k, l) / (m * g_il * (kappa * r / m).exp_m1()) - e / g_il;
        cap = cap.min(bound);
    }
    cap
}

/// Structural checks of a cell's last accepted update.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCompliance {
    /// The cell was re-optimised at least once.
    pub updated: bool,
    pub mode: Option<RmMode>,
    /// `Σ m = 1` after the update.
    pub full_load: bool,
    /// Every user except the best-effective-gain user sits at its demand,
    /// and the best user is at or above it.
    pub surplus_at_best: bool,
    /// Global index of the best-effective-gain user at that update.
    pub best_user: Option<usize>,
}

impl CellCompliance {
    fn untouched() -> Self {
        Self {
            updated: false,
            mode: None,
            full_load: false,
            surplus_at_best: false,
            best_user: None,
        }
    }

    pub fn holds(&self) -> bool {
        !self.updated || (self.full_load && self.surplus_at_best)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellRmOutcome {
    /// Accepted update.
    Updated {
        load: Vec<f64>,
        avg_power: Vec<f64>,
        rate: Vec<f64>,
        compliance: CellCompliance,
    },
    /// The coupled cap is below the power the demands need.
    SkippedInfeasible,
    /// The update would have lowered the cell's sum rate.
    Rejected,
}

/// Re-optimises cell `i` given everything else in `alloc`, with the cap
/// optionally tightened to `extra_cap`.
pub fn per_cell_rm(
    alloc: &Allocation,
    sc: &NetworkScenario,
    i: usize,
    extra_cap: Option<f64>,
) -> Result<CellRmOutcome, SolveError> {
    let q = alloc.cell_powers(sc);
    let interference = all_interference(sc, q.as_slice());
    let mut cap = coupled_cap_with(alloc, sc, i, q.as_slice(), &interference);
    if let Some(extra) = extra_cap {
        cap = cap.min(extra);
    }
    if !(cap > 0.0) {
        return Ok(CellRmOutcome::SkippedInfeasible);
    }
    let users = sc.users_of(i);
    let gains: Vec<f64> = users.iter().map(|&u| sc.gain(i, u)).collect();
    let noise: Vec<f64> = users.iter().map(|&u| interference[u]).collect();
    let demands: Vec<f64> = users.iter().map(|&u| sc.demand(u)).collect();
    let prob = SingleCellProblem::with_interference(
        gains.clone(),
        demands.clone(),
        noise.clone(),
        sc.bandwidth(),
        cap,
    )?;
    let mut sol = match rm_sc(&prob)? {
        RmScResult::Solved(sol) => sol,
        RmScResult::Infeasible { .. } => return Ok(CellRmOutcome::SkippedInfeasible),
    };

    let kappa = LN_2 / sc.bandwidth();
    let ranked_best = (0..users.len())
        .max_by(|&a, &b| {
            (gains[a] / noise[a])
                .total_cmp(&(gains[b] / noise[b]))
                .then(b.cmp(&a))
        })
        .expect("cells are nonempty");
    let best = sol.best_user.unwrap_or(ranked_best);
    // keep the total at or under the cap so no foreign user dips below its rate
    let excess = sol.total_power() - cap;
    if excess > 0.0 && sol.mode == Some(RmMode::Surplus) {
        let j = best;
        sol.avg_power[j] = (sol.avg_power[j] - excess).max(0.0);
        let s = sol.avg_power[j] * gains[j] / (noise[j] * sol.load[j]);
        sol.rate[j] = sol.load[j] * s.ln_1p() / kappa;
    }

    let old: f64 = users.iter().map(|&u| alloc.rate[u]).sum();
    let new = sol.sum_rate();
    if new < old {
        return Ok(CellRmOutcome::Rejected);
    }

    let full_load = (sol.total_load() - 1.0).abs() <= DEMAND_REL_TOL;
    let at_demand = |j: usize| ((sol.rate[j] - demands[j]) / demands[j]).abs() <= DEMAND_REL_TOL;
    let surplus_at_best = best == ranked_best
        && (0..users.len()).all(|j| j == best || at_demand(j))
        && sol.rate[best] >= demands[best] * (1.0 - DEMAND_REL_TOL);
    Ok(CellRmOutcome::Updated {
        compliance: CellCompliance {
            updated: true,
            mode: sol.mode,
            full_load,
            surplus_at_best,
            best_user: Some(users[best]),
        },
        load: sol.load,
        avg_power: sol.avg_power,
        rate: sol.rate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmSolution {
    /// Loads, powers and the algorithm's stored rates.
    pub allocation: Allocation,
    /// Rates recomputed from the final loads and powers. Each is at least the
    /// stored rate.
    pub achieved_rates: Vec<f64>,
    /// Stored sum rate after each sweep; entry 0 is the initial point.
    pub sum_rate_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub compliance: Vec<CellCompliance>,
    pub skipped_updates: usize,
    pub rejected_updates: usize,
    /// Which start produced this solution.
    pub start: usize,
    /// Final stored sum rate of every start.
    pub start_sum_rates: Vec<f64>,
}

impl RmSolution {
    pub fn sum_rate(&self) -> f64 {
        self.allocation.sum_rate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RmOutcome {
    Solved(RmSolution),
    /// The demands cannot be met, so no feasible start exists.
    Infeasible(PmInfeasible),
}

impl RmOutcome {
    pub fn solution(&self) -> Option<&RmSolution> {
        match self {
            RmOutcome::Solved(s) => Some(s),
            RmOutcome::Infeasible(_) => None,
        }
    }
}

/// Runs DTAPC-RM starting from the DTAPC-PM solution.
pub fn dtapc_rm(sc: &NetworkScenario, opts: &RmOptions) -> Result<RmOutcome, SolveError> {
    match dtapc_pm(sc, &opts.pm)? {
        PmOutcome::Infeasible(inf) => Ok(RmOutcome::Infeasible(inf)),
        PmOutcome::Solved(pm) => {
            let mut init = pm.allocation;
            init.rate = recompute_rates(&init, sc);
            dtapc_rm_from(sc, init, opts).map(RmOutcome::Solved)
        }
    }
}

/// Runs DTAPC-RM from a feasible allocation whose rates are achievable, plus
/// the perturbed starts, and keeps the best (lowest index on ties).
pub fn dtapc_rm_from(
    sc: &NetworkScenario,
    init: Allocation,
    opts: &RmOptions,
) -> Result<RmSolution, SolveError> {
    if init.user_count() != sc.user_count() {
        return Err(SolveError::Numerics(
            "initial allocation has the wrong size".into(),
        ));
    }
    let starts = opts.multistart.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let factors: Vec<Option<Vec<f64>>> = (0..starts)
        .map(|s| {
            (s > 0).then(|| {
                (0..sc.cell_count())
                    .map(|_| rng.random_range(0.5..=1.0))
                    .collect()
            })
        })
        .collect();
    let runs: Vec<Result<RmSolution, SolveError>> = factors
        .par_iter()
        .enumerate()
        .map(|(s, f)| {
            let start = match f {
                Some(f) => capped_start(sc, f)?.unwrap_or_else(|| init.clone()),
                None => init.clone(),
            };
            run_sweeps(sc, start, opts, s)
        })
        .collect();
    let runs: Vec<RmSolution> = runs.into_iter().collect::<Result<_, _>>()?;
    let start_sum_rates: Vec<f64> = runs.iter().map(RmSolution::sum_rate).collect();
    let mut best = 0;
    for (s, r) in start_sum_rates.iter().enumerate() {
        if *r > start_sum_rates[best] {
            best = s;
        }
    }
    let mut out = runs.into_iter().nth(best).expect("at least one start");
    out.start_sum_rates = start_sum_rates;
    Ok(out)
}

/// Feasible allocation in which cell `i` transmits exactly `factors[i]` of
/// its cap: the minimum-power loads under that interference, with the cell's
/// powers scaled up to fill it. `None` if some cell cannot meet its demands
/// at that power.
pub fn capped_start(
    sc: &NetworkScenario,
    factors: &[f64],
) -> Result<Option<Allocation>, SolveError> {
    let q: Vec<f64> = (0..sc.cell_count())
        .map(|i| factors[i] * sc.power_cap_density(i))
        .collect();
    let mut alloc = Allocation::zeros(sc.user_count());
    for (i, &target) in q.iter().enumerate() {
        let cell = per_cell_pm(sc, i, &q)?;
        if !(cell.cell_power <= target) {
            return Ok(None);
        }
        let scale = target / cell.cell_power;
        for (k, &u) in cell.users.iter().enumerate() {
            alloc.load[u] = cell.load[k];
            alloc.avg_power[u] = cell.avg_power[k] * scale;
        }
    }
    alloc.rate = recompute_rates(&alloc, sc);
    Ok(Some(alloc))
}

fn run_sweeps(
    sc: &NetworkScenario,
    mut alloc: Allocation,
    opts: &RmOptions,
    start: usize,
) -> Result<RmSolution, SolveError> {
    let cells = sc.cell_count();
    let mut compliance = vec![CellCompliance::untouched(); cells];
    let mut trace = vec![alloc.sum_rate()];
    let mut skipped = 0;
    let mut rejected = 0;
    let mut converged = false;
    let mut sweeps = 0;
    for sweep in 1..=opts.max_sweeps {
        sweeps = sweep;
        for i in 0..cells {
            match per_cell_rm(&alloc, sc, i, None)? {
                CellRmOutcome::Updated {
                    load,
                    avg_power,
                    rate,
                    compliance: flags,
                } => {
                    for (k, &u) in sc.users_of(i).iter().enumerate() {
                        alloc.load[u] = load[k];
                        alloc.avg_power[u] = avg_power[k];
                        alloc.rate[u] = rate[k];
                    }
                    compliance[i] = flags;
                }
                CellRmOutcome::SkippedInfeasible => skipped += 1,
                CellRmOutcome::Rejected => rejected += 1,
            }
        }
        let prev = *trace.last().expect("trace starts nonempty");
        let now = alloc.sum_rate();
        trace.push(now);
        if cells == 1 || (now - prev) <= opts.tol * prev.abs() {
            converged = true;
            break;
        }
    }
    debug_assert!((0..cells).all(|i| cell_power(&alloc, sc, i).is_finite()));
    Ok(RmSolution {
        achieved_rates: recompute_rates(&alloc, sc),
        allocation: alloc,
        sum_rate_trace: trace,
        sweeps,
        converged,
        compliance,
        skipped_updates: skipped,
        rejected_updates: rejected,
        start,
        start_sum_rates: Vec::new(),
    })
}
