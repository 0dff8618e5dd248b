//! Multi-cell sum-power minimisation (DTAPC-PM).
//!
//! Each cell solves its own power-minimisation problem with the other cells'
//! average powers `q₋ᵢ` frozen. The resulting map `q ↦ v(q)` is a standard
//! interference function, so iterating it from any start converges to its
//! unique fixed point whenever one exists. The instance is feasible exactly
//! when that fixed point lies under the power caps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::SolveError;
use crate::model::{Allocation, CellPowerVector, NetworkScenario};
use crate::single_cell::{pm_sc, Multipliers, SingleCellProblem};

/// Relative slack allowed when comparing a converged cell power to its cap.
pub const CAP_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateSchedule {
    /// Every cell sees the previous iterate.
    #[default]
    Jacobi,
    /// Cells are updated in index order and see the freshest values.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmOptions {
    /// Relative tolerance on the cell-power vector.
    pub tol: f64,
    pub max_iter: usize,
    pub schedule: UpdateSchedule,
    /// Iteration stops as divergent once some `q_i` exceeds this multiple of
    /// its cap.
    pub divergence_factor: f64,
    /// Evaluate Jacobi sweeps on the rayon pool.
    pub parallel: bool,
}

impl Default for PmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
            schedule: UpdateSchedule::Jacobi,
            divergence_factor: 1e3,
            parallel: true,
        }
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PmTraceRow {
    pub iteration: usize,
    pub q: Vec<f64>,
    /// `‖q⁽ⁿ⁾ − q⁽ⁿ⁻¹⁾‖∞ / ‖q⁽ⁿ⁾‖∞`; absent for the initial point.
    pub residual: Option<f64>,
}

/// Result of a single cell's update.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPmUpdate {
    /// Global indices of the cell's users; the vectors below follow this order.
    pub users: Vec<usize>,
    pub load: Vec<f64>,
    pub avg_power: Vec<f64>,
    pub rate: Vec<f64>,
    pub lambda: f64,
    /// `v_i(q)`.
    pub cell_power: f64,
}

/// Interference-plus-noise densities seen by cell `i`'s users under `q`.
pub fn cell_interference(sc: &NetworkScenario, i: usize, q: &[f64]) -> Vec<f64> {
    sc.users_of(i)
        .iter()
        .map(|&u| sc.interference_plus_noise(u, q))
        .collect()
}

/// Cell `i`'s power-minimising allocation with the other cells fixed at `q`.
/// `q[i]` is ignored.
pub fn per_cell_pm(sc: &NetworkScenario, i: usize, q: &[f64]) -> Result<CellPmUpdate, SolveError> {
    let users = sc.users_of(i).to_vec();
    let prob = SingleCellProblem::with_interference(
        users.iter().map(|&u| sc.gain(i, u)).collect(),
        users.iter().map(|&u| sc.demand(u)).collect(),
        cell_interference(sc, i, q),
        sc.bandwidth(),
        sc.power_cap_density(i),
    )?;
    let sol = pm_sc(&prob)?;
    let lambda = match sol.multipliers {
        Multipliers::Pm { lambda } => lambda,
        Multipliers::Rm { .. } => unreachable!("pm_sc returns load multipliers"),
    };
    let cell_power = sol.total_power();
    Ok(CellPmUpdate {
        users,
        load: sol.load,
        avg_power: sol.avg_power,
        rate: sol.rate,
        lambda,
        cell_power,
    })
}

/// The interference function `v(q)`.
pub fn interference_map(sc: &NetworkScenario, q: &[f64]) -> Result<Vec<f64>, SolveError> {
    (0..sc.cell_count())
        .map(|i| per_cell_pm(sc, i, q).map(|c| c.cell_power))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RunStatus {
    Converged,
    Diverged,
    MaxIter,
    /// A step rose in every component while some cell was over its cap. The
    /// iterates keep rising, so the fixed point (if any) is over the cap too.
    RisingOverCap,
    /// A step fell in every component with every cell under its cap, so the
    /// fixed point is under the cap. Only reported in verdict mode.
    FallingUnderCap,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FixedPointRun {
    pub q: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub status: RunStatus,
    pub trace: Vec<PmTraceRow>,
}

/// Iterates `q_i ← update(i, q)` until the relative step is below `tol` and
/// the observed contraction rate implies the remaining error is too.
///
/// With `Δₙ = ‖q⁽ⁿ⁾ − q⁽ⁿ⁻¹⁾‖∞` and `ρ = Δₙ/Δₙ₋₁ < 1`, the distance to the
/// fixed point is about `Δₙ·ρ/(1 − ρ)`; near the feasibility edge `ρ → 1` and
/// a small step alone says little.
///
/// The update is monotone, so a step that moves every component the same way
/// fixes the direction of all later steps. With `verdict_only` the run stops
/// as soon as such a step settles feasibility either way.
pub(crate) fn run_fixed_point<F>(
    sc: &NetworkScenario,
    q0: Vec<f64>,
    opts: &PmOptions,
    verdict_only: bool,
    update: F,
) -> Result<FixedPointRun, SolveError>
where
    F: Fn(usize, &[f64]) -> Result<f64, SolveError> + Sync,
{
    let cells = sc.cell_count();
    let caps = sc.power_cap_densities();
    let mut q = q0;
    let mut trace = vec![PmTraceRow {
        iteration: 0,
        q: q.clone(),
        residual: None,
    }];
    let mut prev_delta = f64::NAN;
    let mut residual = f64::INFINITY;
    for n in 1..=opts.max_iter {
        let next: Vec<f64> = match opts.schedule {
            UpdateSchedule::Jacobi if opts.parallel => (0..cells)
                .into_par_iter()
                .map(|i| update(i, &q))
                .collect::<Result<_, _>>()?,
            UpdateSchedule::Jacobi => (0..cells)
                .map(|i| update(i, &q))
                .collect::<Result<_, _>>()?,
            UpdateSchedule::GaussSeidel => {
                let mut fresh = q.clone();
                for i in 0..cells {
                    fresh[i] = update(i, &fresh)?;
                }
                fresh
            }
        };
        let delta = next
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let rising = next.iter().zip(&q).all(|(a, b)| a >= b);
        let falling = next.iter().zip(&q).all(|(a, b)| a <= b);
        let under_cap = next
            .iter()
            .zip(&caps)
            .all(|(qi, cap)| *qi <= cap * (1.0 + CAP_REL_TOL));
        let scale = next.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        residual = if scale > 0.0 { delta / scale } else { 0.0 };
        q = next;
        trace.push(PmTraceRow {
            iteration: n,
            q: q.clone(),
            residual: Some(residual),
        });

        if q.iter()
            .zip(&caps)
            .any(|(qi, cap)| !(*qi < opts.divergence_factor * cap))
        {
            return Ok(FixedPointRun {
                q,
                iterations: n,
                residual,
                status: RunStatus::Diverged,
                trace,
            });
        }

        let certified = if rising && !under_cap {
            Some(RunStatus::RisingOverCap)
        } else if verdict_only && falling && under_cap {
            Some(RunStatus::FallingUnderCap)
        } else {
            None
        };
        if let Some(status) = certified {
            return Ok(FixedPointRun {
                q,
                iterations: n,
                residual,
                status,
                trace,
            });
        }

        let rho = delta / prev_delta;
        let settled = rho < 1.0 && residual * rho / (1.0 - rho) <= opts.tol;
        if residual <= 64.0 * f64::EPSILON || (residual <= opts.tol && settled) {
            return Ok(FixedPointRun {
                q,
                iterations: n,
                residual,
                status: RunStatus::Converged,
                trace,
            });
        }
        prev_delta = delta;
    }
    Ok(FixedPointRun {
        q,
        iterations: opts.max_iter,
        residual,
        status: RunStatus::MaxIter,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibilityReason {
    /// The iteration converged but some cell needs more than its cap.
    CapExceeded,
    /// Some cell power grew past the divergence guard.
    Diverged,
    /// The iteration limit was hit first.
    NotConverged,
}

/// A cell whose power is over its cap.
#[derive(Debug, Clone, PartialEq)]
pub struct CellExcess {
    pub cell: usize,
    /// Cell power density, W/Hz.
    pub power: f64,
    /// Cap density, W/Hz.
    pub cap: f64,
}

impl CellExcess {
    /// `power / cap`.
    pub fn ratio(&self) -> f64 {
        self.power / self.cap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmSolution {
    pub allocation: Allocation,
    /// Cell powers of `allocation`.
    pub q: CellPowerVector,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub trace: Vec<PmTraceRow>,
}

impl PmSolution {
    pub fn sum_power_watts(&self, sc: &NetworkScenario) -> f64 {
        self.q.total_watts(sc.bandwidth())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmInfeasible {
    pub reason: InfeasibilityReason,
    /// Cells above their cap at the last iterate (empty if none).
    pub offending: Vec<CellExcess>,
    pub iterations: usize,
    pub q: Vec<f64>,
    pub trace: Vec<PmTraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PmOutcome {
    Solved(PmSolution),
    Infeasible(PmInfeasible),
}

impl PmOutcome {
    pub fn solution(&self) -> Option<&PmSolution> {
        match self {
            PmOutcome::Solved(s) => Some(s),
            PmOutcome::Infeasible(_) => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, PmOutcome::Solved(_))
    }

    pub fn iterations(&self) -> usize {
        match self {
            PmOutcome::Solved(s) => s.iterations,
            PmOutcome::Infeasible(f) => f.iterations,
        }
    }

    pub fn trace(&self) -> &[PmTraceRow] {
        match self {
            PmOutcome::Solved(s) => &s.trace,
            PmOutcome::Infeasible(f) => &f.trace,
        }
    }
}

pub(crate) fn over_cap(sc: &NetworkScenario, q: &[f64]) -> Vec<CellExcess> {
    q.iter()
        .enumerate()
        .filter_map(|(i, &power)| {
            let cap = sc.power_cap_density(i);
            (!(power <= cap * (1.0 + CAP_REL_TOL))).then_some(CellExcess {
                cell: i,
                power,
                cap,
            })
        })
        .collect()
}

pub(crate) fn infeasible_from_run(sc: &NetworkScenario, run: FixedPointRun) -> PmInfeasible {
    let reason = match run.status {
        RunStatus::Converged | RunStatus::RisingOverCap | RunStatus::FallingUnderCap => {
            InfeasibilityReason::CapExceeded
        }
        RunStatus::Diverged => InfeasibilityReason::Diverged,
        RunStatus::MaxIter => InfeasibilityReason::NotConverged,
    };
    PmInfeasible {
        reason,
        offending: over_cap(sc, &run.q),
        iterations: run.iterations,
        q: run.q,
        trace: run.trace,
    }
}

/// Runs DTAPC-PM from `q⁽⁰⁾ = Q^max`.
pub fn dtapc_pm(sc: &NetworkScenario, opts: &PmOptions) -> Result<PmOutcome, SolveError> {
    dtapc_pm_from(sc, sc.power_cap_densities(), opts)
}

/// Runs DTAPC-PM from an arbitrary nonnegative start.
pub fn dtapc_pm_from(
    sc: &NetworkScenario,
    q0: Vec<f64>,
    opts: &PmOptions,
) -> Result<PmOutcome, SolveError> {
    if q0.len() != sc.cell_count() || q0.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(SolveError::Numerics(
            "initial cell powers must be finite, nonnegative and one per cell".into(),
        ));
    }
    let run = run_fixed_point(sc, q0, opts, false, |i, q| {
        per_cell_pm(sc, i, q).map(|c| c.cell_power)
    })?;
    if run.status != RunStatus::Converged {
        return Ok(PmOutcome::Infeasible(infeasible_from_run(sc, run)));
    }

    let updates: Vec<CellPmUpdate> = (0..sc.cell_count())
        .map(|i| per_cell_pm(sc, i, &run.q))
        .collect::<Result<_, _>>()?;
    let mut allocation = Allocation::zeros(sc.user_count());
    let mut lambda = Vec::with_capacity(updates.len());
    for upd in &updates {
        for (k, &u) in upd.users.iter().enumerate() {
            allocation.load[u] = upd.load[k];
            allocation.avg_power[u] = upd.avg_power[k];
            allocation.rate[u] = upd.rate[k];
        }
        lambda.push(upd.lambda);
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
        lambda,
        iterations: run.iterations,
        residual: run.residual,
        trace: run.trace,
    }))
}

/// Feasibility verdict without computing the final allocation. Stops at the
/// first step that certifies the answer.
pub fn is_feasible(sc: &NetworkScenario, opts: &PmOptions) -> Result<bool, SolveError> {
    let run = run_fixed_point(sc, sc.power_cap_densities(), opts, true, |i, q| {
        per_cell_pm(sc, i, q).map(|c| c.cell_power)
    })?;
    Ok(match run.status {
        RunStatus::FallingUnderCap => true,
        RunStatus::Converged => over_cap(sc, &run.q).is_empty(),
        RunStatus::Diverged | RunStatus::MaxIter | RunStatus::RisingOverCap => false,
    })
}

/// Largest uniform demand (bit/s) for which DTAPC-PM finds a feasible point,
/// located by geometric bisection to relative width `rel_tol`. Starts from
/// `guess` and expands by factors of two. `None` if no demand in
/// `[guess·2⁻⁶⁰, guess·2⁶⁰]` changes the verdict.
pub fn feasibility_edge(
    sc: &NetworkScenario,
    guess: f64,
    rel_tol: f64,
    opts: &PmOptions,
) -> Result<Option<f64>, SolveError> {
    let feasible = |d: f64| -> Result<bool, SolveError> {
        let scaled = sc.with_uniform_demand(d)?;
        is_feasible(&scaled, opts)
    };
    let (mut lo, mut hi) = (guess, guess);
    if feasible(guess)? {
        let mut found = false;
        for _ in 0..60 {
            hi *= 2.0;
            if !feasible(hi)? {
                found = true;
                break;
            }
            lo = hi;
        }
        if !found {
            return Ok(None);
        }
    } else {
        let mut found = false;
        for _ in 0..60 {
            lo /= 2.0;
            if feasible(lo)? {
                found = true;
                break;
            }
            hi = lo;
        }
        if !found {
            return Ok(None);
        }
    }
    while hi / lo - 1.0 > rel_tol {
        let mid = (lo * hi).sqrt();
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Worst observed margins of the three interference-function axioms.
///
/// Margins are relative and a negative value is a violation: positivity
/// reports `min v_i(q)`, monotonicity `min (v_i(q¹) − v_i(q²))/v_i(q²)` over
/// pairs with `q¹ ≥ q²`, scalability `min (α·v_i(q) − v_i(αq))/(α·v_i(q))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub samples: usize,
    pub min_value: f64,
    pub monotonicity_margin: f64,
    pub scalability_margin: f64,
    pub positivity_violations: usize,
    pub monotonicity_violations: usize,
    pub scalability_violations: usize,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.positivity_violations == 0
            && self.monotonicity_violations == 0
            && self.scalability_violations == 0
    }
}

/// Default slack on the relative monotonicity and scalability margins.
pub const PROPERTY_SLACK: f64 = 1e-10;

/// Samples `q ∈ [0, 2·Q^max]` and checks positivity, monotonicity and
/// scalability of `v`. The first sample is `q = 0` and the first monotonicity
/// pair is an identical pair.
pub fn interference_property_check(
    sc: &NetworkScenario,
    samples: usize,
    seed: u64,
) -> Result<PropertyReport, SolveError> {
    let cells = sc.cell_count();
    let caps = sc.power_cap_densities();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        samples,
        min_value: f64::INFINITY,
        monotonicity_margin: f64::INFINITY,
        scalability_margin: f64::INFINITY,
        positivity_violations: 0,
        monotonicity_violations: 0,
        scalability_violations: 0,
    };
    let rel_min = |hi: &[f64], lo: &[f64], scale: &[f64]| {
        (0..hi.len())
            .map(|i| (hi[i] - lo[i]) / scale[i])
            .fold(f64::INFINITY, f64::min)
    };
    for s in 0..samples {
        let q2: Vec<f64> = if s == 0 {
            vec![0.0; cells]
        } else {
            caps.iter()
                .map(|c| rng.random_range(0.0..=2.0 * c))
                .collect()
        };
        let q1: Vec<f64> = if s == 0 {
            q2.clone()
        } else {
            q2.iter()
                .zip(&caps)
                .map(|(x, c)| x + rng.random_range(0.0..=*c))
                .collect()
        };
        let alpha = rng.random_range(1.0..=10.0f64).max(1.0 + 1e-6);

        let v2 = interference_map(sc, &q2)?;
        let v1 = interference_map(sc, &q1)?;
        let scaled_q: Vec<f64> = q2.iter().map(|x| alpha * x).collect();
        let v_scaled = interference_map(sc, &scaled_q)?;
        let alpha_v: Vec<f64> = v2.iter().map(|x| alpha * x).collect();

        let min_v = v2.iter().chain(&v1).copied().fold(f64::INFINITY, f64::min);
        report.min_value = report.min_value.min(min_v);
        if !(min_v > 0.0) {
            report.positivity_violations += 1;
        }
        let mono = rel_min(&v1, &v2, &v2);
        report.monotonicity_margin = report.monotonicity_margin.min(mono);
        if mono < -PROPERTY_SLACK {
            report.monotonicity_violations += 1;
        }
        let scal = rel_min(&alpha_v, &v_scaled, &alpha_v);
        report.scalability_margin = report.scalability_margin.min(scal);
        if !(scal > -PROPERTY_SLACK) {
            report.scalability_violations += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub initial_points: Vec<Vec<f64>>,
    /// Converged cell powers per start; `None` if that run did not solve.
    pub fixed_points: Vec<Option<Vec<f64>>>,
    /// Largest elementwise relative disagreement with the first solved run.
    pub max_rel_spread: f64,
}

impl UniquenessReport {
    pub fn all_solved(&self) -> bool {
        self.fixed_points.iter().all(Option::is_some)
    }

    pub fn agrees_within(&self, tol: f64) -> bool {
        self.all_solved() && self.max_rel_spread <= tol
    }
}

/// Runs DTAPC-PM from `inits` seeded random starts in `[0, 2·Q^max]` and
/// compares the limits.
pub fn uniqueness_check(
    sc: &NetworkScenario,
    inits: usize,
    seed: u64,
    opts: &PmOptions,
) -> Result<UniquenessReport, SolveError> {
    let caps = sc.power_cap_densities();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial_points: Vec<Vec<f64>> = (0..inits)
        .map(|_| {
            caps.iter()
                .map(|c| rng.random_range(0.0..=2.0 * c))
                .collect()
        })
        .collect();
    let mut fixed_points = Vec::with_capacity(inits);
    for q0 in &initial_points {
        let out = dtapc_pm_from(sc, q0.clone(), opts)?;
        fixed_points.push(out.solution().map(|s| s.q.0.clone()));
    }
    let mut max_rel_spread: f64 = 0.0;
    if let Some(reference) = fixed_points.iter().flatten().next() {
        for q in fixed_points.iter().flatten() {
            for (a, b) in q.iter().zip(reference) {
                max_rel_spread = max_rel_spread.max((a - b).abs() / b.abs());
            }
        }
    }
    Ok(UniquenessReport {
        initial_points,
        fixed_points,
        max_rel_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_scenario, validate_allocation, ScenarioGenConfig};

    const NOISE: f64 = 3.981071705534972e-21;
    const B: f64 = 18e6;

    fn symmetric(g: f64, gc: f64, d: f64) -> NetworkScenario {
        NetworkScenario::new(
            vec![vec![g, gc], vec![gc, g]],
            vec![0, 1],
            vec![d, d],
            vec![10.0, 10.0],
            NOISE,
            B,
        )
        .unwrap()
    }

    fn small(seed: u64) -> NetworkScenario {
        generate_scenario(&ScenarioGenConfig {
            sites: 1,
            users_per_cell: 2,
            seed,
            ..ScenarioGenConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn single_user_cell_update() {
        let sc = symmetric(1e-10, 1e-12, 1e6);
        let q = [0.0, 2e-12];
        let upd = per_cell_pm(&sc, 0, &q).unwrap();
        assert_eq!(upd.load, vec![1.0]);
        let a = (2e-12 * 1e-12 + NOISE) / 1e-10;
        let expected = a * (2f64.powf(1e6 / B) - 1.0);
        assert!((upd.cell_power / expected - 1.0).abs() < 1e-13);
    }

    #[test]
    fn no_interference_reduces_to_single_cell() {
        let sc = small(3);
        let i = 1;
        let upd = per_cell_pm(&sc, i, &vec![0.0; sc.cell_count()]).unwrap();
        let users = sc.users_of(i);
        let prob = SingleCellProblem::new(
            users.iter().map(|&u| sc.gain(i, u)).collect(),
            users.iter().map(|&u| sc.demand(u)).collect(),
            sc.noise_density(),
            B,
            sc.power_cap_density(i),
        )
        .unwrap();
        let sol = pm_sc(&prob).unwrap();
        assert_eq!(upd.load, sol.load);
        assert_eq!(upd.avg_power, sol.avg_power);
    }

    #[test]
    fn analytic_two_cell_fixed_point() {
        let (g, gc, d) = (1e-10, 2e-11, 1e6);
        let c = 2f64.powf(d / B) - 1.0;
        let expected = NOISE * c / (g - gc * c);
        let sc = symmetric(g, gc, d);
        for schedule in [UpdateSchedule::Jacobi, UpdateSchedule::GaussSeidel] {
            let opts = PmOptions {
                schedule,
                ..PmOptions::default()
            };
            let out = dtapc_pm(&sc, &opts).unwrap();
            let sol = out.solution().expect("feasible");
            for qi in sol.q.as_slice() {
                assert!((qi / expected - 1.0).abs() < 1e-8, "{qi} vs {expected}");
            }
        }
    }

    #[test]
    fn pole_instance_is_infeasible() {
        let d = 1e6;
        let c = 2f64.powf(d / B) - 1.0;
        let g = 1e-10;
        let sc = symmetric(g, 1.01 * g / c, d);
        let out = dtapc_pm(&sc, &PmOptions::default()).unwrap();
        let PmOutcome::Infeasible(inf) = out else {
            panic!("expected infeasible")
        };
        assert_eq!(inf.reason, InfeasibilityReason::CapExceeded);
        assert_eq!(inf.iterations, 1);
        assert!(!inf.offending.is_empty());
    }

    #[test]
    fn iterates_decrease_from_cap_and_solution_validates() {
        let sc = small(5);
        let out = dtapc_pm(&sc, &PmOptions::default()).unwrap();
        let sol = out.solution().expect("feasible");
        for w in sol.trace.windows(2) {
            for (a, b) in w[1].q.iter().zip(&w[0].q) {
                assert!(*a <= *b * (1.0 + 1e-12));
            }
        }
        let report = validate_allocation(&sol.allocation, &sc, 1e-6);
        assert!(report.all_satisfied(), "{report:?}");
        let v = interference_map(&sc, sol.q.as_slice()).unwrap();
        for (a, b) in v.iter().zip(sol.q.as_slice()) {
            assert!((a / b - 1.0).abs() < 1e-7);
        }
        for i in 0..sc.cell_count() {
            let total: f64 = sc.users_of(i).iter().map(|&u| sol.allocation.load[u]).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobi_parallel_matches_serial() {
        let sc = small(7);
        let par = dtapc_pm(&sc, &PmOptions::default()).unwrap();
        let ser = dtapc_pm(
            &sc,
            &PmOptions {
                parallel: false,
                ..PmOptions::default()
            },
        )
        .unwrap();
        assert_eq!(par, ser);
    }

    #[test]
    fn axioms_hold_on_small_scenario() {
        let sc = small(11);
        let report = interference_property_check(&sc, 30, 1).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.min_value > 0.0);
        assert!(report.scalability_margin > 0.0);
    }

    #[test]
    fn starts_agree() {
        let sc = small(13);
        let report = uniqueness_check(&sc, 4, 2, &PmOptions::default()).unwrap();
        assert!(report.agrees_within(1e-7), "{report:?}");
        let zero = dtapc_pm_from(&sc, vec![0.0; 3], &PmOptions::default()).unwrap();
        let cap = dtapc_pm(&sc, &PmOptions::default()).unwrap();
        for (a, b) in zero
            .solution()
            .unwrap()
            .q
            .0
            .iter()
            .zip(&cap.solution().unwrap().q.0)
        {
            assert!((a / b - 1.0).abs() < 1e-7);
        }
    }
}
