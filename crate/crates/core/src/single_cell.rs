//! Closed-form single-cell solvers.
//!
//! Both problems share the per-user constants
//!
//! ```text
//!   a_j = I_j / g_j,     b_j = ln2·D_j / B,
//! ```
//!
//! where `I_j` is the noise (plus, inside a multi-cell iteration, the received
//! interference) density seen by user `j`.
//!
//! Power minimisation: at the optimum `a_j·u(b_j/m_j) = λ` for every user and
//! the loads fill the frame, `Σ m_j = 1`. `λ` is found by bisection on
//! `Σ b_j / u⁻¹(λ/a_j) = 1`, which is strictly decreasing in `λ`.
//!
//! Rate maximisation: users are ranked by `c_j = 1/a_j`. Unless the demands
//! use the whole power budget, every user but the best is served at exactly its
//! demand and the best user takes the remaining time and power. The split is
//! parameterised by the multiplier `γ` of the power constraint, and total power
//! is strictly decreasing in `γ`.

use std::f64::consts::LN_2;

use crate::error::{ModelError, SolveError};
use crate::kernels::{bisect_monotone, u_eval, u_inv, w_eval_offset, w_inv_offset, Bracket};

/// Relative band within which the minimum power is treated as equal to the
/// budget.
pub const BOUNDARY_REL_TOL: f64 = 1e-9;

/// Largest accepted relative power mismatch after solving for `γ`.
pub const GAMMA_POWER_REL_TOL: f64 = 1e-6;

/// Relative perturbation applied to tied channel qualities in [`rm_sc`].
pub const TIE_PERTURBATION: f64 = 1e-12;

const GAMMA_MAX_EXPANSIONS: usize = 200;

/// One cell's users and budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleCellProblem {
    gains: Vec<f64>,
    demands: Vec<f64>,
    noise: Vec<f64>,
    bandwidth: f64,
    power_cap: f64,
}

impl SingleCellProblem {
    /// `power_cap` is a density in W/Hz, i.e. a limit in W divided by
    /// `bandwidth`.
    pub fn new(
        gains: Vec<f64>,
        demands: Vec<f64>,
        noise_density: f64,
        bandwidth: f64,
        power_cap: f64,
    ) -> Result<Self, ModelError> {
        let noise = vec![noise_density; gains.len()];
        Self::with_interference(gains, demands, noise, bandwidth, power_cap)
    }

    /// Like [`SingleCellProblem::new`] but with a separate
    /// interference-plus-noise density per user.
    pub fn with_interference(
        gains: Vec<f64>,
        demands: Vec<f64>,
        noise: Vec<f64>,
        bandwidth: f64,
        power_cap: f64,
    ) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidProblem(msg));
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if gains.is_empty() {
            return bad("a cell needs at least one user".into());
        }
        if demands.len() != gains.len() || noise.len() != gains.len() {
            return bad(format!(
                "length mismatch: {} gains, {} demands, {} noise values",
                gains.len(),
                demands.len(),
                noise.len()
            ));
        }
        for j in 0..gains.len() {
            if !pos(gains[j]) || !pos(demands[j]) || !pos(noise[j]) {
                return bad(format!(
                    "user {j}: gain {}, demand {} and noise {} must be positive",
                    gains[j], demands[j], noise[j]
                ));
            }
        }
        if !pos(bandwidth) {
            return bad(format!("bandwidth must be positive, got {bandwidth}"));
        }
        if !(power_cap > 0.0) {
            return bad(format!("power cap must be positive, got {power_cap}"));
        }
        Ok(Self {
            gains,
            demands,
            noise,
            bandwidth,
            power_cap,
        })
    }

    pub fn user_count(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn power_cap(&self) -> f64 {
        self.power_cap
    }

    pub fn a(&self, j: usize) -> f64 {
        self.noise[j] / self.gains[j]
    }

    pub fn b(&self, j: usize) -> f64 {
        LN_2 * self.demands[j] / self.bandwidth
    }

    fn kappa(&self) -> f64 {
        LN_2 / self.bandwidth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmMode {
    /// The power budget exceeds what the demands need; `α₁ = 0`.
    Surplus,
    /// The demands need exactly the budget; the power-minimising point is
    /// returned.
    Boundary,
}

/// Lagrange multipliers of the solved problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Multipliers {
    Pm {
        lambda: f64,
    },
    Rm {
        beta: f64,
        gamma: f64,
        /// Demand multipliers in input user order. The best user has zero.
        alpha: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleCellSolution {
    pub load: Vec<f64>,
    /// `p̄_j = m_j·p_j` in W/Hz.
    pub avg_power: Vec<f64>,
    pub rate: Vec<f64>,
    pub multipliers: Multipliers,
    /// Set for rate maximisation only.
    pub mode: Option<RmMode>,
    /// Index of the user receiving the surplus (rate maximisation).
    pub best_user: Option<usize>,
    /// Tied channel qualities were perturbed before solving.
    pub ties_perturbed: bool,
}

impl SingleCellSolution {
    pub fn total_power(&self) -> f64 {
        self.avg_power.iter().sum()
    }

    pub fn sum_rate(&self) -> f64 {
        self.rate.iter().sum()
    }

    pub fn total_load(&self) -> f64 {
        self.load.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RmScResult {
    Solved(SingleCellSolution),
    /// The demands need more than the budget.
    Infeasible {
        min_power: f64,
        power_cap: f64,
        deficit: f64,
    },
}

impl RmScResult {
    pub fn solution(&self) -> Option<&SingleCellSolution> {
        match self {
            RmScResult::Solved(s) => Some(s),
            RmScResult::Infeasible { .. } => None,
        }
    }
}

/// Minimises the cell's total power subject to the demands, ignoring the cap.
pub fn pm_sc(prob: &SingleCellProblem) -> Result<SingleCellSolution, SolveError> {
    let users = prob.user_count();
    let a: Vec<f64> = (0..users).map(|j| prob.a(j)).collect();
    let b: Vec<f64> = (0..users).map(|j| prob.b(j)).collect();

    let lambda = if users == 1 {
        a[0] * u_eval(b[0])
    } else {
        let cap = |x: f64| x.min(f64::MAX);
        let lo = (0..users)
            .map(|j| cap(a[j] * u_eval(b[j])))
            .fold(0.0, f64::max);
        let hi = (0..users)
            .map(|j| cap(a[j] * u_eval(users as f64 * b[j])))
            .fold(0.0, f64::max);
        let excess = |lambda: f64| -> f64 {
            let mut total = 0.0;
            for j in 0..users {
                match u_inv(lambda / a[j]) {
                    Ok(x) => total += b[j] / x,
                    Err(_) => return f64::NAN,
                }
            }
            total - 1.0
        };
        if lo < hi {
            bisect_monotone(excess, &Bracket::positive(lo, hi))?
        } else {
            lo
        }
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SolveError::Numerics(format!(
            "load multiplier out of range: {lambda:e}"
        )));
    }

    let mut load = Vec::with_capacity(users);
    let mut avg_power = Vec::with_capacity(users);
    let mut rate = Vec::with_capacity(users);
    for j in 0..users {
        let x = if users == 1 {
            b[0]
        } else {
            u_inv(lambda / a[j])?
        };
        let m = if users == 1 { 1.0 } else { b[j] / x };
        load.push(m);
        avg_power.push(a[j] * m * x.exp_m1());
        rate.push(m * x / prob.kappa());
    }
    Ok(SingleCellSolution {
        load,
        avg_power,
        rate,
        multipliers: Multipliers::Pm { lambda },
        mode: None,
        best_user: None,
        ties_perturbed: false,
    })
}

/// Smallest total power density that meets every demand.
pub fn min_power_of_demands(prob: &SingleCellProblem) -> Result<f64, SolveError> {
    Ok(pm_sc(prob)?.total_power())
}

/// Channel qualities `c_j = g_j / I_j`, with exact ties perturbed downward by
/// a relative `TIE_PERTURBATION · k` for the `k`-th later user of a tie group.
fn ranked_qualities(prob: &SingleCellProblem) -> (Vec<usize>, Vec<f64>, bool) {
    let users = prob.user_count();
    let mut c: Vec<f64> = (0..users).map(|j| 1.0 / prob.a(j)).collect();
    let mut order: Vec<usize> = (0..users).collect();
    order.sort_by(|&x, &y| c[y].total_cmp(&c[x]).then(x.cmp(&y)));
    let mut perturbed = false;
    let mut k = 1;
    while k < users {
        let start = k - 1;
        let base = c[order[start]];
        let mut end = k;
        while end < users && c[order[end]] == base {
            end += 1;
        }
        for (rank, &j) in order[start..end].iter().enumerate().skip(1) {
            c[j] = base * (1.0 - TIE_PERTURBATION * rank as f64);
            perturbed = true;
        }
        k = end + 1;
    }
    (order, c, perturbed)
}

struct SurplusPoint {
    load: Vec<f64>,
    avg_power: Vec<f64>,
    /// `t_j = c_j·p̄_j/m_j` (SINR) in input order.
    sinr: Vec<f64>,
    beta: f64,
    total: f64,
}

/// Evaluates the surplus-mode allocation for one `γ`. Returns `None` if `γ`
/// is outside the range where the best user keeps a positive load.
fn surplus_point(
    prob: &SingleCellProblem,
    order: &[usize],
    c: &[f64],
    gamma: f64,
) -> Option<SurplusPoint> {
    let kappa = prob.kappa();
    let users = prob.user_count();
    let best = order[0];
    let c1 = c[best];
    let z1 = c1 / (kappa * gamma);
    if !(z1 > 1.0) || !z1.is_finite() {
        return None;
    }
    let w1 = w_eval_offset(z1 - 1.0);
    let mut load = vec![0.0; users];
    let mut avg_power = vec![0.0; users];
    let mut sinr = vec![0.0; users];
    let mut rest = 0.0;
    for &j in &order[1..] {
        let t = w_inv_offset(c[j] / c1 * w1).ok()?;
        if !(t > 0.0) {
            return None;
        }
        let m = kappa * prob.demands[j] / t.ln_1p();
        load[j] = m;
        avg_power[j] = m * t / c[j];
        sinr[j] = t;
        rest += m;
    }
    let m1 = 1.0 - rest;
    if !(m1 > 0.0) {
        return None;
    }
    load[best] = m1;
    avg_power[best] = m1 * (z1 - 1.0) / c1;
    sinr[best] = z1 - 1.0;
    let total = avg_power.iter().sum();
    Some(SurplusPoint {
        load,
        avg_power,
        sinr,
        beta: w1 / (kappa * z1),
        total,
    })
}

/// Maximises the cell's sum rate subject to the demands and the power cap.
pub fn rm_sc(prob: &SingleCellProblem) -> Result<RmScResult, SolveError> {
    let cap = prob.power_cap;
    let kappa = prob.kappa();
    let users = prob.user_count();

    let pm = pm_sc(prob)?;
    let min_power = pm.total_power();
    let rel = (min_power - cap) / cap;
    if rel > BOUNDARY_REL_TOL {
        return Ok(RmScResult::Infeasible {
            min_power,
            power_cap: cap,
            deficit: min_power - cap,
        });
    }
    if rel.abs() <= BOUNDARY_REL_TOL {
        return Ok(RmScResult::Solved(SingleCellSolution {
            mode: Some(RmMode::Boundary),
            ..pm
        }));
    }

    let (order, c, ties_perturbed) = ranked_qualities(prob);
    let best = order[0];
    let c1 = c[best];

    if users == 1 {
        let z1 = 1.0 + c1 * cap;
        let gamma = c1 / (kappa * z1);
        return Ok(RmScResult::Solved(SingleCellSolution {
            load: vec![1.0],
            avg_power: vec![cap],
            rate: vec![(c1 * cap).ln_1p() / kappa],
            multipliers: Multipliers::Rm {
                beta: w_eval_offset(c1 * cap) / (kappa * z1),
                gamma,
                alpha: vec![0.0],
            },
            mode: Some(RmMode::Surplus),
            best_user: Some(0),
            ties_perturbed: false,
        }));
    }

    let mismatch = |gamma: f64| match surplus_point(prob, &order, &c, gamma) {
        Some(pt) => pt.total / cap - 1.0,
        None => -1.0,
    };
    let hi = c1 / kappa;
    let bracket = Bracket::positive(hi / 2.0, hi).with_max_expansions(GAMMA_MAX_EXPANSIONS);
    let gamma = bisect_monotone(mismatch, &bracket)?;
    let residual = mismatch(gamma);
    if residual.abs() > GAMMA_POWER_REL_TOL {
        return Err(SolveError::Numerics(format!(
            "power constraint residual {residual:e} at gamma = {gamma:e}"
        )));
    }
    let pt = surplus_point(prob, &order, &c, gamma)
        .ok_or_else(|| SolveError::Numerics(format!("gamma {gamma:e} left the valid range")))?;

    let rate: Vec<f64> = (0..users)
        .map(|j| pt.load[j] * pt.sinr[j].ln_1p() / kappa)
        .collect();
    let alpha: Vec<f64> = (0..users)
        .map(|j| {
            if j == best {
                0.0
            } else {
                kappa * gamma / c[j] * (1.0 + pt.sinr[j]) - 1.0
            }
        })
        .collect();
    Ok(RmScResult::Solved(SingleCellSolution {
        load: pt.load,
        avg_power: pt.avg_power,
        rate,
        multipliers: Multipliers::Rm {
            beta: pt.beta,
            gamma,
            alpha,
        },
        mode: Some(RmMode::Surplus),
        best_user: Some(best),
        ties_perturbed,
    }))
}

/// Largest relative deviation from the stationarity conditions at `sol`.
///
/// For power minimisation every user must satisfy `a_j·u(b_j/m_j) = λ`. For
/// surplus-mode rate maximisation every user must reproduce `γ` and `β`:
///
/// ```text
///   γ = c_j(1+α_j)m_j / (κ(m_j + c_j p̄_j))
///   β = (1+α_j)/κ · (ln(1 + c_j p̄_j/m_j) − c_j p̄_j/(m_j + c_j p̄_j))
/// ```
///
/// Returns `None` for boundary-mode solutions, whose rate multipliers are not
/// computed.
pub fn kkt_residuals(prob: &SingleCellProblem, sol: &SingleCellSolution) -> Option<f64> {
    let users = prob.user_count();
    let rel = |x: f64, y: f64| ((x - y) / y).abs();
    match &sol.multipliers {
        Multipliers::Pm { lambda } if sol.mode != Some(RmMode::Boundary) => Some(
            (0..users)
                .map(|j| rel(prob.a(j) * u_eval(prob.b(j) / sol.load[j]), *lambda))
                .fold(0.0, f64::max),
        ),
        Multipliers::Rm { beta, gamma, alpha } => {
            let kappa = prob.kappa();
            let mut worst: f64 = 0.0;
            for j in 0..users {
                let c = 1.0 / prob.a(j);
                let (m, p) = (sol.load[j], sol.avg_power[j]);
                let s = c * p / m;
                let g = c * (1.0 + alpha[j]) * m / (kappa * (m + c * p));
                let b = (1.0 + alpha[j]) / kappa * (s.ln_1p() - s / (1.0 + s));
                worst = worst.max(rel(g, *gamma)).max(rel(b, *beta));
            }
            Some(worst)
        }
        _ => None,
    }
}
