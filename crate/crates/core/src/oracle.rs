//! Brute-force and analytic reference solvers.
//!
//! These share no numerics with the solvers they check: the grid searches
//! enumerate the load simplex directly and the inner power split of the rate
//! oracle uses its own bisection.

use std::f64::consts::LN_2;

use crate::model::NetworkScenario;
use crate::single_cell::SingleCellProblem;

pub const DEFAULT_RESOLUTION: usize = 200;

/// Best grid point found by an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    /// Sum power density (W/Hz) for the power oracle, sum rate (bit/s) for the
    /// rate oracle.
    pub objective: f64,
    pub load: Vec<f64>,
    pub avg_power: Vec<f64>,
    /// Estimated distance of `objective` from the true optimum: gradient norm
    /// times final step times `√d`.
    pub error_bound: f64,
}

/// Enumerates `lo_d + k·step` for `k < count` in each of `dims` coordinates
/// and keeps the point with the largest `score`.
fn search_box<F>(lo: &[f64], step: f64, count: usize, score: &F) -> Option<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let dims = lo.len();
    let mut idx = vec![0usize; dims];
    let mut point = lo.to_vec();
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        for d in 0..dims {
            point[d] = lo[d] + idx[d] as f64 * step;
        }
        if let Some(v) = score(&point) {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, point.clone()));
            }
        }
        let mut d = 0;
        loop {
            if d == dims {
                return best;
            }
            idx[d] += 1;
            if idx[d] < count {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Completes free loads with `m_M = 1 − Σ`, or `None` outside the open simplex.
fn complete(free: &[f64]) -> Option<Vec<f64>> {
    if free.iter().any(|m| !(*m > 0.0)) {
        return None;
    }
    let last = 1.0 - free.iter().sum::<f64>();
    if !(last > 0.0) {
        return None;
    }
    let mut out = free.to_vec();
    out.push(last);
    Some(out)
}

/// Grid search followed by one zoom to `±2h` around the incumbent.
fn two_stage<F>(users: usize, resolution: usize, score: F) -> Option<(f64, Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let dims = users - 1;
    let res = resolution.max(4);
    let h = 1.0 / res as f64;
    let (_, coarse) = search_box(&vec![h; dims], h, res - 1, &score)?;
    let fine_step = 4.0 * h / res as f64;
    let lo: Vec<f64> = coarse.iter().map(|m| m - 2.0 * h).collect();
    let (value, point) = search_box(&lo, fine_step, res + 1, &score)?;

    let mut grad_sq = 0.0;
    for d in 0..dims {
        let mut plus = point.clone();
        let mut minus = point.clone();
        plus[d] += fine_step;
        minus[d] -= fine_step;
        let slope = match (score(&plus), score(&minus)) {
            (Some(p), Some(m)) => (p - m) / (2.0 * fine_step),
            (Some(p), None) => (p - value) / fine_step,
            (None, Some(m)) => (value - m) / fine_step,
            (None, None) => 0.0,
        };
        grad_sq += slope * slope;
    }
    let bound = grad_sq.sqrt() * fine_step * (dims as f64).sqrt();
    Some((value, point, bound))
}

/// Minimum-power loads by exhaustive search over the load simplex. The power
/// of each user is the least that meets its demand at the given load.
pub fn grid_oracle_pm_sc(prob: &SingleCellProblem, resolution: usize) -> GridResult {
    let users = prob.user_count();
    let a: Vec<f64> = (0..users)
        .map(|j| prob.noise()[j] / prob.gains()[j])
        .collect();
    let b: Vec<f64> = (0..users)
        .map(|j| LN_2 * prob.demands()[j] / prob.bandwidth())
        .collect();
    let powers = |m: &[f64]| -> Vec<f64> {
        (0..users)
            .map(|j| a[j] * m[j] * (b[j] / m[j]).exp_m1())
            .collect()
    };
    if users == 1 {
        let p = powers(&[1.0]);
        return GridResult {
            objective: p[0],
            load: vec![1.0],
            avg_power: p,
            error_bound: 0.0,
        };
    }
    let score = |free: &[f64]| complete(free).map(|m| -powers(&m).iter().sum::<f64>());
    let (value, point, bound) =
        two_stage(users, resolution, score).expect("the simplex interior is never empty");
    let load = complete(&point).expect("incumbent is interior");
    GridResult {
        objective: -value,
        avg_power: powers(&load),
        load,
        error_bound: bound,
    }
}

/// Splits `cap` among users with fixed loads to maximise the sum rate while
/// keeping each at or above its demand. Returns `None` if the demands alone
/// need more than `cap`.
fn water_fill(m: &[f64], c: &[f64], floors: &[f64], cap: f64) -> Option<Vec<f64>> {
    let need: f64 = floors.iter().sum();
    if !(need <= cap) {
        return None;
    }
    let at = |level: f64| -> Vec<f64> {
        (0..m.len())
            .map(|j| floors[j].max(m[j] * (level - 1.0 / c[j])))
            .collect()
    };
    let mut lo = 0.0f64;
    let mut hi = (0..m.len())
        .map(|j| 1.0 / c[j] + cap / m[j])
        .fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if at(mid).iter().sum::<f64>() > cap {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(at(lo))
}

/// Maximum sum rate by exhaustive search over loads; the power split at each
/// load point is an exact water-filling with demand floors.
pub fn grid_oracle_rm_sc(prob: &SingleCellProblem, resolution: usize) -> Option<GridResult> {
    let users = prob.user_count();
    let kappa = LN_2 / prob.bandwidth();
    let cap = prob.power_cap();
    let c: Vec<f64> = (0..users)
        .map(|j| prob.gains()[j] / prob.noise()[j])
        .collect();
    let demands = prob.demands();
    let solve = |m: &[f64]| -> Option<(f64, Vec<f64>)> {
        let floors: Vec<f64> = (0..users)
            .map(|j| m[j] * (kappa * demands[j] / m[j]).exp_m1() / c[j])
            .collect();
        let p = water_fill(m, &c, &floors, cap)?;
        let rate = (0..users)
            .map(|j| m[j] * (c[j] * p[j] / m[j]).ln_1p() / kappa)
            .sum();
        Some((rate, p))
    };
    if users == 1 {
        let (rate, p) = solve(&[1.0])?;
        return Some(GridResult {
            objective: rate,
            load: vec![1.0],
            avg_power: p,
            error_bound: 0.0,
        });
    }
    let score = |free: &[f64]| complete(free).and_then(|m| solve(&m).map(|(r, _)| r));
    let (value, point, bound) = two_stage(users, resolution, score)?;
    let load = complete(&point)?;
    let (_, avg_power) = solve(&load)?;
    Some(GridResult {
        objective: value,
        load,
        avg_power,
        error_bound: bound,
    })
}

/// Fixed point of `q = (q·g_c + σ²)·c/g` with `c = 2^{D/B} − 1`: the common
/// cell power of the symmetric two-cell, one-user-per-cell network. `None`
/// when `g ≤ g_c·c` (no nonnegative solution).
pub fn analytic_2cell_fixed_point(
    g_direct: f64,
    g_cross: f64,
    demand: f64,
    bandwidth: f64,
    noise_density: f64,
) -> Option<f64> {
    let c = (demand / bandwidth).exp2() - 1.0;
    let denom = g_direct - g_cross * c;
    (denom > 0.0).then(|| noise_density * c / denom)
}

/// Least cell powers that meet every demand with the loads held at `loads`
/// (global user order). Solves the linear system
/// `q_i = Σ_{j∈J_i} h_j·(σ² + Σ_{k≠i} q_k g_kj)/g_ij`, `h_j = e^{b_j/m_j} − 1`
/// times `m_j`, by Gaussian elimination. `None` if no positive solution exists.
pub fn fixed_load_cell_powers(sc: &NetworkScenario, loads: &[f64]) -> Option<Vec<f64>> {
    let n = sc.cell_count();
    let mut mat = vec![vec![0.0; n + 1]; n];
    for (i, row) in mat.iter_mut().enumerate() {
        row[i] = 1.0;
        for &u in sc.users_of(i) {
            let m = loads[u];
            if !(m > 0.0) {
                return None;
            }
            let h = m * (LN_2 * sc.demand(u) / (sc.bandwidth() * m)).exp_m1() / sc.gain(i, u);
            row[n] += h * sc.noise_density();
            for k in 0..n {
                if k != i {
                    row[k] -= h * sc.gain(k, u);
                }
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| mat[x][col].abs().total_cmp(&mat[y][col].abs()))?;
        mat.swap(col, pivot);
        let p = mat[col][col];
        if p == 0.0 {
            return None;
        }
        for r in 0..n {
            if r != col {
                let f = mat[r][col] / p;
                if f != 0.0 {
                    for k in col..=n {
                        mat[r][k] -= f * mat[col][k];
                    }
                }
            }
        }
    }
    let q: Vec<f64> = (0..n).map(|i| mat[i][n] / mat[i][i]).collect();
    q.iter().all(|x| *x > 0.0 && x.is_finite()).then_some(q)
}
