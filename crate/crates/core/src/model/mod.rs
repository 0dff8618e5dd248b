//! Problem instances and the averaged-interference physical model.
//!
//! Users are indexed globally. Each user is served by exactly one cell and
//! `gains[k][u]` is the linear gain from base station `k` to user `u`.
//! Received SINR at user `u` served by cell `i`:
//!
//! ```text
//!   sinr_u = p_u·g_iu / (Σ_{k≠i} Σ_{l∈J_k} m_l·p_l·g_ku + σ²)
//! ```
//!
//! and its rate is `B·m_u·log₂(1 + sinr_u)`.

mod format;
mod generate;

pub use format::{parse_allocation, parse_scenario, write_allocation, write_scenario};
pub use generate::{generate_scenario, AssociationTieBreak, ScenarioGenConfig};

use std::f64::consts::LN_2;

use crate::error::ModelError;

/// Converts a noise density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_w_per_hz(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Static multi-cell problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    gains: Vec<Vec<f64>>,
    serving: Vec<usize>,
    members: Vec<Vec<usize>>,
    demands: Vec<f64>,
    power_limits: Vec<f64>,
    noise_density: f64,
    bandwidth: f64,
}

impl NetworkScenario {
    /// Builds and validates a scenario.
    ///
    /// `gains` is indexed `[cell][user]`, `serving[u]` is the cell serving user
    /// `u`, `demands` are in bit/s, `power_limits` in W, `noise_density` in W/Hz
    /// and `bandwidth` in Hz.
    pub fn new(
        gains: Vec<Vec<f64>>,
        serving: Vec<usize>,
        demands: Vec<f64>,
        power_limits: Vec<f64>,
        noise_density: f64,
        bandwidth: f64,
    ) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidScenario(msg));
        let cells = gains.len();
        let users = serving.len();
        if cells == 0 {
            return bad("at least one cell is required".into());
        }
        if power_limits.len() != cells {
            return bad(format!(
                "{} power limits for {cells} cells",
                power_limits.len()
            ));
        }
        if demands.len() != users {
            return bad(format!("{} demands for {users} users", demands.len()));
        }
        if !(noise_density > 0.0 && noise_density.is_finite()) {
            return bad(format!(
                "noise density must be positive, got {noise_density}"
            ));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return bad(format!("bandwidth must be positive, got {bandwidth}"));
        }
        for (k, row) in gains.iter().enumerate() {
            if row.len() != users {
                return bad(format!(
                    "gain row {k} has {} entries, expected {users}",
                    row.len()
                ));
            }
            for (u, &g) in row.iter().enumerate() {
                if !(g > 0.0 && g.is_finite()) {
                    return bad(format!(
                        "gain from cell {k} to user {u} must be positive, got {g}"
                    ));
                }
            }
        }
        for (u, &d) in demands.iter().enumerate() {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("demand of user {u} must be positive, got {d}"));
            }
        }
        for (k, &p) in power_limits.iter().enumerate() {
            if !(p > 0.0 && p.is_finite()) {
                return bad(format!("power limit of cell {k} must be positive, got {p}"));
            }
        }
        let mut members = vec![Vec::new(); cells];
        for (u, &c) in serving.iter().enumerate() {
            if c >= cells {
                return bad(format!("user {u} is served by unknown cell {c}"));
            }
            members[c].push(u);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return bad(format!("cell {empty} serves no users"));
        }
        Ok(Self {
            gains,
            serving,
            members,
            demands,
            power_limits,
            noise_density,
            bandwidth,
        })
    }

    /// One cell, serving every user in `gains`.
    pub fn single_cell(
        gains: Vec<f64>,
        demands: Vec<f64>,
        power_limit: f64,
        noise_density: f64,
        bandwidth: f64,
    ) -> Result<Self, ModelError> {
        let users = gains.len();
        Self::new(
            vec![gains],
            vec![0; users],
            demands,
            vec![power_limit],
            noise_density,
            bandwidth,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.gains.len()
    }

    pub fn user_count(&self) -> usize {
        self.serving.len()
    }

    /// Users served by cell `i`, in ascending index order.
    pub fn users_of(&self, i: usize) -> &[usize] {
        &self.members[i]
    }

    pub fn serving_cell(&self, user: usize) -> usize {
        self.serving[user]
    }

    pub fn serving(&self) -> &[usize] {
        &self.serving
    }

    pub fn gain(&self, cell: usize, user: usize) -> f64 {
        self.gains[cell][user]
    }

    pub fn gains(&self) -> &[Vec<f64>] {
        &self.gains
    }

    pub fn demand(&self, user: usize) -> f64 {
        self.demands[user]
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    /// Average power limit of cell `i` in W.
    pub fn power_limit(&self, i: usize) -> f64 {
        self.power_limits[i]
    }

    pub fn power_limits(&self) -> &[f64] {
        &self.power_limits
    }

    /// Power limit of cell `i` as a density, `P_max / B` in W/Hz.
    pub fn power_cap_density(&self, i: usize) -> f64 {
        self.power_limits[i] / self.bandwidth
    }

    /// `Q^max` as densities.
    pub fn power_cap_densities(&self) -> Vec<f64> {
        (0..self.cell_count())
            .map(|i| self.power_cap_density(i))
            .collect()
    }

    pub fn noise_density(&self) -> f64 {
        self.noise_density
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Interference-plus-noise density at `user` when every other cell `k`
    /// transmits with average density `cell_powers[k]`.
    pub fn interference_plus_noise(&self, user: usize, cell_powers: &[f64]) -> f64 {
        let own = self.serving[user];
        let mut total = self.noise_density;
        for (k, &q) in cell_powers.iter().enumerate() {
            if k != own {
                total += q * self.gains[k][user];
            }
        }
        total
    }

    /// Same scenario with every demand replaced by `demand`.
    pub fn with_uniform_demand(&self, demand: f64) -> Result<Self, ModelError> {
        let mut out = self.clone();
        if !(demand > 0.0 && demand.is_finite()) {
            return Err(ModelError::InvalidScenario(format!(
                "demand must be positive, got {demand}"
            )));
        }
        out.demands.iter_mut().for_each(|d| *d = demand);
        Ok(out)
    }

    /// Same scenario with demands scaled by `factor`.
    pub fn with_scaled_demands(&self, factor: f64) -> Result<Self, ModelError> {
        let demands = self.demands.iter().map(|d| d * factor).collect();
        Self::new(
            self.gains.clone(),
            self.serving.clone(),
            demands,
            self.power_limits.clone(),
            self.noise_density,
            self.bandwidth,
        )
    }
}

/// Average transmit power density per cell (`q`), W/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPowerVector(pub Vec<f64>);

impl CellPowerVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Total power in W for a given bandwidth.
    pub fn total_watts(&self, bandwidth: f64) -> f64 {
        self.0.iter().sum::<f64>() * bandwidth
    }
}

/// Decision variables for every user: load `m`, transformed power
/// `p̄ = m·p` (W/Hz) and rate (bit/s).
///
/// `p̄` is the stored form; the power density is derived as `p̄/m`, defined as
/// zero when `m = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub load: Vec<f64>,
    pub avg_power: Vec<f64>,
    pub rate: Vec<f64>,
}

impl Allocation {
    pub fn zeros(users: usize) -> Self {
        Self {
            load: vec![0.0; users],
            avg_power: vec![0.0; users],
            rate: vec![0.0; users],
        }
    }

    pub fn user_count(&self) -> usize {
        self.load.len()
    }

    /// Power spectral density `p = p̄/m` while serving `user`.
    pub fn power_density(&self, user: usize) -> f64 {
        if self.load[user] > 0.0 {
            self.avg_power[user] / self.load[user]
        } else {
            0.0
        }
    }

    pub fn cell_powers(&self, sc: &NetworkScenario) -> CellPowerVector {
        CellPowerVector(
            (0..sc.cell_count())
                .map(|i| cell_power(self, sc, i))
                .collect(),
        )
    }

    pub fn sum_rate(&self) -> f64 {
        self.rate.iter().sum()
    }

    /// Total average transmit power in W.
    pub fn sum_power_watts(&self, sc: &NetworkScenario) -> f64 {
        self.avg_power.iter().sum::<f64>() * sc.bandwidth()
    }
}

/// `q_i = Σ_{j∈J_i} m_ij·p_ij`.
pub fn cell_power(alloc: &Allocation, sc: &NetworkScenario, i: usize) -> f64 {
    sc.users_of(i).iter().map(|&u| alloc.avg_power[u]).sum()
}

/// Interference-plus-noise density at `user` under `alloc`.
pub fn received_interference(alloc: &Allocation, sc: &NetworkScenario, user: usize) -> f64 {
    let own = sc.serving_cell(user);
    let mut total = sc.noise_density();
    for k in 0..sc.cell_count() {
        if k != own {
            let q: f64 = sc.users_of(k).iter().map(|&l| alloc.avg_power[l]).sum();
            total += q * sc.gain(k, user);
        }
    }
    total
}

/// Long-term average SINR of `user`.
pub fn sinr(alloc: &Allocation, sc: &NetworkScenario, user: usize) -> f64 {
    let i = sc.serving_cell(user);
    alloc.power_density(user) * sc.gain(i, user) / received_interference(alloc, sc, user)
}

/// Achievable rate of `user` in bit/s; exactly zero when its load is zero.
pub fn user_rate(alloc: &Allocation, sc: &NetworkScenario, user: usize) -> f64 {
    let m = alloc.load[user];
    if m <= 0.0 {
        return 0.0;
    }
    sc.bandwidth() * m * sinr(alloc, sc, user).ln_1p() / LN_2
}

/// Rates of all users recomputed from loads and powers.
pub fn recompute_rates(alloc: &Allocation, sc: &NetworkScenario) -> Vec<f64> {
    (0..sc.user_count())
        .map(|u| user_rate(alloc, sc, u))
        .collect()
}

/// Outcome of one constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub satisfied: bool,
    /// Largest violation (zero when satisfied everywhere). Units depend on the
    /// constraint, see [`ConstraintReport`].
    pub worst: f64,
    /// User or cell index attaining the worst value.
    pub at: Option<usize>,
}

impl ConstraintCheck {
    fn from_violations(values: impl Iterator<Item = f64>, tol: f64) -> Self {
        let mut worst = 0.0;
        let mut at = None;
        for (idx, v) in values.enumerate() {
            if v > worst || v.is_nan() {
                worst = v;
                at = Some(idx);
            }
        }
        Self {
            satisfied: worst <= tol,
            worst,
            at,
        }
    }
}

/// Per-constraint satisfaction of an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    /// Relative mismatch between stored and recomputed rates.
    pub rate_consistency: ConstraintCheck,
    /// Excess of `B·Σ p̄` over the cell limit, relative to the limit.
    pub power_cap: ConstraintCheck,
    /// Excess of `Σ m` over 1 (absolute).
    pub load_cap: ConstraintCheck,
    /// Shortfall of the stored rate below the demand, relative to the demand.
    pub demand: ConstraintCheck,
    /// Most negative load or power entry (absolute).
    pub nonnegativity: ConstraintCheck,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.rate_consistency.satisfied
            && self.power_cap.satisfied
            && self.load_cap.satisfied
            && self.demand.satisfied
            && self.nonnegativity.satisfied
    }
}

/// Checks every constraint of the master problem for `alloc`.
pub fn validate_allocation(alloc: &Allocation, sc: &NetworkScenario, tol: f64) -> ConstraintReport {
    let users = sc.user_count();
    assert_eq!(
        alloc.user_count(),
        users,
        "allocation/scenario size mismatch"
    );
    let recomputed = recompute_rates(alloc, sc);
    let rate_consistency = ConstraintCheck::from_violations(
        (0..users).map(|u| {
            let scale = recomputed[u].abs().max(sc.demand(u));
            (alloc.rate[u] - recomputed[u]).abs() / scale
        }),
        tol,
    );
    let power_cap = ConstraintCheck::from_violations(
        (0..sc.cell_count()).map(|i| {
            let watts = cell_power(alloc, sc, i) * sc.bandwidth();
            ((watts - sc.power_limit(i)) / sc.power_limit(i)).max(0.0)
        }),
        tol,
    );
    let load_cap = ConstraintCheck::from_violations(
        (0..sc.cell_count()).map(|i| {
            let total: f64 = sc.users_of(i).iter().map(|&u| alloc.load[u]).sum();
            (total - 1.0).max(0.0)
        }),
        tol,
    );
    let demand = ConstraintCheck::from_violations(
        (0..users).map(|u| ((sc.demand(u) - alloc.rate[u]) / sc.demand(u)).max(0.0)),
        tol,
    );
    let nonnegativity = ConstraintCheck::from_violations(
        (0..users).map(|u| (-alloc.load[u]).max(-alloc.avg_power[u]).max(0.0)),
        0.0,
    );
    ConstraintReport {
        rate_consistency,
        power_cap,
        load_cap,
        demand,
        nonnegativity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cell() -> NetworkScenario {
        NetworkScenario::new(
            vec![vec![1e-9, 2e-11], vec![3e-11, 5e-10]],
            vec![0, 1],
            vec![1e6, 2e6],
            vec![10.0, 10.0],
            4e-21,
            18e6,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_scenarios() {
        let err = NetworkScenario::new(vec![vec![-1.0]], vec![0], vec![1.0], vec![1.0], 1.0, 1.0);
        assert!(matches!(err, Err(ModelError::InvalidScenario(_))));
        let err = NetworkScenario::new(vec![vec![1.0]], vec![0], vec![0.0], vec![1.0], 1.0, 1.0);
        assert!(err.is_err());
        // cell 1 has no users
        let err = NetworkScenario::new(
            vec![vec![1.0], vec![1.0]],
            vec![0],
            vec![1.0],
            vec![1.0, 1.0],
            1.0,
            1.0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn noise_conversion() {
        let w = dbm_per_hz_to_w_per_hz(-174.0);
        assert!((w / 10f64.powf(-20.4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cell_sinr_has_no_interference() {
        let sc = NetworkScenario::single_cell(vec![2e-9], vec![1e6], 1.0, 4e-21, 1e6).unwrap();
        let alloc = Allocation {
            load: vec![0.5],
            avg_power: vec![1e-12],
            rate: vec![0.0],
        };
        let expected = (1e-12 / 0.5) * 2e-9 / 4e-21;
        assert!((sinr(&alloc, &sc, 0) / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_cell_sinr_by_hand() {
        let sc = two_cell();
        let alloc = Allocation {
            load: vec![0.5, 0.25],
            avg_power: vec![2e-12, 1e-12],
            rate: vec![0.0; 2],
        };
        // user 0: p = 4e-12, interference = 1e-12·3e-11 + 4e-21
        let expected0 = 4e-12 * 1e-9 / (1e-12 * 3e-11 + 4e-21);
        // user 1: p = 4e-12, interference = 2e-12·2e-11 + 4e-21
        let expected1 = 4e-12 * 5e-10 / (2e-12 * 2e-11 + 4e-21);
        assert!((sinr(&alloc, &sc, 0) / expected0 - 1.0).abs() < 1e-14);
        assert!((sinr(&alloc, &sc, 1) / expected1 - 1.0).abs() < 1e-14);

        // silencing the interferer recovers the isolated value
        let silent = Allocation {
            load: vec![0.5, 0.0],
            avg_power: vec![2e-12, 0.0],
            rate: vec![0.0; 2],
        };
        assert!((sinr(&silent, &sc, 0) / (4e-12 * 1e-9 / 4e-21) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rate_edge_values() {
        let b = 1e6;
        // sinr = p·g/σ² with g = σ² = 1
        let sc = NetworkScenario::single_cell(vec![1.0], vec![1.0], 1.0, 1.0, b).unwrap();
        let mut alloc = Allocation {
            load: vec![0.0],
            avg_power: vec![0.0],
            rate: vec![0.0],
        };
        assert_eq!(user_rate(&alloc, &sc, 0), 0.0);
        alloc.load[0] = 1.0;
        alloc.avg_power[0] = 1.0; // sinr 1
        assert!((user_rate(&alloc, &sc, 0) - b).abs() < 1e-6);
        alloc.load[0] = 0.5;
        alloc.avg_power[0] = 1.5; // p = 3, sinr 3
        assert!((user_rate(&alloc, &sc, 0) - b).abs() < 1e-6);
    }

    #[test]
    fn cell_power_sums_rows() {
        let sc = two_cell();
        let alloc = Allocation {
            load: vec![0.3, 0.7],
            avg_power: vec![1.5e-12, 2.5e-12],
            rate: vec![0.0; 2],
        };
        assert_eq!(cell_power(&alloc, &sc, 0), 1.5e-12);
        assert_eq!(cell_power(&alloc, &sc, 1), 2.5e-12);
        assert_eq!(cell_power(&Allocation::zeros(2), &sc, 0), 0.0);
    }

    #[test]
    fn validation_flags_each_constraint() {
        let sc = two_cell();
        let zero = Allocation::zeros(2);
        let report = validate_allocation(&zero, &sc, 1e-9);
        assert!(!report.demand.satisfied);
        assert!((report.demand.worst - 1.0).abs() < 1e-15);

        let eps = 1e-3;
        let over = Allocation {
            load: vec![1.0 + eps, 1.0],
            avg_power: vec![1e-13, 1e-13],
            rate: vec![0.0; 2],
        };
        let report = validate_allocation(&over, &sc, 1e-9);
        assert!(!report.load_cap.satisfied);
        assert!((report.load_cap.worst - eps).abs() < 1e-12);
        assert_eq!(report.load_cap.at, Some(0));
    }

    #[test]
    fn rate_monotone_in_own_power_and_interferer_power() {
        let sc = two_cell();
        let mut alloc = Allocation {
            load: vec![0.5, 0.5],
            avg_power: vec![1e-12, 1e-12],
            rate: vec![0.0; 2],
        };
        let r0 = user_rate(&alloc, &sc, 0);
        let s0 = sinr(&alloc, &sc, 0);
        alloc.avg_power[0] *= 1.1;
        assert!(user_rate(&alloc, &sc, 0) > r0);
        alloc.avg_power[0] /= 1.1;
        alloc.avg_power[1] *= 1.1;
        assert!(sinr(&alloc, &sc, 0) < s0);
    }
}
