//! Random hexagonal-grid scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{dbm_per_hz_to_w_per_hz, NetworkScenario};
use crate::error::ModelError;

/// How a user picks among base stations with exactly equal gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssociationTieBreak {
    #[default]
    LowestIndex,
    /// Uniform among the tied cells, drawn from the scenario RNG.
    Random,
}

/// Parameters of the synthetic deployment.
///
/// Cells are `sites × sectors`. Sites sit on a hexagonal spiral; sector `s` of
/// a three-sector site points at `30° + 120°·s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGenConfig {
    pub sites: usize,
    pub sectors_per_site: usize,
    /// Inter-site distance in m.
    pub inter_site_distance: f64,
    pub antenna_gain_dbi: f64,
    pub beamwidth_3db_deg: f64,
    pub front_to_back_db: f64,
    /// `PL = slope·log10(d) + intercept + freq_coeff·log10(f_GHz)`, d in m.
    pub pathloss_slope: f64,
    pub pathloss_intercept: f64,
    pub pathloss_freq_coeff: f64,
    pub min_distance: f64,
    pub shadowing_std_db: f64,
    pub carrier_ghz: f64,
    pub users_per_cell: usize,
    pub seed: u64,
    /// Uniform demand in bit/s.
    pub demand: f64,
    /// Per-cell average power limit in W.
    pub power_limit: f64,
    pub noise_dbm_per_hz: f64,
    pub bandwidth: f64,
    pub tie_break: AssociationTieBreak,
    /// Attempts at drawing user positions before giving up on empty cells.
    pub max_retries: usize,
}

impl Default for ScenarioGenConfig {
    fn default() -> Self {
        Self {
            sites: 5,
            sectors_per_site: 3,
            inter_site_distance: 200.0,
            antenna_gain_dbi: 14.0,
            beamwidth_3db_deg: 70.0,
            front_to_back_db: 20.0,
            pathloss_slope: 36.7,
            pathloss_intercept: 22.7,
            pathloss_freq_coeff: 26.0,
            min_distance: 10.0,
            shadowing_std_db: 4.0,
            carrier_ghz: 2.0,
            users_per_cell: 30,
            seed: 1,
            demand: 1e6,
            power_limit: 10.0,
            noise_dbm_per_hz: -174.0,
            bandwidth: 18e6,
            tie_break: AssociationTieBreak::LowestIndex,
            max_retries: 100,
        }
    }
}

impl ScenarioGenConfig {
    /// One omnidirectional cell with 9 users, 2.5 Mbit/s each and a 1 W limit.
    pub fn single_cell() -> Self {
        Self {
            sites: 1,
            sectors_per_site: 1,
            users_per_cell: 9,
            demand: 2.5e6,
            power_limit: 1.0,
            ..Self::default()
        }
    }

    pub fn cell_count(&self) -> usize {
        self.sites * self.sectors_per_site
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::InvalidConfig(what.to_string()));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.sites == 0 {
            return bad("sites must be at least 1");
        }
        if self.sectors_per_site == 0 {
            return bad("sectors_per_site must be at least 1");
        }
        if self.users_per_cell == 0 {
            return bad("users_per_cell must be at least 1");
        }
        let checks = [
            (self.inter_site_distance, "inter_site_distance"),
            (self.beamwidth_3db_deg, "beamwidth_3db_deg"),
            (self.front_to_back_db, "front_to_back_db"),
            (self.pathloss_slope, "pathloss_slope"),
            (self.min_distance, "min_distance"),
            (self.carrier_ghz, "carrier_ghz"),
            (self.demand, "demand"),
            (self.power_limit, "power_limit"),
            (self.bandwidth, "bandwidth"),
        ];
        for (v, name) in checks {
            if !positive(v) {
                return Err(ModelError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.shadowing_std_db >= 0.0 && self.shadowing_std_db.is_finite()) {
            return bad("shadowing_std_db must be non-negative");
        }
        if !self.antenna_gain_dbi.is_finite()
            || !self.pathloss_intercept.is_finite()
            || !self.pathloss_freq_coeff.is_finite()
            || !self.noise_dbm_per_hz.is_finite()
        {
            return bad("non-finite antenna, path-loss or noise parameter");
        }
        Ok(())
    }

    /// Path loss in dB at distance `d` m.
    pub fn pathloss_db(&self, d: f64) -> f64 {
        self.pathloss_slope * d.max(self.min_distance).log10()
            + self.pathloss_intercept
            + self.pathloss_freq_coeff * self.carrier_ghz.log10()
    }

    /// Antenna gain in dBi for an off-boresight angle in degrees.
    pub fn antenna_db(&self, off_boresight_deg: f64) -> f64 {
        if self.sectors_per_site == 1 {
            return self.antenna_gain_dbi;
        }
        let r = off_boresight_deg / self.beamwidth_3db_deg;
        self.antenna_gain_dbi - (12.0 * r * r).min(self.front_to_back_db)
    }

    fn boresight_deg(&self, sector: usize) -> f64 {
        30.0 + 360.0 / self.sectors_per_site as f64 * sector as f64
    }
}

/// Site centres on a hexagonal spiral around the origin.
pub(crate) fn hex_sites(count: usize, isd: f64) -> Vec<(f64, f64)> {
    const DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let mut axial = vec![(0i64, 0i64)];
    let mut ring = 1i64;
    while axial.len() < count {
        let (mut q, mut r) = (DIRS[4].0 * ring, DIRS[4].1 * ring);
        for dir in DIRS {
            for _ in 0..ring {
                axial.push((q, r));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    axial.truncate(count);
    axial
        .into_iter()
        .map(|(q, r)| {
            let (q, r) = (q as f64, r as f64);
            (isd * (q + r / 2.0), isd * r * 3f64.sqrt() / 2.0)
        })
        .collect()
}

fn inside_hexagon(x: f64, y: f64, inradius: f64) -> bool {
    [0.0f64, 60.0, 120.0].iter().all(|deg| {
        let t = deg.to_radians();
        (x * t.cos() + y * t.sin()).abs() <= inradius
    })
}

fn wrap_deg(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a < -180.0 {
        a += 360.0;
    }
    a
}

/// Draws a scenario from `cfg`. The same config, seed included, always yields
/// the same scenario. Users are numbered in order of their serving cell.
pub fn generate_scenario(cfg: &ScenarioGenConfig) -> Result<NetworkScenario, ModelError> {
    cfg.validate()?;
    let cells = cfg.cell_count();
    let users = cfg.users_per_cell * cells;
    let sites = hex_sites(cfg.sites, cfg.inter_site_distance);
    let inradius = cfg.inter_site_distance / 2.0;
    let circumradius = cfg.inter_site_distance / 3f64.sqrt();
    let users_per_site = cfg.users_per_cell * cfg.sectors_per_site;
    let shadow = Normal::new(0.0, cfg.shadowing_std_db)
        .map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for _ in 0..cfg.max_retries.max(1) {
        let mut positions = Vec::with_capacity(users);
        for &(sx, sy) in &sites {
            for _ in 0..users_per_site {
                loop {
                    let x = rng.random_range(-circumradius..circumradius);
                    let y = rng.random_range(-circumradius..circumradius);
                    if inside_hexagon(x, y, inradius) {
                        positions.push((sx + x, sy + y));
                        break;
                    }
                }
            }
        }

        let mut gains = vec![vec![0.0; users]; cells];
        for (u, &(ux, uy)) in positions.iter().enumerate() {
            for (site, &(sx, sy)) in sites.iter().enumerate() {
                let (dx, dy) = (ux - sx, uy - sy);
                let dist = dx.hypot(dy);
                let bearing = dy.atan2(dx).to_degrees();
                for sector in 0..cfg.sectors_per_site {
                    let k = site * cfg.sectors_per_site + sector;
                    let off = wrap_deg(bearing - cfg.boresight_deg(sector));
                    let x_db = shadow.sample(&mut rng);
                    let db = cfg.antenna_db(off) - cfg.pathloss_db(dist) - x_db;
                    gains[k][u] = 10f64.powf(db / 10.0);
                }
            }
        }

        let mut serving = Vec::with_capacity(users);
        for u in 0..users {
            let best = (0..cells)
                .map(|k| gains[k][u])
                .fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<usize> = (0..cells).filter(|&k| gains[k][u] == best).collect();
            let pick = match cfg.tie_break {
                AssociationTieBreak::LowestIndex => tied[0],
                AssociationTieBreak::Random if tied.len() > 1 => {
                    tied[rng.random_range(0..tied.len())]
                }
                AssociationTieBreak::Random => tied[0],
            };
            serving.push(pick);
        }

        let mut counts = vec![0usize; cells];
        serving.iter().for_each(|&c| counts[c] += 1);
        if counts.contains(&0) {
            continue;
        }

        let mut order: Vec<usize> = (0..users).collect();
        order.sort_by_key(|&u| serving[u]);
        let gains = gains
            .iter()
            .map(|row| order.iter().map(|&u| row[u]).collect())
            .collect();
        let serving = order.iter().map(|&u| serving[u]).collect();
        return NetworkScenario::new(
            gains,
            serving,
            vec![cfg.demand; users],
            vec![cfg.power_limit; cells],
            dbm_per_hz_to_w_per_hz(cfg.noise_dbm_per_hz),
            cfg.bandwidth,
        );
    }
    Err(ModelError::InvalidConfig(format!(
        "a cell stayed empty after {} placement attempts",
        cfg.max_retries.max(1)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spiral_first_ring_is_isd_away() {
        let sites = hex_sites(7, 200.0);
        assert_eq!(sites[0], (0.0, 0.0));
        for &(x, y) in &sites[1..] {
            assert!((x.hypot(y) - 200.0).abs() < 1e-9);
        }
        for i in 0..7 {
            for j in 0..i {
                let d = (sites[i].0 - sites[j].0).hypot(sites[i].1 - sites[j].1);
                assert!(d > 199.0);
            }
        }
    }

    #[test]
    fn antenna_pattern() {
        let cfg = ScenarioGenConfig::default();
        assert_eq!(cfg.antenna_db(0.0), 14.0);
        assert!((cfg.antenna_db(35.0) - 11.0).abs() < 1e-12);
        assert_eq!(cfg.antenna_db(180.0), -6.0);
        assert_eq!(ScenarioGenConfig::single_cell().antenna_db(123.0), 14.0);
    }

    #[test]
    fn pathloss_clamps_distance() {
        let cfg = ScenarioGenConfig::default();
        assert_eq!(cfg.pathloss_db(1.0), cfg.pathloss_db(10.0));
        let expected = 36.7 * 2.0 + 22.7 + 26.0 * 2f64.log10();
        assert!((cfg.pathloss_db(100.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = ScenarioGenConfig {
            users_per_cell: 4,
            ..ScenarioGenConfig::default()
        };
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&ScenarioGenConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.gains(), c.gains());
    }

    #[test]
    fn default_is_fifteen_cells_450_users() {
        let sc = generate_scenario(&ScenarioGenConfig::default()).unwrap();
        assert_eq!(sc.cell_count(), 15);
        assert_eq!(sc.user_count(), 450);
        assert!((sc.noise_density() / 10f64.powf(-20.4) - 1.0).abs() < 1e-12);
        assert_eq!(sc.bandwidth(), 18e6);
    }

    #[test]
    fn single_cell_preset() {
        let sc = generate_scenario(&ScenarioGenConfig::single_cell()).unwrap();
        assert_eq!(sc.cell_count(), 1);
        assert_eq!(sc.user_count(), 9);
        assert!(sc.demands().iter().all(|&d| d == 2.5e6));
        assert_eq!(sc.power_limit(0), 1.0);
    }

    #[test]
    fn users_sorted_by_cell_and_served_by_best_gain() {
        let sc = generate_scenario(&ScenarioGenConfig {
            users_per_cell: 6,
            seed: 9,
            ..ScenarioGenConfig::default()
        })
        .unwrap();
        assert!(sc.serving().windows(2).all(|w| w[0] <= w[1]));
        for u in 0..sc.user_count() {
            let own = sc.gain(sc.serving_cell(u), u);
            assert!((0..sc.cell_count()).all(|k| sc.gain(k, u) <= own));
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let cfg = ScenarioGenConfig {
            shadowing_std_db: -1.0,
            ..ScenarioGenConfig::default()
        };
        assert!(matches!(
            generate_scenario(&cfg),
            Err(ModelError::InvalidConfig(_))
        ));
        let cfg = ScenarioGenConfig {
            users_per_cell: 0,
            ..ScenarioGenConfig::default()
        };
        assert!(generate_scenario(&cfg).is_err());
    }
}
