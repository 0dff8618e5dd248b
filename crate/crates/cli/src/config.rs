//! Experiment configuration, read from TOML. Every field is optional; the
//! defaults describe the 15-cell, 30-users-per-cell macro deployment.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tapc_core::model::{AssociationTieBreak, ScenarioGenConfig};
use tapc_core::pm::{PmOptions, UpdateSchedule};
use tapc_core::rm::RmOptions;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    PmSc,
    RmSc,
    DtapcPm,
    DtapcRm,
    OpvPm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PmSc => "pm-sc",
            Algorithm::RmSc => "rm-sc",
            Algorithm::DtapcPm => "dtapc-pm",
            Algorithm::DtapcRm => "dtapc-rm",
            Algorithm::OpvPm => "opv-pm",
        }
    }

    pub fn single_cell_only(self) -> bool {
        matches!(self, Algorithm::PmSc | Algorithm::RmSc)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    LowestIndex,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Jacobi,
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub algorithm: Algorithm,
    pub out_dir: PathBuf,
    /// Scenario in the text format of `tapc_core::model::write_scenario`.
    /// Overrides `[scenario]` when set; relative paths resolve against the
    /// config file's directory.
    pub scenario_file: Option<PathBuf>,
    pub scenario: ScenarioSection,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    pub check: CheckSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::DtapcPm,
            out_dir: PathBuf::from("out"),
            scenario_file: None,
            scenario: ScenarioSection::default(),
            solver: SolverSection::default(),
            sweep: SweepSection::default(),
            check: CheckSection::default(),
        }
    }
}

/// Mirror of [`ScenarioGenConfig`].
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub sites: usize,
    pub sectors_per_site: usize,
    pub inter_site_distance: f64,
    pub antenna_gain_dbi: f64,
    pub beamwidth_3db_deg: f64,
    pub front_to_back_db: f64,
    pub pathloss_slope: f64,
    pub pathloss_intercept: f64,
    pub pathloss_freq_coeff: f64,
    pub min_distance: f64,
    pub shadowing_std_db: f64,
    pub carrier_ghz: f64,
    pub users_per_cell: usize,
    pub seed: u64,
    pub demand: f64,
    pub power_limit: f64,
    pub noise_dbm_per_hz: f64,
    pub bandwidth: f64,
    pub tie_break: TieBreak,
    pub max_retries: usize,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let d = ScenarioGenConfig::default();
        Self {
            sites: d.sites,
            sectors_per_site: d.sectors_per_site,
            inter_site_distance: d.inter_site_distance,
            antenna_gain_dbi: d.antenna_gain_dbi,
            beamwidth_3db_deg: d.beamwidth_3db_deg,
            front_to_back_db: d.front_to_back_db,
            pathloss_slope: d.pathloss_slope,
            pathloss_intercept: d.pathloss_intercept,
            pathloss_freq_coeff: d.pathloss_freq_coeff,
            min_distance: d.min_distance,
            shadowing_std_db: d.shadowing_std_db,
            carrier_ghz: d.carrier_ghz,
            users_per_cell: d.users_per_cell,
            seed: d.seed,
            demand: d.demand,
            power_limit: d.power_limit,
            noise_dbm_per_hz: d.noise_dbm_per_hz,
            bandwidth: d.bandwidth,
            tie_break: TieBreak::LowestIndex,
            max_retries: d.max_retries,
        }
    }
}

impl ScenarioSection {
    pub fn to_gen_config(&self) -> ScenarioGenConfig {
        ScenarioGenConfig {
            sites: self.sites,
            sectors_per_site: self.sectors_per_site,
            inter_site_distance: self.inter_site_distance,
            antenna_gain_dbi: self.antenna_gain_dbi,
            beamwidth_3db_deg: self.beamwidth_3db_deg,
            front_to_back_db: self.front_to_back_db,
            pathloss_slope: self.pathloss_slope,
            pathloss_intercept: self.pathloss_intercept,
            pathloss_freq_coeff: self.pathloss_freq_coeff,
            min_distance: self.min_distance,
            shadowing_std_db: self.shadowing_std_db,
            carrier_ghz: self.carrier_ghz,
            users_per_cell: self.users_per_cell,
            seed: self.seed,
            demand: self.demand,
            power_limit: self.power_limit,
            noise_dbm_per_hz: self.noise_dbm_per_hz,
            bandwidth: self.bandwidth,
            tie_break: match self.tie_break {
                TieBreak::LowestIndex => AssociationTieBreak::LowestIndex,
                TieBreak::Random => AssociationTieBreak::Random,
            },
            max_retries: self.max_retries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Relative stopping tolerance of the PM iteration and the RM sweeps.
    pub tol: f64,
    /// Iteration limit of the PM fixed point.
    pub max_iter: usize,
    pub schedule: Schedule,
    /// Cell updates of one Jacobi step run on the thread pool.
    pub parallel: bool,
    pub max_sweeps: usize,
    pub multistart: usize,
    /// Seed of the RM multistart perturbations.
    pub rm_seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let rm = RmOptions::default();
        Self {
            tol: rm.pm.tol,
            max_iter: rm.pm.max_iter,
            schedule: Schedule::Jacobi,
            parallel: rm.pm.parallel,
            max_sweeps: rm.max_sweeps,
            multistart: rm.multistart,
            rm_seed: rm.seed,
        }
    }
}

impl SolverSection {
    pub fn pm_options(&self) -> PmOptions {
        PmOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            schedule: match self.schedule {
                Schedule::Jacobi => UpdateSchedule::Jacobi,
                Schedule::GaussSeidel => UpdateSchedule::GaussSeidel,
            },
            parallel: self.parallel,
            ..PmOptions::default()
        }
    }

    pub fn rm_options(&self) -> RmOptions {
        RmOptions {
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            multistart: self.multistart,
            seed: self.rm_seed,
            pm: self.pm_options(),
        }
    }
}

/// Demand grid: `demands` if given, else `points` values evenly spaced over
/// `[start, stop]` bit/s.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub demands: Option<Vec<f64>>,
    pub algorithms: Vec<Algorithm>,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            start: 0.5e6,
            stop: 2.5e6,
            points: 5,
            demands: None,
            algorithms: vec![Algorithm::DtapcPm, Algorithm::OpvPm],
            workers: 0,
        }
    }
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        if let Some(d) = &self.demands {
            return d.clone();
        }
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Samples of the interference-function axiom test.
    pub samples: usize,
    /// Random starting points of the uniqueness test.
    pub inits: usize,
    pub uniqueness_tol: f64,
    /// Single-cell instances compared with the grid oracle.
    pub oracle_instances: usize,
    pub oracle_resolution: usize,
    pub seed: u64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            samples: 200,
            inits: 10,
            uniqueness_tol: 1e-7,
            oracle_instances: 20,
            oracle_resolution: 60,
            seed: 1,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub algorithm: Option<Algorithm>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, resolving `scenario_file` against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg =
            Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let (Some(file), Some(dir)) = (&cfg.scenario_file, path.parent()) {
            if file.is_relative() {
                cfg.scenario_file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    /// `--max-iter` bounds both PM iterations and RM sweeps.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.scenario.seed = seed;
            self.check.seed = seed;
        }
        if let Some(tol) = o.tol {
            self.solver.tol = tol;
        }
        if let Some(n) = o.max_iter {
            self.solver.max_iter = n;
            self.solver.max_sweeps = n;
        }
        if let Some(a) = o.algorithm {
            self.algorithm = a;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return bad(format!("solver.tol must lie in (0, 1), got {}", s.tol));
        }
        if s.max_iter == 0 || s.max_sweeps == 0 {
            return bad("solver.max_iter and solver.max_sweeps must be at least 1".into());
        }
        let w = &self.sweep;
        let grid = w.grid();
        if grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("sweep demands must be positive and finite".into());
        }
        if w.demands.is_none() && w.points > 1 && !(w.stop >= w.start) {
            return bad(format!(
                "sweep.stop {} is below sweep.start {}",
                w.stop, w.start
            ));
        }
        let c = &self.check;
        if c.oracle_resolution < 4 {
            return bad("check.oracle_resolution must be at least 4".into());
        }
        if !(c.uniqueness_tol > 0.0) {
            return bad("check.uniqueness_tol must be positive".into());
        }
        self.scenario
            .to_gen_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.scenario.to_gen_config(), ScenarioGenConfig::default());
        assert_eq!(cfg.solver.rm_options(), RmOptions::default());
        assert_eq!(cfg.sweep.grid(), vec![0.5e6, 1e6, 1.5e6, 2e6, 2.5e6]);
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = Config::parse(
            "algorithm = \"rm-sc\"\n[scenario]\nsites = 1\nsectors_per_site = 1\n\
             [solver]\nschedule = \"gauss-seidel\"\n[sweep]\ndemands = [1e6]\n",
        )
        .unwrap();
        assert_eq!(cfg.algorithm, Algorithm::RmSc);
        assert_eq!(cfg.scenario.to_gen_config().cell_count(), 1);
        assert_eq!(
            cfg.solver.pm_options().schedule,
            UpdateSchedule::GaussSeidel
        );
        assert_eq!(cfg.sweep.grid(), vec![1e6]);
    }

    #[test]
    fn bad_algorithm_reports_line() {
        let err = Config::parse("out_dir = \"x\"\nalgorithm = \"fastest\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("fastest"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Config::parse("[solver]\ntolerance = 1e-6\n").unwrap_err();
        assert!(err.to_string().contains("tolerance"));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(Config::parse("[solver]\ntol = 0.0\n").is_err());
        assert!(Config::parse("[scenario]\nsites = 0\n").is_err());
        assert!(Config::parse("[sweep]\ndemands = [-1.0]\n").is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = Config::default();
        cfg.apply(&Overrides {
            seed: Some(9),
            tol: Some(1e-6),
            max_iter: Some(50),
            algorithm: Some(Algorithm::OpvPm),
            out: Some("o".into()),
        })
        .unwrap();
        assert_eq!(cfg.scenario.seed, 9);
        assert_eq!(cfg.solver.tol, 1e-6);
        assert_eq!(cfg.solver.max_sweeps, 50);
        assert_eq!(cfg.algorithm, Algorithm::OpvPm);
        assert_eq!(cfg.out_dir, PathBuf::from("o"));
    }

    #[test]
    fn empty_grid() {
        let cfg = Config::parse("[sweep]\npoints = 0\n").unwrap();
        assert!(cfg.sweep.grid().is_empty());
    }
}
