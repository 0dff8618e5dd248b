//! Joint time allocation and power control for load-coupled multi-cell
//! downlink networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: the special functions `u`, `w`, their inverses and a guarded
//!   bisection engine shared by every solver.
//! - [`model`]: problem instances, allocations, the averaged-interference SINR
//!   and rate model, constraint checking, scenario generation and the plain-text
//!   scenario format.
//! - [`single_cell`]: exact solvers for single-cell sum-power minimisation and
//!   sum-rate maximisation.
//! - [`pm`]: the distributed fixed-point algorithm (DTAPC-PM) for multi-cell
//!   sum-power minimisation plus standard-interference-function checks.
//! - [`rm`]: the sequential best-response algorithm (DTAPC-RM) for multi-cell
//!   sum-rate maximisation.
//! - [`baselines`]: the uniform-power-per-cell baseline (OPV-PM).
//! - [`oracle`]: brute-force and analytic reference solvers.
//!
//! Units: power quantities inside the solvers (`p`, `p̄`, `q`, noise) are power
//! spectral densities in W/Hz. Per-cell power limits are configured in watts
//! and divided by the bandwidth where a density is needed.

// NaN-rejecting comparisons are written as negations on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod error;
pub mod kernels;
pub mod model;
pub mod oracle;
pub mod pm;
pub mod rm;
pub mod single_cell;

pub use error::{KernelError, ModelError, SolveError};
pub use model::{Allocation, CellPowerVector, NetworkScenario};
