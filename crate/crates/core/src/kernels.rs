//! Scalar special functions and a guarded bisection engine.
//!
//! Two functions recur throughout the closed-form solvers:
//!
//! ```text
//!   u(x) = x·eˣ − eˣ + 1,        x ≥ 0,  u' = x·eˣ
//!   w(x) = x·(ln x − 1 + 1/x),   x ≥ 1,  w' = ln x
//! ```
//!
//! Both are strictly increasing and convex on their domains, so their inverses
//! are computed with a Newton iteration started right of the root and guarded
//! by a shrinking bracket.

use crate::error::KernelError;

pub const DEFAULT_X_TOL: f64 = 1e-12;
pub const DEFAULT_F_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_MAX_EXPANSIONS: usize = 60;
pub const DEFAULT_EXPANSION_FACTOR: f64 = 2.0;

const NEWTON_MAX_ITER: usize = 200;

// Above this value u_inv switches to the log-space form x + ln(x − 1) = ln(y − 1).
const U_LOG_SPACE_THRESHOLD: f64 = 1e6;

/// `u(x) = x·eˣ − eˣ + 1`. Overflows to `+∞` beyond `x ≈ 709`.
pub fn u_eval(x: f64) -> f64 {
    debug_assert!(x >= 0.0, "u_eval domain is x >= 0, got {x}");
    if x < 0.05 {
        // Σ_{k≥2} (k−1)·xᵏ/k!
        let mut term = x; // x^k / k! at k = 1
        let mut sum = 0.0;
        for k in 2..16 {
            term *= x / k as f64;
            sum += (k - 1) as f64 * term;
        }
        sum
    } else {
        x.exp() * (x - 1.0) + 1.0
    }
}

/// `u'(x) = x·eˣ`.
pub fn u_derivative(x: f64) -> f64 {
    x * x.exp()
}

/// Inverse of [`u_eval`] on `[0, ∞)`.
pub fn u_inv(y: f64) -> Result<f64, KernelError> {
    debug_assert!(y >= 0.0, "u_inv domain is y >= 0, got {y}");
    if y <= 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if y.is_nan() {
        return Err(KernelError::NonFinite(y));
    }
    if y > U_LOG_SPACE_THRESHOLD {
        return u_inv_log_space(y);
    }
    // u(x) ≥ x²/2, so sqrt(2y) lies right of the root.
    let mut hi = 1.0;
    while u_eval(hi) < y {
        hi *= 2.0;
    }
    let x0 = (2.0 * y).sqrt().min(hi);
    newton_increasing(|x| (u_eval(x) - y, u_derivative(x)), 0.0, hi, x0)
}

/// Solves `x + ln(x − 1) = ln(y − 1)` for large `y`, where `eˣ` itself may
/// overflow.
fn u_inv_log_space(y: f64) -> Result<f64, KernelError> {
    let target = (y - 1.0).ln();
    // g is concave and increasing, g(target) = ln(target − 1) > 0.
    let mut x = target;
    for _ in 0..NEWTON_MAX_ITER {
        let g = x + (x - 1.0).ln() - target;
        let dg = 1.0 + 1.0 / (x - 1.0);
        let mut next = x - g / dg;
        if next <= 1.0 {
            next = 0.5 * (x + 1.0);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * next {
            return Ok(next);
        }
        x = next;
    }
    Err(KernelError::NoConvergence(NEWTON_MAX_ITER))
}

/// `w(x) = x·(ln x − 1 + 1/x)` for `x ≥ 1`.
pub fn w_eval(x: f64) -> f64 {
    debug_assert!(x >= 1.0, "w_eval domain is x >= 1, got {x}");
    w_eval_offset(x - 1.0)
}

/// `w(1 + t)` evaluated without cancellation for small `t ≥ 0`.
pub fn w_eval_offset(t: f64) -> f64 {
    if t < 1e-2 {
        // Σ_{k≥2} (−1)ᵏ tᵏ / (k(k−1))
        let mut power = t;
        let mut sum = 0.0;
        for k in 2..12 {
            power *= t;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * power / (k * (k - 1)) as f64;
        }
        sum
    } else {
        (1.0 + t) * t.ln_1p() - t
    }
}

/// Inverse of [`w_eval`]: returns `x ≥ 1` with `w(x) = y`.
pub fn w_inv(y: f64) -> Result<f64, KernelError> {
    Ok(1.0 + w_inv_offset(y)?)
}

/// Returns `t = w⁻¹(y) − 1 ≥ 0`, keeping full relative precision when the
/// inverse is close to 1.
pub fn w_inv_offset(y: f64) -> Result<f64, KernelError> {
    debug_assert!(y >= 0.0, "w_inv domain is y >= 0, got {y}");
    if y <= 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if y.is_nan() {
        return Err(KernelError::NonFinite(y));
    }
    // w(1+t) ≤ t²/2 (w'' = 1/x ≤ 1) and w(x) ≥ x − 1 once x ≥ e².
    let lo = (2.0 * y).sqrt();
    let hi = y.max(std::f64::consts::E.powi(2) - 1.0).max(lo);
    newton_increasing(|t| (w_eval_offset(t) - y, t.ln_1p()), lo, hi, hi)
}

/// Newton's method for an increasing function, guarded by the bracket
/// `[lo, hi]` containing the root. Falls back to bisection whenever a Newton
/// step leaves the bracket.
fn newton_increasing<F>(f: F, mut lo: f64, mut hi: f64, x0: f64) -> Result<f64, KernelError>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = x0.clamp(lo, hi);
    for _ in 0..NEWTON_MAX_ITER {
        let (fx, dfx) = f(x);
        if fx.is_nan() {
            return Err(KernelError::NonFinite(x));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) {
            next = lo + 0.5 * (hi - lo);
        }
        let scale = next.abs().max(f64::MIN_POSITIVE);
        if (next - x).abs() <= 2.0 * f64::EPSILON * scale || hi - lo <= 2.0 * f64::EPSILON * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(KernelError::NoConvergence(NEWTON_MAX_ITER))
}

/// Search interval and stopping rules for [`bisect_monotone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the argument (bracket width).
    pub x_tol: f64,
    /// Absolute tolerance on `|f|` at the returned point.
    pub f_tol: f64,
    pub max_iter: usize,
    pub max_expansions: usize,
    pub expansion_factor: f64,
    /// Expand and split multiplicatively. Requires `lo > 0`.
    pub geometric: bool,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            x_tol: DEFAULT_X_TOL,
            f_tol: DEFAULT_F_TOL,
            max_iter: DEFAULT_MAX_ITER,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
            expansion_factor: DEFAULT_EXPANSION_FACTOR,
            geometric: false,
        }
    }

    /// A bracket on `(0, ∞)` that expands and bisects in log space and runs
    /// until the bracket collapses to adjacent floats.
    pub fn positive(lo: f64, hi: f64) -> Self {
        Self {
            geometric: true,
            x_tol: 0.0,
            f_tol: 0.0,
            ..Self::new(lo, hi)
        }
    }

    pub fn with_tolerances(mut self, x_tol: f64, f_tol: f64) -> Self {
        self.x_tol = x_tol;
        self.f_tol = f_tol;
        self
    }

    pub fn with_max_expansions(mut self, max_expansions: usize) -> Self {
        self.max_expansions = max_expansions;
        self
    }
}

/// Finds a root of a monotone function.
///
/// If `f` has the same sign at both ends, the bracket is expanded on the side
/// with the smaller `|f|` (where a monotone function must cross zero) up to
/// `max_expansions` times. Refinement stops once the bracket is narrower than
/// `x_tol` and `|f| ≤ f_tol`, or once the bracket has collapsed to adjacent
/// floats.
pub fn bisect_monotone<F>(f: F, bracket: &Bracket) -> Result<f64, KernelError>
where
    F: Fn(f64) -> f64,
{
    let Bracket {
        mut lo,
        mut hi,
        x_tol,
        f_tol,
        max_iter,
        max_expansions,
        expansion_factor,
        geometric,
    } = *bracket;
    if !(lo < hi) || (geometric && !(lo > 0.0)) || !(expansion_factor > 1.0) {
        return Err(KernelError::InvalidBracket { lo, hi });
    }

    let eval = |x: f64| -> Result<f64, KernelError> {
        let v = f(x);
        if v.is_nan() {
            Err(KernelError::NonFinite(x))
        } else {
            Ok(v)
        }
    };

    let mut f_lo = eval(lo)?;
    let mut f_hi = eval(hi)?;
    let mut expansions = 0;
    while f_lo != 0.0 && f_hi != 0.0 && f_lo.signum() == f_hi.signum() {
        if expansions == max_expansions {
            return Err(KernelError::BracketExhausted { lo, hi, expansions });
        }
        expansions += 1;
        if f_lo.abs() <= f_hi.abs() {
            let next = if geometric {
                lo / expansion_factor
            } else {
                lo - (hi - lo) * (expansion_factor - 1.0)
            };
            hi = lo;
            f_hi = f_lo;
            lo = next;
            f_lo = eval(lo)?;
        } else {
            let next = if geometric {
                hi * expansion_factor
            } else {
                hi + (hi - lo) * (expansion_factor - 1.0)
            };
            lo = hi;
            f_lo = f_hi;
            hi = next;
            f_hi = eval(hi)?;
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(KernelError::BracketExhausted { lo, hi, expansions });
        }
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }

    for _ in 0..max_iter {
        let mid = if geometric && hi > 4.0 * lo {
            (lo.sqrt() * hi.sqrt()).max(lo)
        } else {
            lo + 0.5 * (hi - lo)
        };
        if !(mid > lo && mid < hi) {
            return Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi });
        }
        let f_mid = eval(mid)?;
        if f_mid == 0.0 || (hi - lo <= x_tol && f_mid.abs() <= f_tol) {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Err(KernelError::NoConvergence(max_iter))
}
