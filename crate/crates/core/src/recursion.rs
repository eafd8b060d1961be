//! The bound recursion `b_n = sup_{0<=a<=1} g(a, b_{n-1})` with
//! `g(a, b) = a f(a) + (1 - a) f(a + f^{-1}(b))` and `b_0 = f(0)`, together
//! with its fixed-point bound `B`.
//!
//! `B` is found as the root of `psi(b) = f(0) + f'(f^{-1}(b)) - b`, which is
//! `dg/da` at `a = 0`. For increasing convex `f` with concave derivative this
//! root coincides with the smallest `b` at which `g(., b)` is nonincreasing on
//! all of `[0, 1]`; [`solve_bound`] checks the latter on a grid as well.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_kit::FunctionSpec;
use crate::optimize::{bisect_decreasing, maximize};

/// Grid size for the `dg/da <= 0` cross-check at the computed bound.
pub const CROSS_CHECK_POINTS: usize = 512;
/// Allowed positive slack of `dg/da` in the cross-check.
pub const CROSS_CHECK_SLACK: f64 = 1e-6;
/// Points in `[0, epsilon]` used by [`divergence_scan`].
pub const DIVERGENCE_SCAN_POINTS: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub opt_grid_points: usize,
    pub refine_iters: usize,
    pub b_tolerance: f64,
    pub divergence_threshold: f64,
    pub max_iterations: usize,
    pub bisection_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            opt_grid_points: 2048,
            refine_iters: 60,
            b_tolerance: 1e-9,
            divergence_threshold: 1e6,
            max_iterations: 100_000,
            bisection_tolerance: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive_reals = [
            ("b_tolerance", self.b_tolerance),
            ("divergence_threshold", self.divergence_threshold),
            ("bisection_tolerance", self.bisection_tolerance),
        ];
        for (name, v) in positive_reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.opt_grid_points < 2 {
            return Err(Error::Config("opt_grid_points must be >= 2".into()));
        }
        if self.refine_iters == 0 || self.max_iterations == 0 {
            return Err(Error::Config(
                "refine_iters and max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_args(spec: &FunctionSpec, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Argument(format!("a = {a} is outside [0, 1]")));
    }
    spec.inverse(b)
}

/// `g(a, b) = a f(a) + (1 - a) f(a + f^{-1}(b))`.
pub fn g(spec: &FunctionSpec, a: f64, b: f64) -> Result<f64> {
    let x0 = check_args(spec, a, b)?;
    Ok(g_at(spec, a, x0))
}

#[inline]
fn g_at(spec: &FunctionSpec, a: f64, x0: f64) -> f64 {
    a * spec.eval_unchecked(a) + (1.0 - a) * spec.eval_unchecked(a + x0)
}

/// `dg/da = f(a) + a f'(a) - f(a + f^{-1}(b)) + (1 - a) f'(a + f^{-1}(b))`.
pub fn g_prime(spec: &FunctionSpec, a: f64, b: f64) -> Result<f64> {
    let x0 = check_args(spec, a, b)?;
    Ok(g_prime_at(spec, a, x0))
}

fn g_prime_at(spec: &FunctionSpec, a: f64, x0: f64) -> f64 {
    let z = a + x0;
    spec.eval_unchecked(a) + a * spec.deriv_unchecked(a) - spec.eval_unchecked(z)
        + (1.0 - a) * spec.deriv_unchecked(z)
}

/// Split of `dg/da` as `f(a) + a h1 + h2` with `h1 = f'(a) - f'(z)` and
/// `h2 = f'(z) - f(z)`, `z = a + f^{-1}(b)`. Returns `(f(a), h1, h2)`.
pub fn g_prime_parts(spec: &FunctionSpec, a: f64, b: f64) -> Result<(f64, f64, f64)> {
    let x0 = check_args(spec, a, b)?;
    let z = a + x0;
    let h1 = spec.deriv_unchecked(a) - spec.deriv_unchecked(z);
    let h2 = spec.deriv_unchecked(z) - spec.eval_unchecked(z);
    Ok((spec.eval_unchecked(a), h1, h2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupG {
    pub value: f64,
    pub a_star: f64,
}

/// `G(b) = sup_{0<=a<=1} g(a, b)` with its smallest maximizer.
pub fn sup_g(spec: &FunctionSpec, b: f64, cfg: &SolverConfig) -> Result<SupG> {
    let x0 = spec.inverse(b)?;
    let m = maximize(
        |a| g_at(spec, a, x0),
        0.0,
        1.0,
        cfg.opt_grid_points,
        cfg.refine_iters,
    );
    Ok(SupG {
        value: m.value,
        a_star: m.arg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecursionStatus {
    Converged { limit: f64 },
    Diverged { step: usize },
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionTrace {
    pub spec: FunctionSpec,
    /// `b[0] = f(0)`, `b[n] = G(b[n-1])`.
    pub b: Vec<f64>,
    /// `a_star[n - 1]` is the maximizer that produced `b[n]`.
    pub a_star: Vec<f64>,
    pub status: RecursionStatus,
}

impl RecursionTrace {
    pub fn last(&self) -> f64 {
        *self.b.last().expect("trace always holds b_0")
    }

    pub fn steps(&self) -> usize {
        self.b.len() - 1
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.b.windows(2).all(|w| w[1] >= w[0])
    }

    /// Limit estimate from the last three terms.
    ///
    /// Near a fixed point where `G(b) - b` vanishes quadratically, the
    /// distance `d_n` to the limit obeys `d_{n+1} = d_n - c d_n^2`, so the
    /// increments satisfy `delta_{n+1} / delta_n = (1 - delta_n / d_n)^2`.
    /// Solving for `d_n` gives the estimate. `None` when the increments are
    /// not positive and shrinking.
    pub fn extrapolated_limit(&self) -> Option<f64> {
        if matches!(self.status, RecursionStatus::Diverged { .. }) || self.b.len() < 3 {
            return None;
        }
        let n = self.b.len();
        let d1 = self.b[n - 2] - self.b[n - 3];
        let d2 = self.b[n - 1] - self.b[n - 2];
        if !(d1 > 0.0 && d2 > 0.0 && d2 < d1) {
            return None;
        }
        let distance = d1 / (1.0 - (d2 / d1).sqrt());
        Some(self.b[n - 3] + distance)
    }
}

/// Iterates `b_n = G(b_{n-1})` until the increment drops below
/// `cfg.b_tolerance`, `b_n` exceeds `cfg.divergence_threshold`, or
/// `cfg.max_iterations` steps have been taken.
pub fn iterate(spec: &FunctionSpec, cfg: &SolverConfig) -> Result<RecursionTrace> {
    cfg.validate()?;
    let mut b = vec![spec.eval_unchecked(0.0)];
    let mut a_star = Vec::new();
    let mut status = RecursionStatus::MaxIterations;

    for n in 1..=cfg.max_iterations {
        let prev = b[n - 1];
        let next = sup_g(spec, prev, cfg)?;
        b.push(next.value);
        a_star.push(next.a_star);
        if !next.value.is_finite() || next.value > cfg.divergence_threshold {
            status = RecursionStatus::Diverged { step: n };
            break;
        }
        if (next.value - prev).abs() < cfg.b_tolerance {
            status = RecursionStatus::Converged { limit: next.value };
            break;
        }
    }

    Ok(RecursionTrace {
        spec: *spec,
        b,
        a_star,
        status,
    })
}

/// Exactly `steps` applications of `G` from `b_0 = f(0)`, with no stopping
/// rule. Returns `b_0..=b_steps` and the maximizers.
pub fn recursion_sequence(
    spec: &FunctionSpec,
    steps: usize,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut b = Vec::with_capacity(steps + 1);
    let mut a_star = Vec::with_capacity(steps);
    b.push(spec.eval_unchecked(0.0));
    for n in 1..=steps {
        let next = sup_g(spec, b[n - 1], cfg)?;
        b.push(next.value);
        a_star.push(next.a_star);
    }
    Ok((b, a_star))
}

/// `psi(b) = f(0) + f'(f^{-1}(b)) - b`, i.e. `dg/da` at `a = 0`.
pub fn psi(spec: &FunctionSpec, b: f64) -> Result<f64> {
    let x = spec.inverse(b)?;
    Ok(spec.eval_unchecked(0.0) + spec.deriv_unchecked(x) - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundResult {
    Finite {
        b: f64,
        /// `dg/da(a, B) <= 1e-6` on the whole cross-check grid.
        cross_check_passed: bool,
        /// Largest `dg/da(a, B)` seen on that grid.
        max_g_prime: f64,
    },
    Unbounded,
}

impl BoundResult {
    pub fn value(&self) -> Option<f64> {
        match *self {
            BoundResult::Finite { b, .. } => Some(b),
            BoundResult::Unbounded => None,
        }
    }
}

/// Root of `psi` by doubling from `f(0) + 1` then bisection. Unbounded when
/// `psi` stays positive up to `cfg.divergence_threshold`.
pub fn solve_bound(spec: &FunctionSpec, cfg: &SolverConfig) -> Result<BoundResult> {
    cfg.validate()?;
    let f0 = spec.eval_unchecked(0.0);
    let psi = |b: f64| psi(spec, b).expect("b >= f(0) inside the bracket");

    let mut lo = f0;
    let mut width = 1.0;
    let mut hi = f0 + width;
    loop {
        if hi >= cfg.divergence_threshold {
            hi = cfg.divergence_threshold;
            if psi(hi) > 0.0 {
                return Ok(BoundResult::Unbounded);
            }
            break;
        }
        if psi(hi) <= 0.0 {
            break;
        }
        lo = hi;
        width *= 2.0;
        hi = f0 + width;
    }

    let root = bisect_decreasing(psi, lo, hi, cfg.bisection_tolerance);
    let x0 = spec.inverse(root)?;
    let max_g_prime = (0..CROSS_CHECK_POINTS)
        .map(|i| {
            let a = i as f64 / (CROSS_CHECK_POINTS - 1) as f64;
            g_prime_at(spec, a, x0)
        })
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(BoundResult::Finite {
        b: root,
        cross_check_passed: max_g_prime <= CROSS_CHECK_SLACK,
        max_g_prime,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub b: f64,
    pub min_g_prime: f64,
}

/// Grid witness for the sufficient divergence condition "`dg/da >= c > 0`
/// near `a = 0` for all `b`". A heuristic, not a decision procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub epsilon: f64,
    pub rows: Vec<DivergenceRow>,
    /// Minimum of `dg/da` over the whole ladder.
    pub c: f64,
    pub divergence_indicated: bool,
}

pub fn divergence_scan(
    spec: &FunctionSpec,
    epsilon: f64,
    b_ladder: &[f64],
) -> Result<DivergenceReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Argument(format!(
            "epsilon = {epsilon} must lie in (0, 1)"
        )));
    }
    if b_ladder.is_empty() || b_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(
            "b ladder must be nonempty and increasing".into(),
        ));
    }
    let rows = b_ladder
        .iter()
        .map(|&b| {
            let x0 = spec.inverse(b)?;
            let min_g_prime = (0..DIVERGENCE_SCAN_POINTS)
                .map(|i| {
                    let a = epsilon * i as f64 / (DIVERGENCE_SCAN_POINTS - 1) as f64;
                    g_prime_at(spec, a, x0)
                })
                .fold(f64::INFINITY, f64::min);
            Ok(DivergenceRow { b, min_g_prime })
        })
        .collect::<Result<Vec<_>>>()?;
    let c = rows
        .iter()
        .map(|r| r.min_g_prime)
        .fold(f64::INFINITY, f64::min);
    Ok(DivergenceReport {
        epsilon,
        rows,
        c,
        divergence_indicated: c > 0.0,
    })
}

/// `(b - 1) e^{1/(b-1)} - b`: for `f(x) = e^x` and `b >= 2` this is
/// `G(b) - b`, so a fixed point of the recursion would be a zero of it.
pub fn unit_exponential_fixed_point_gap(b: f64) -> f64 {
    let s = b - 1.0;
    s * (1.0 / s).exp_m1() - 1.0
}
