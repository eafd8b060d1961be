//! Finite-horizon value iteration for the compensator control problem.
//!
//! With `n` steps remaining and state `(x, y)`, the controller picks a drift
//! `a in [0, 1 - x]` and mean-zero noise. The best noise is the two-point
//! variable sending `x + a` to 1 with probability `x + a` and to 0 otherwise,
//! and at `x = 1` nothing more can be gained, so
//!
//! ```text
//! F_n(x, y) = sup_{0<=a<=1-x} [(x+a) f(y+a) + (1-(x+a)) F_{n-1}(0, y+a)]
//! F_0(x, y) = F_n(1, y) = f(y)
//! ```
//!
//! Only `V_n(y) = F_n(0, y)` is tabulated; `F_n(x, y)` for other `x` is
//! rebuilt from the previous layer on demand.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_kit::FunctionSpec;
use crate::optimize::maximize;
use crate::recursion::{recursion_sequence, SolverConfig};

/// Grid error budget per unit of grid step, scaled by `max(1, V_N(0))`.
/// Calibrated against the step-halving study in the tests.
pub const GRID_ERROR_CONSTANT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub y_max: f64,
    pub step: f64,
}

impl GridConfig {
    /// `[0, horizon]` with the given step.
    pub fn for_horizon(horizon: usize, step: f64) -> Self {
        GridConfig {
            y_max: horizon as f64,
            step,
        }
    }

    pub fn points(&self) -> usize {
        (self.y_max / self.step + 1e-9).floor() as usize + 1
    }

    /// Solver settings whose scan over `a in [0, 1]` lands on grid nodes.
    pub fn aligned_solver(&self) -> SolverConfig {
        SolverConfig {
            opt_grid_points: (1.0 / self.step).round().max(1.0) as usize + 1,
            ..SolverConfig::default()
        }
    }

    fn validate(&self, horizon: usize) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Config(format!(
                "grid step must be > 0, got {}",
                self.step
            )));
        }
        let covered = (self.points() - 1) as f64 * self.step;
        if covered + 1e-9 < horizon as f64 {
            return Err(Error::Config(format!(
                "grid covers [0, {covered}] but horizon {horizon} needs y_max >= {horizon}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub spec: FunctionSpec,
    pub horizon: usize,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    /// `values[n][j] = V_n(j * step)`.
    pub values: Vec<Vec<f64>>,
    /// `actions[n][j]`: maximizing drift at `(n, j * step)`; zero for `n = 0`.
    pub actions: Vec<Vec<f64>>,
    /// Some backup read past the end of the grid and was clamped.
    pub clamped_reads: bool,
    pub warnings: Vec<String>,
}

impl ValueTable {
    pub fn points(&self) -> usize {
        self.values[0].len()
    }

    pub fn y_at(&self, j: usize) -> f64 {
        j as f64 * self.grid.step
    }

    pub fn y_end(&self) -> f64 {
        self.y_at(self.points() - 1)
    }

    /// Largest `y` at which `V_n` is free of clamping effects.
    pub fn trusted_y_max(&self, n: usize) -> f64 {
        self.y_end() - n as f64
    }

    /// `c_n = V_n(0)`.
    pub fn c(&self, n: usize) -> f64 {
        self.values[n][0]
    }

    /// `V_n(y)` by linear interpolation; reads beyond the grid clamp to the
    /// last node.
    pub fn value(&self, n: usize, y: f64) -> f64 {
        interpolate(&self.values[n], self.grid.step, y).0
    }

    /// Error budget for comparing grid values with exact quantities.
    pub fn grid_error_budget(&self) -> f64 {
        GRID_ERROR_CONSTANT * self.grid.step * self.c(self.horizon).abs().max(1.0)
    }

    /// `F_n(x, y)` rebuilt from `V_{n-1}`.
    pub fn full_value(&self, n: usize, x: f64, y: f64) -> Result<f64> {
        Ok(self.full_value_with_action(n, x, y)?.0)
    }

    /// `F_n(x, y)` together with its maximizing drift.
    pub fn full_value_with_action(&self, n: usize, x: f64, y: f64) -> Result<(f64, f64)> {
        if n > self.horizon {
            return Err(Error::Argument(format!(
                "n = {n} exceeds horizon {}",
                self.horizon
            )));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Argument(format!("x = {x} is outside [0, 1]")));
        }
        if y.is_nan() || y < 0.0 || y + (1.0 - x) > self.y_end() + 1e-12 {
            return Err(Error::Argument(format!(
                "y = {y} with x = {x} leaves the grid [0, {}]",
                self.y_end()
            )));
        }
        if n == 0 || x == 1.0 {
            return Ok((self.spec.eval_unchecked(y), 0.0));
        }
        let prev = &self.values[n - 1];
        let step = self.grid.step;
        let m = maximize(
            |a| {
                let p = x + a;
                p * self.spec.eval_unchecked(y + a) + (1.0 - p) * interpolate(prev, step, y + a).0
            },
            0.0,
            1.0 - x,
            self.solver.opt_grid_points,
            self.solver.refine_iters,
        );
        Ok((m.value, m.arg))
    }

    /// One Bellman backup at `(x, y)` with drift `a` and an arbitrary
    /// mean-zero noise `eta` (values and probabilities), i.e.
    /// `E F_{n-1}(x + a + eta, y + a)`.
    pub fn backup_with_noise(
        &self,
        n: usize,
        x: f64,
        y: f64,
        a: f64,
        noise: &[(f64, f64)],
    ) -> Result<f64> {
        if n == 0 {
            return Err(Error::Argument("backup needs n >= 1".into()));
        }
        let mean: f64 = noise.iter().map(|(v, p)| v * p).sum();
        if mean.abs() > 1e-12 {
            return Err(Error::Argument(format!("noise mean {mean} is not zero")));
        }
        noise
            .iter()
            .map(|&(eta, p)| {
                let x_next = x + a + eta;
                if !(-1e-12..=1.0 + 1e-12).contains(&x_next) {
                    return Err(Error::Argument(format!(
                        "noise moves x to {x_next}, outside [0, 1]"
                    )));
                }
                Ok(p * self.full_value(n - 1, x_next.clamp(0.0, 1.0), y + a)?)
            })
            .sum()
    }

    /// `(x + a) f(y + a) + (1 - (x + a)) V_{n-1}(y + a)`: the backup under the
    /// two-point noise.
    pub fn two_point_backup(&self, n: usize, x: f64, y: f64, a: f64) -> f64 {
        let p = x + a;
        p * self.spec.eval_unchecked(y + a) + (1.0 - p) * self.value(n - 1, y + a)
    }
}

/// Linear interpolation on a uniform grid starting at 0. The flag reports a
/// read past the last node.
fn interpolate(layer: &[f64], step: f64, y: f64) -> (f64, bool) {
    let last = layer.len() - 1;
    let t = y / step;
    let i = t.floor();
    if i >= last as f64 {
        let exact = (t - last as f64).abs() < 1e-9;
        return (layer[last], !exact);
    }
    let i = i.max(0.0) as usize;
    let w = t - i as f64;
    if w == 0.0 {
        (layer[i], false)
    } else {
        (layer[i] + w * (layer[i + 1] - layer[i]), false)
    }
}

/// Fills `V_0..=V_horizon` on the grid.
pub fn value_iteration(
    spec: &FunctionSpec,
    horizon: usize,
    grid: &GridConfig,
    solver: &SolverConfig,
) -> Result<ValueTable> {
    grid.validate(horizon)?;
    solver.validate()?;
    let points = grid.points();
    let step = grid.step;

    let mut warnings = Vec::new();
    if step > 1.0 / (solver.opt_grid_points - 1) as f64 + 1e-15 {
        warnings.push(format!(
            "grid step {step} is coarser than the drift scan spacing {}",
            1.0 / (solver.opt_grid_points - 1) as f64
        ));
    }

    let v0: Vec<f64> = (0..points)
        .map(|j| spec.eval_unchecked(j as f64 * step))
        .collect();
    let mut values = vec![v0];
    let mut actions = vec![vec![0.0; points]];
    let mut clamped_reads = false;

    for n in 1..=horizon {
        let prev = &values[n - 1];
        let layer: Vec<(f64, f64, bool)> = (0..points)
            .into_par_iter()
            .map(|j| {
                let y = j as f64 * step;
                let m = maximize(
                    |a| {
                        a * spec.eval_unchecked(y + a)
                            + (1.0 - a) * interpolate(prev, step, y + a).0
                    },
                    0.0,
                    1.0,
                    solver.opt_grid_points,
                    solver.refine_iters,
                );
                let clamped = interpolate(prev, step, y + 1.0).1;
                (m.value, m.arg, clamped)
            })
            .collect();
        clamped_reads |= layer.iter().any(|l| l.2);
        values.push(layer.iter().map(|l| l.0).collect());
        actions.push(layer.iter().map(|l| l.1).collect());
    }

    Ok(ValueTable {
        spec: *spec,
        horizon,
        grid: *grid,
        solver: *solver,
        values,
        actions,
        clamped_reads,
        warnings,
    })
}

/// Optimal drift as a function of remaining time and current `y`, for the
/// chain sitting at `x = 0`. After acting, the chain jumps to 1 (absorbing)
/// with probability `a` and back to 0 otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalPolicy {
    pub table: ValueTable,
}

impl ExtremalPolicy {
    pub fn new(table: ValueTable) -> Self {
        ExtremalPolicy { table }
    }

    pub fn horizon(&self) -> usize {
        self.table.horizon
    }

    /// `a*_n(y)`: the stored action on grid nodes, otherwise the one-step
    /// maximizer against `V_{n-1}`.
    pub fn action(&self, n: usize, y: f64) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let t = y / self.table.grid.step;
        let j = t.round();
        if (t - j).abs() < 1e-9 && (j as usize) < self.table.points() {
            return Ok(self.table.actions[n][j as usize]);
        }
        Ok(self.table.full_value_with_action(n, 0.0, y)?.1)
    }

    /// Spread `max - min` of `a*_n(y)` over trusted grid nodes.
    pub fn action_spread(&self, n: usize) -> f64 {
        let limit = self.table.trusted_y_max(n);
        let row = &self.table.actions[n];
        let (lo, hi) = row
            .iter()
            .enumerate()
            .take_while(|(j, _)| self.table.y_at(*j) <= limit + 1e-12)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &a)| {
                (lo.min(a), hi.max(a))
            });
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }
}

/// Samples used by [`verify_lemma1`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Sample {
    pub layers: Vec<usize>,
    pub y_points: usize,
    pub x_points: usize,
}

impl Lemma1Sample {
    pub fn all_layers(table: &ValueTable) -> Self {
        Lemma1Sample {
            layers: (0..=table.horizon).collect(),
            y_points: 9,
            x_points: 21,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma1Property {
    MonotoneInY,
    NonincreasingInX,
    MidpointConvexInX,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Violation {
    pub property: Lemma1Property,
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub checks: usize,
    pub violations: Vec<Lemma1Violation>,
}

/// Checks on sampled `(n, x, y)` that `V_n` is nondecreasing in `y` and that
/// `F_n(., y)` is nonincreasing and midpoint convex in `x`. Tolerances are
/// relative to `max(1, |value|)`.
pub fn verify_lemma1(table: &ValueTable, sample: &Lemma1Sample) -> Result<Lemma1Report> {
    if sample.x_points < 3 || sample.y_points < 1 {
        return Err(Error::Argument(
            "need >= 3 x points and >= 1 y point".into(),
        ));
    }
    let mut checks = 0;
    let mut violations = Vec::new();

    for &n in &sample.layers {
        if n > table.horizon {
            return Err(Error::Argument(format!(
                "layer {n} exceeds horizon {}",
                table.horizon
            )));
        }
        let row = &table.values[n];
        for j in 1..row.len() {
            checks += 1;
            if row[j] < row[j - 1] - 1e-9 * row[j - 1].abs().max(1.0) {
                violations.push(Lemma1Violation {
                    property: Lemma1Property::MonotoneInY,
                    n,
                    x: 0.0,
                    y: table.y_at(j),
                    amount: row[j - 1] - row[j],
                });
            }
        }

        // y + 1 must stay where V_{n-1} is unaffected by clamping
        let y_hi = (table.trusted_y_max(n.saturating_sub(1)) - 1.0).max(0.0);
        let xs: Vec<f64> = (0..sample.x_points)
            .map(|i| i as f64 / (sample.x_points - 1) as f64)
            .collect();
        for k in 0..sample.y_points {
            let y = if sample.y_points == 1 {
                0.0
            } else {
                y_hi * k as f64 / (sample.y_points - 1) as f64
            };
            let fx: Vec<f64> = xs
                .iter()
                .map(|&x| table.full_value(n, x, y))
                .collect::<Result<_>>()?;

            for i in 1..xs.len() {
                checks += 1;
                if fx[i] > fx[i - 1] + 1e-9 * fx[i - 1].abs().max(1.0) {
                    violations.push(Lemma1Violation {
                        property: Lemma1Property::NonincreasingInX,
                        n,
                        x: xs[i],
                        y,
                        amount: fx[i] - fx[i - 1],
                    });
                }
            }
            for mid in 1..xs.len() - 1 {
                for half in 1..=mid.min(xs.len() - 1 - mid) {
                    checks += 1;
                    let excess = 2.0 * fx[mid] - fx[mid - half] - fx[mid + half];
                    let scale = fx[mid - half].abs().max(fx[mid + half].abs()).max(1.0);
                    if excess > 1e-6 * scale {
                        violations.push(Lemma1Violation {
                            property: Lemma1Property::MidpointConvexInX,
                            n,
                            x: xs[mid],
                            y,
                            amount: excess,
                        });
                    }
                }
            }
        }
    }
    Ok(Lemma1Report { checks, violations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n: usize,
    pub c_n: f64,
    pub b_n: f64,
    /// `b_n - c_n`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub spec: FunctionSpec,
    pub horizon: usize,
    pub step: f64,
    pub rows: Vec<CompareRow>,
    pub max_abs_diff: f64,
    pub budget: f64,
    /// `c_n <= b_n + budget` for every row.
    pub within_budget: bool,
    /// Sampled class-S condition; the sandwich is only guaranteed when true.
    pub class_s: bool,
}

/// `c_n = V_n(0)` from value iteration against `b_n` from the recursion, for
/// `n = 0..=horizon`.
pub fn compare_bounds(
    spec: &FunctionSpec,
    horizon: usize,
    grid: &GridConfig,
    dp_solver: &SolverConfig,
    recursion_solver: &SolverConfig,
) -> Result<(Comparison, ValueTable)> {
    let table = value_iteration(spec, horizon, grid, dp_solver)?;
    let (b, _) = recursion_sequence(spec, horizon, recursion_solver)?;
    let budget = table.grid_error_budget();
    let rows: Vec<CompareRow> = (0..=horizon)
        .map(|n| CompareRow {
            n,
            c_n: table.c(n),
            b_n: b[n],
            gap: b[n] - table.c(n),
        })
        .collect();
    let max_abs_diff = rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max);
    let within_budget = rows.iter().all(|r| r.c_n <= r.b_n + budget);
    let class_s = spec.class_s_condition(&standard_class_s_grid())?.holds;
    Ok((
        Comparison {
            spec: *spec,
            horizon,
            step: grid.step,
            rows,
            max_abs_diff,
            budget,
            within_budget,
            class_s,
        },
        table,
    ))
}

/// 1000 points on `[0, 20]`.
pub fn standard_class_s_grid() -> Vec<f64> {
    (0..1000).map(|i| 20.0 * i as f64 / 999.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(spec: FunctionSpec, horizon: usize, step: f64) -> ValueTable {
        let grid = GridConfig::for_horizon(horizon, step);
        value_iteration(&spec, horizon, &grid, &grid.aligned_solver()).unwrap()
    }

    #[test]
    fn layer_zero_is_f() {
        let spec = FunctionSpec::Power { m: 2.0 };
        let t = table(spec, 0, 1.0 / 8.0);
        assert_eq!(t.values.len(), 1);
        for j in 0..t.points() {
            assert_eq!(t.values[0][j], spec.eval(t.y_at(j)).unwrap());
        }
    }

    #[test]
    fn one_step_value_is_f_of_one() {
        for spec in [
            FunctionSpec::Exponential { lambda: 0.5 },
            FunctionSpec::Power { m: 2.0 },
            FunctionSpec::QuadConcaveDeriv,
        ] {
            let t = table(spec, 1, 1.0 / 64.0);
            assert!((t.c(1) - spec.eval(1.0).unwrap()).abs() < 1e-12);
            assert_eq!(t.actions[1][0], 1.0);
        }
        // any y: sup_a f(y + a) = f(y + 1)
        let t = table(FunctionSpec::Power { m: 2.0 }, 2, 1.0 / 16.0);
        for j in 0..=16 {
            assert_eq!(t.actions[1][j], 1.0);
        }
    }

    #[test]
    fn grid_must_cover_horizon() {
        let spec = FunctionSpec::QuadConcaveDeriv;
        let grid = GridConfig {
            y_max: 3.0,
            step: 0.25,
        };
        assert!(matches!(
            value_iteration(&spec, 5, &grid, &SolverConfig::default()),
            Err(Error::Config(_))
        ));
        let grid = GridConfig {
            y_max: 3.0,
            step: 0.0,
        };
        assert!(value_iteration(&spec, 1, &grid, &SolverConfig::default()).is_err());
    }

    #[test]
    fn coarse_grid_warns() {
        let grid = GridConfig::for_horizon(2, 0.25);
        let t = value_iteration(
            &FunctionSpec::QuadConcaveDeriv,
            2,
            &grid,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(t.warnings.len(), 1);
    }

    #[test]
    fn full_value_edges() {
        let spec = FunctionSpec::Exponential { lambda: 0.5 };
        let t = table(spec, 6, 1.0 / 32.0);
        for n in 0..=6 {
            assert_eq!(
                t.full_value(n, 1.0, 0.75).unwrap(),
                spec.eval(0.75).unwrap()
            );
            for j in [0usize, 5, 17] {
                let y = t.y_at(j);
                assert!((t.full_value(n, 0.0, y).unwrap() - t.values[n][j]).abs() < 1e-12);
            }
        }
        assert!(t.full_value(5, 0.3, 0.0).unwrap() >= t.full_value(5, 0.7, 0.0).unwrap());
        assert!(t.full_value(7, 0.0, 0.0).is_err());
        assert!(t.full_value(2, 0.0, 5.5).is_err());
        assert!(t.full_value(2, 1.5, 0.0).is_err());
    }

    #[test]
    fn two_point_noise_dominates() {
        let spec = FunctionSpec::Power { m: 2.0 };
        let t = table(spec, 4, 1.0 / 64.0);
        let (n, x, y, a) = (3, 0.25, 0.5, 0.25);
        let u: f64 = x + a;
        let xi = [(1.0 - u, u), (-u, 1.0 - u)];
        let two_point = t.backup_with_noise(n, x, y, a, &xi).unwrap();
        assert!((two_point - t.two_point_backup(n, x, y, a)).abs() < 1e-12);

        let others: [&[(f64, f64)]; 3] = [
            &[(0.0, 1.0)],
            &[(0.25, 0.5), (-0.25, 0.5)],
            &[(0.5, 0.2), (-0.125, 0.8)],
        ];
        for noise in others {
            let v = t.backup_with_noise(n, x, y, a, noise).unwrap();
            assert!(v <= two_point + 1e-12, "{noise:?}: {v} > {two_point}");
        }
        assert!(t.backup_with_noise(n, x, y, a, &[(0.1, 1.0)]).is_err());
    }

    #[test]
    fn top_layer_backup_reproduces_table() {
        let spec = FunctionSpec::Exponential { lambda: 0.5 };
        let t = table(spec, 8, 1.0 / 64.0);
        for n in 1..=8 {
            let m = maximize(
                |a| a * spec.eval_unchecked(a) + (1.0 - a) * t.value(n - 1, a),
                0.0,
                1.0,
                t.solver.opt_grid_points,
                t.solver.refine_iters,
            );
            assert!((m.value - t.c(n)).abs() < 1e-10);
        }
    }

    #[test]
    fn values_monotone_in_n_and_y() {
        let spec = FunctionSpec::QuadConcaveDeriv;
        let t = table(spec, 6, 1.0 / 32.0);
        for n in 1..=6 {
            for j in 0..t.points() {
                assert!(t.values[n][j] >= t.values[n - 1][j] - 1e-12);
                if j > 0 {
                    assert!(t.values[n][j] >= t.values[n][j - 1] - 1e-12);
                }
            }
        }
    }

    #[test]
    fn lemma1_on_small_tables() {
        for spec in [
            FunctionSpec::Exponential { lambda: 0.5 },
            FunctionSpec::Power { m: 2.0 },
        ] {
            let t = table(spec, 6, 1.0 / 64.0);
            let r = verify_lemma1(&t, &Lemma1Sample::all_layers(&t)).unwrap();
            assert!(r.violations.is_empty(), "{spec}: {:?}", &r.violations[..1]);
            assert!(r.checks > 1000);
        }
        let t = table(FunctionSpec::QuadConcaveDeriv, 2, 1.0 / 8.0);
        let r = verify_lemma1(
            &t,
            &Lemma1Sample {
                layers: vec![0],
                y_points: 3,
                x_points: 5,
            },
        )
        .unwrap();
        assert!(r.violations.is_empty());
    }

    #[test]
    fn policy_examples() {
        let e = FunctionSpec::Exponential { lambda: 0.5 };
        let t = table(e, 3, 1.0 / 64.0);
        let p = ExtremalPolicy::new(t);
        assert_eq!(p.action(1, 0.0).unwrap(), 1.0);
        assert_eq!(p.action(0, 0.3).unwrap(), 0.0);
        // off-grid y re-solves the one-step problem
        let a = p.action(2, 0.3001).unwrap();
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn exponential_actions_do_not_depend_on_y() {
        // V_n(y) = e^{lambda y} V_n(0) for exponentials
        let t = table(FunctionSpec::Exponential { lambda: 0.5 }, 10, 1.0 / 128.0);
        let p = ExtremalPolicy::new(t);
        for n in 1..=10 {
            assert!(
                p.action_spread(n) < 2.0 / 128.0,
                "n = {n}: {}",
                p.action_spread(n)
            );
        }
    }

    #[test]
    fn compare_small_horizon() {
        let spec = FunctionSpec::Exponential { lambda: 0.5 };
        let grid = GridConfig::for_horizon(10, 1.0 / 128.0);
        let (cmp, _) = compare_bounds(
            &spec,
            10,
            &grid,
            &grid.aligned_solver(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(cmp.within_budget);
        assert!(cmp.class_s);
        assert_eq!(cmp.rows[0].c_n, 1.0);
        assert!((cmp.rows[1].c_n - cmp.rows[1].b_n).abs() < 1e-12);
        assert!(cmp.max_abs_diff < 1e-3);
    }

    #[test]
    fn interpolation_clamps_and_flags() {
        let layer = [0.0, 1.0, 4.0];
        assert_eq!(interpolate(&layer, 0.5, 0.25), (0.5, false));
        assert_eq!(interpolate(&layer, 0.5, 1.0), (4.0, false));
        assert_eq!(interpolate(&layer, 0.5, 1.2), (4.0, true));
    }
}
