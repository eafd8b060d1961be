//! Two-point bounded submartingales: exact laws, Monte Carlo paths and their
//! Doob decomposition `X = Y + M`.
//!
//! Two chains are provided. The introductory chain starts at 0, moves to 0 or
//! 1 with probability one half each while at 0, and stays at 1 forever; its
//! compensator grows by 1/2 per step spent at 0. The extremal chain plays the
//! optimal drift of a [`ExtremalPolicy`] while at 0 and is absorbed at 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::ExtremalPolicy;
use crate::error::{Error, Result};
use crate::function_kit::FunctionSpec;

const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainAtom {
    /// 0 or 1.
    pub x: u8,
    pub y: f64,
    pub prob: f64,
}

/// Joint law of `(X_n, Y_n)` at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLaw {
    pub time: usize,
    pub atoms: Vec<ChainAtom>,
}

impl ChainLaw {
    pub fn total_probability(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob).sum()
    }

    /// `P(Y_n = y)` summed over both values of `x`.
    pub fn prob_of_y(&self, y: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.y - y).abs() <= MERGE_TOLERANCE)
            .map(|a| a.prob)
            .sum()
    }

    fn push_merged(&mut self, atom: ChainAtom) {
        match self
            .atoms
            .iter_mut()
            .find(|a| a.x == atom.x && (a.y - atom.y).abs() <= MERGE_TOLERANCE)
        {
            Some(existing) => existing.prob += atom.prob,
            None => self.atoms.push(atom),
        }
    }
}

/// Exact law of the introductory chain at time `n`. Absorption at the first
/// hitting time `k` leaves `Y_n = k/2` with probability `2^{-k}`; the path that
/// never leaves 0 ends at `Y_n = n/2` with probability `2^{-n}`.
pub fn intro_chain_law(n: usize) -> ChainLaw {
    let mut law = ChainLaw {
        time: n,
        atoms: Vec::with_capacity(n + 1),
    };
    if n == 0 {
        law.atoms.push(ChainAtom {
            x: 0,
            y: 0.0,
            prob: 1.0,
        });
        return law;
    }
    for k in 1..=n {
        law.atoms.push(ChainAtom {
            x: 1,
            y: 0.5 * k as f64,
            prob: 0.5f64.powi(k as i32),
        });
    }
    law.atoms.push(ChainAtom {
        x: 0,
        y: 0.5 * n as f64,
        prob: 0.5f64.powi(n as i32),
    });
    law
}

/// `E f(Y_n)` under `law`.
pub fn exact_expectation(law: &ChainLaw, spec: &FunctionSpec) -> f64 {
    law.atoms
        .iter()
        .map(|a| a.prob * spec.eval_unchecked(a.y))
        .sum()
}

/// Conditional mean of the next state, `E(X_{k+1} | X_k = x, Y_k = y)`.
pub trait Kernel {
    fn conditional_mean(&self, step: usize, x: f64, y: f64) -> Result<f64>;
}

/// Kernel of the introductory chain.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntroKernel;

impl Kernel for IntroKernel {
    fn conditional_mean(&self, _step: usize, x: f64, _y: f64) -> Result<f64> {
        Ok(if x >= 1.0 { 1.0 } else { 0.5 })
    }
}

/// Kernel of the extremal chain with `horizon` total steps.
#[derive(Debug, Clone, Copy)]
pub struct ExtremalKernel<'a> {
    pub policy: &'a ExtremalPolicy,
    pub horizon: usize,
}

impl Kernel for ExtremalKernel<'_> {
    fn conditional_mean(&self, step: usize, x: f64, y: f64) -> Result<f64> {
        if x >= 1.0 {
            return Ok(1.0);
        }
        let remaining = self.horizon - step;
        Ok(x + self.policy.action(remaining, y)?)
    }
}

/// A path with its Doob decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub m: Vec<f64>,
}

impl PathSample {
    /// `max_k |X_k - Y_k - M_k|`.
    pub fn doob_residual(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.m)
            .map(|((x, y), m)| (x - y - m).abs())
            .fold(0.0, f64::max)
    }
}

/// Splits `x_path` into the compensator `Y_{k+1} = Y_k + E(X_{k+1} - X_k | F_k)`
/// (starting from `y0`) and the martingale `M = X - Y`.
pub fn doob_decompose<K: Kernel>(x_path: &[f64], y0: f64, kernel: &K) -> Result<PathSample> {
    if x_path.is_empty() {
        return Err(Error::Argument("empty path".into()));
    }
    let mut y = Vec::with_capacity(x_path.len());
    y.push(y0);
    for (k, &x) in x_path[..x_path.len() - 1].iter().enumerate() {
        let increment = kernel.conditional_mean(k, x, y[k])? - x;
        if increment < -1e-15 {
            return Err(Error::NonSubmartingale { step: k, increment });
        }
        y.push(y[k] + increment.max(0.0));
    }
    let m = x_path.iter().zip(&y).map(|(x, y)| x - y).collect();
    Ok(PathSample {
        x: x_path.to_vec(),
        y,
        m,
    })
}

/// Stream for one path: `(seed, path index)` fixes it regardless of scheduling.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// One path `X_0..=X_n` of the introductory chain.
pub fn sample_intro_path(n: usize, seed: u64, path: u64) -> Vec<f64> {
    let mut rng = path_rng(seed, path);
    let mut x = Vec::with_capacity(n + 1);
    x.push(0.0);
    for k in 0..n {
        let next = if x[k] >= 1.0 || rng.gen_bool(0.5) {
            1.0
        } else {
            0.0
        };
        x.push(next);
    }
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub spec: FunctionSpec,
    pub n: usize,
    pub paths: usize,
    pub seed: u64,
    /// Sample mean of `f(Y_n)`.
    pub mean: f64,
    pub std_error: f64,
    /// Exact `E f(Y_n)` from the chain law.
    pub exact: f64,
    pub max_doob_residual: f64,
    /// `max |Y_n - (1/2 + 1/2 sum_{k=1}^{n-1} (1 - X_k))|`.
    pub max_closed_form_residual: f64,
    /// Per step `k`: sample mean and sample std of `M_{k+1} - M_k`.
    pub increment_mean: Vec<f64>,
    pub increment_std: Vec<f64>,
}

impl McReport {
    pub fn z_score(&self) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == self.exact {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - self.exact) / self.std_error
        }
    }
}

struct PathStats {
    fy: f64,
    doob: f64,
    closed_form: f64,
    dm: Vec<f64>,
}

/// Monte Carlo of the introductory chain up to time `n`.
pub fn simulate_intro(n: usize, paths: usize, seed: u64, spec: &FunctionSpec) -> Result<McReport> {
    if paths == 0 {
        return Err(Error::Argument("paths must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::Argument("n must be >= 1".into()));
    }
    let stats: Vec<PathStats> = (0..paths as u64)
        .into_par_iter()
        .map(|p| {
            let x = sample_intro_path(n, seed, p);
            let s = doob_decompose(&x, 0.0, &IntroKernel)?;
            let closed = 0.5 + 0.5 * x[1..n].iter().map(|xk| 1.0 - xk).sum::<f64>();
            Ok(PathStats {
                fy: spec.eval_unchecked(s.y[n]),
                doob: s.doob_residual(),
                closed_form: (s.y[n] - closed).abs(),
                dm: s.m.windows(2).map(|w| w[1] - w[0]).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let count = paths as f64;
    let (mean, std_error) = mean_and_std_error(stats.iter().map(|s| s.fy), count);
    let mut increment_mean = vec![0.0; n];
    let mut increment_std = vec![0.0; n];
    for k in 0..n {
        let (m, se) = mean_and_std_error(stats.iter().map(|s| s.dm[k]), count);
        increment_mean[k] = m;
        increment_std[k] = se * count.sqrt();
    }

    Ok(McReport {
        spec: *spec,
        n,
        paths,
        seed,
        mean,
        std_error,
        exact: exact_expectation(&intro_chain_law(n), spec),
        max_doob_residual: stats.iter().map(|s| s.doob).fold(0.0, f64::max),
        max_closed_form_residual: stats.iter().map(|s| s.closed_form).fold(0.0, f64::max),
        increment_mean,
        increment_std,
    })
}

/// Sample mean and its standard error, summed in index order.
fn mean_and_std_error(values: impl Iterator<Item = f64> + Clone, count: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / count;
    if count < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// Exact law of the extremal chain after `horizon` steps from `(0, 0)`,
/// together with the drifts played along the path that stays at 0.
pub fn extremal_chain_law(policy: &ExtremalPolicy, horizon: usize) -> Result<(ChainLaw, Vec<f64>)> {
    if policy.horizon() < horizon {
        return Err(Error::Argument(format!(
            "policy covers {} steps, {horizon} requested",
            policy.horizon()
        )));
    }
    let mut law = ChainLaw {
        time: horizon,
        atoms: Vec::with_capacity(horizon + 1),
    };
    let mut live_y = 0.0;
    let mut live_prob = 1.0;
    let mut drifts = Vec::with_capacity(horizon);
    for remaining in (1..=horizon).rev() {
        let a = policy.action(remaining, live_y)?;
        drifts.push(a);
        live_y += a;
        if a > 0.0 {
            law.push_merged(ChainAtom {
                x: 1,
                y: live_y,
                prob: live_prob * a,
            });
        }
        live_prob *= 1.0 - a;
        if live_prob == 0.0 {
            break;
        }
    }
    if live_prob > 0.0 {
        law.push_merged(ChainAtom {
            x: 0,
            y: live_y,
            prob: live_prob,
        });
    }
    Ok((law, drifts))
}

/// One path `X_0..=X_horizon` of the extremal chain.
pub fn sample_extremal_path(
    policy: &ExtremalPolicy,
    horizon: usize,
    seed: u64,
    path: u64,
) -> Result<Vec<f64>> {
    let mut rng = path_rng(seed, path);
    let mut x = vec![0.0];
    let mut y = 0.0;
    for k in 0..horizon {
        let next = if x[k] >= 1.0 {
            1.0
        } else {
            let a = policy.action(horizon - k, y)?;
            y += a;
            if rng.gen::<f64>() < a {
                1.0
            } else {
                0.0
            }
        };
        x.push(next);
    }
    Ok(x)
}
