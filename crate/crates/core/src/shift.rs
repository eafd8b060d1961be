//! The shift inequality `E f(a + Y) <= f(a + f^{-1}(E f(Y)))` on finite
//! nonnegative random variables, and a seeded random falsifier for it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_kit::FunctionSpec;

/// Gaps below this count as violations; anything above is float noise.
pub const VIOLATION_THRESHOLD: f64 = -1e-9;

const PROB_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// A finite nonnegative discrete random variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct DiscreteRV {
    atoms: Vec<Atom>,
}

impl DiscreteRV {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Argument(
                "random variable needs at least one atom".into(),
            ));
        }
        for atom in &atoms {
            if !(atom.value.is_finite() && atom.value >= 0.0) {
                return Err(Error::Argument(format!(
                    "atom value {} must be finite and >= 0",
                    atom.value
                )));
            }
            if !(atom.prob > 0.0 && atom.prob <= 1.0) {
                return Err(Error::Argument(format!(
                    "atom probability {} must lie in (0, 1]",
                    atom.prob
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::Argument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mut values: Vec<f64> = atoms.iter().map(|a| a.value).collect();
        values.sort_by(f64::total_cmp);
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("atom values must be distinct".into()));
        }
        Ok(DiscreteRV { atoms })
    }

    /// Builds a variable from values and unnormalized positive weights,
    /// merging repeated values.
    pub fn from_weights(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::Argument(
                "values and weights differ in length".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Argument(
                "weights must have a positive finite sum".into(),
            ));
        }
        let mut atoms: Vec<Atom> = Vec::with_capacity(values.len());
        for (&value, &w) in values.iter().zip(weights) {
            let prob = w / total;
            match atoms.iter_mut().find(|a| a.value == value) {
                Some(existing) => existing.prob += prob,
                None => atoms.push(Atom { value, prob }),
            }
        }
        DiscreteRV::new(atoms)
    }

    /// `Y` in `{0, 1}` with probability one half each.
    pub fn symmetric_bernoulli() -> Self {
        DiscreteRV {
            atoms: vec![
                Atom {
                    value: 0.0,
                    prob: 0.5,
                },
                Atom {
                    value: 1.0,
                    prob: 0.5,
                },
            ],
        }
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        DiscreteRV::new(vec![Atom { value, prob: 1.0 }])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

impl TryFrom<Vec<Atom>> for DiscreteRV {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        DiscreteRV::new(atoms)
    }
}

impl From<DiscreteRV> for Vec<Atom> {
    fn from(rv: DiscreteRV) -> Self {
        rv.atoms
    }
}

/// `E f(shift + Y)`.
pub fn expect_f(spec: &FunctionSpec, rv: &DiscreteRV, shift: f64) -> Result<f64> {
    if shift.is_nan() || shift < 0.0 {
        return Err(Error::Domain { x: shift });
    }
    Ok(rv
        .atoms
        .iter()
        .map(|a| a.prob * spec.eval_unchecked(shift + a.value))
        .sum())
}

/// `f(a + f^{-1}(E f(Y))) - E f(a + Y)`; nonnegative iff the instance
/// satisfies the shift inequality.
pub fn shift_gap(spec: &FunctionSpec, a: f64, rv: &DiscreteRV) -> Result<f64> {
    let lhs = expect_f(spec, rv, a)?;
    let base = expect_f(spec, rv, 0.0)?;
    let rhs = spec.eval_unchecked(a + spec.inverse(base)?);
    Ok(rhs - lhs)
}

/// The same inequality in inverse form:
/// `a + f^{-1}(E f(Y)) - f^{-1}(E f(a + Y))`.
pub fn shift_gap_inverse_form(spec: &FunctionSpec, a: f64, rv: &DiscreteRV) -> Result<f64> {
    let shifted = spec.inverse(expect_f(spec, rv, a)?)?;
    let base = spec.inverse(expect_f(spec, rv, 0.0)?)?;
    Ok(a + base - shifted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_atoms: usize,
    pub value_cap: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            trials: 10_000,
            seed: 42,
            max_atoms: 6,
            value_cap: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub shift: f64,
    pub rv: DiscreteRV,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub spec: FunctionSpec,
    pub seed: u64,
    pub trials: usize,
    pub min_gap: f64,
    pub argmin_instance: Instance,
    pub violations: usize,
    /// Trial 0: shift 1 with a symmetric Bernoulli `Y`.
    pub injected: Instance,
}

/// The deterministic random instance for trial `index >= 1`.
pub fn random_instance(cfg: &ScanConfig, index: u64) -> (f64, DiscreteRV) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let n = rng.gen_range(2..=cfg.max_atoms);
    let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * cfg.value_cap).collect();
    // Normalized exponential draws are uniform on the simplex.
    let weights: Vec<f64> = (0..n)
        .map(|_| -rng.sample::<f64, _>(rand::distributions::Open01).ln())
        .collect();
    let shift = rng.gen::<f64>() * 2.0;
    let rv = DiscreteRV::from_weights(&values, &weights)
        .expect("random atoms are nonnegative with positive weights");
    (shift, rv)
}

/// Runs `cfg.trials` instances (trial 0 injected, the rest random) and
/// reports the smallest gap. Trials are independent of scheduling.
pub fn property_scan(spec: &FunctionSpec, cfg: &ScanConfig) -> Result<ScanReport> {
    if cfg.trials == 0 {
        return Err(Error::Argument("trials must be >= 1".into()));
    }
    if cfg.max_atoms < 2 {
        return Err(Error::Argument("max_atoms must be >= 2".into()));
    }
    if !(cfg.value_cap.is_finite() && cfg.value_cap > 0.0) {
        return Err(Error::Argument("value_cap must be > 0".into()));
    }

    let injected_rv = DiscreteRV::symmetric_bernoulli();
    let injected = Instance {
        shift: 1.0,
        gap: shift_gap(spec, 1.0, &injected_rv)?,
        rv: injected_rv,
    };

    let gaps: Vec<f64> = (1..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let (shift, rv) = random_instance(cfg, i);
            shift_gap(spec, shift, &rv)
        })
        .collect::<Result<_>>()?;

    let mut min_gap = injected.gap;
    let mut argmin = 0u64;
    let mut violations = usize::from(injected.gap < VIOLATION_THRESHOLD);
    for (i, &gap) in gaps.iter().enumerate() {
        if gap < VIOLATION_THRESHOLD {
            violations += 1;
        }
        if gap < min_gap {
            min_gap = gap;
            argmin = i as u64 + 1;
        }
    }
    let argmin_instance = if argmin == 0 {
        injected.clone()
    } else {
        let (shift, rv) = random_instance(cfg, argmin);
        Instance {
            shift,
            rv,
            gap: min_gap,
        }
    };

    Ok(ScanReport {
        spec: *spec,
        seed: cfg.seed,
        trials: cfg.trials,
        min_gap,
        argmin_instance,
        violations,
        injected,
    })
}
