//! Increasing test functions on `[0, inf)` with closed-form value, first and
//! second derivative and inverse.
//!
//! Four families are built in:
//!
//! | family              | f(x)                                  | string form      |
//! |---------------------|---------------------------------------|------------------|
//! | `Exponential`       | `exp(lambda * x)`                     | `exp:lambda=0.5` |
//! | `Power`             | `x^m`, `m >= 1`                       | `pow:m=2`        |
//! | `QuadConcaveDeriv`  | `x + x^2 / 2`                         | `quad`           |
//! | `Remark2Piecewise`  | `x` on `[0,1]`, `(1 + x^2) / 2` after | `remark2`        |
//!
//! The last one is convex but violates the shift inequality, so it serves as
//! the standard negative control.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Slack used when checking that the sampled `f''/f'` ratio is nonincreasing.
pub const CLASS_S_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionSpec {
    Exponential { lambda: f64 },
    Power { m: f64 },
    QuadConcaveDeriv,
    Remark2Piecewise,
}

/// Outcome of the sampled `f''/f'` monotonicity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSCheck {
    pub holds: bool,
    /// First grid point where the ratio increased.
    pub first_violation: Option<f64>,
}

impl FunctionSpec {
    pub fn exponential(lambda: f64) -> Result<Self> {
        let spec = FunctionSpec::Exponential { lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn power(m: f64) -> Result<Self> {
        let spec = FunctionSpec::Power { m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FunctionSpec::Exponential { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                Err(Error::Argument(format!("lambda must be > 0, got {lambda}")))
            }
            FunctionSpec::Power { m } if !(m.is_finite() && m >= 1.0) => {
                Err(Error::Argument(format!("m must be >= 1, got {m}")))
            }
            _ => Ok(()),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            FunctionSpec::Exponential { .. } => "Exponential",
            FunctionSpec::Power { .. } => "Power",
            FunctionSpec::QuadConcaveDeriv => "QuadConcaveDeriv",
            FunctionSpec::Remark2Piecewise => "Remark2Piecewise",
        }
    }

    /// `f(x)` for `x >= 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// `f'(x)`; at the `Remark2Piecewise` kink the left derivative is returned.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.deriv_unchecked(x))
    }

    pub fn second_deriv(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(match *self {
            FunctionSpec::Exponential { lambda } => lambda * lambda * (lambda * x).exp(),
            FunctionSpec::Power { m } => {
                if m == 1.0 {
                    0.0
                } else {
                    m * (m - 1.0) * pow(x, m - 2.0)
                }
            }
            FunctionSpec::QuadConcaveDeriv => 1.0,
            FunctionSpec::Remark2Piecewise => {
                if x <= 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
        })
    }

    /// The unique `x >= 0` with `f(x) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let min = self.eval_unchecked(0.0);
        if y.is_nan() || y < min {
            return Err(Error::Range { y, min });
        }
        Ok(self.inverse_unchecked(y))
    }

    /// Checks that `f''(x) / f'(x)` is nonincreasing along `grid`.
    pub fn class_s_condition(&self, grid: &[f64]) -> Result<ClassSCheck> {
        if grid.len() < 2 {
            return Err(Error::Argument(format!(
                "class-S grid needs at least 2 points, got {}",
                grid.len()
            )));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument(
                "class-S grid must be sorted ascending".into(),
            ));
        }
        check_domain(grid[0])?;

        let mut prev = self.curvature_ratio(grid[0]);
        for &x in &grid[1..] {
            let ratio = self.curvature_ratio(x);
            if ratio > prev + CLASS_S_TOLERANCE {
                return Ok(ClassSCheck {
                    holds: false,
                    first_violation: Some(x),
                });
            }
            prev = ratio;
        }
        Ok(ClassSCheck {
            holds: true,
            first_violation: None,
        })
    }

    /// `f''(x) / f'(x)` in closed form. Power functions give `+inf` at the
    /// origin when `m > 1`.
    pub fn curvature_ratio(&self, x: f64) -> f64 {
        match *self {
            FunctionSpec::Exponential { lambda } => lambda,
            FunctionSpec::Power { m } => {
                if m == 1.0 {
                    0.0
                } else if x == 0.0 {
                    f64::INFINITY
                } else {
                    (m - 1.0) / x
                }
            }
            FunctionSpec::QuadConcaveDeriv => 1.0 / (1.0 + x),
            FunctionSpec::Remark2Piecewise => {
                if x <= 1.0 {
                    0.0
                } else {
                    1.0 / x
                }
            }
        }
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        match *self {
            FunctionSpec::Exponential { lambda } => (lambda * x).exp(),
            FunctionSpec::Power { m } => pow(x, m),
            FunctionSpec::QuadConcaveDeriv => x + 0.5 * x * x,
            FunctionSpec::Remark2Piecewise => {
                if x <= 1.0 {
                    x
                } else {
                    0.5 * (1.0 + x * x)
                }
            }
        }
    }

    pub(crate) fn deriv_unchecked(&self, x: f64) -> f64 {
        match *self {
            FunctionSpec::Exponential { lambda } => lambda * (lambda * x).exp(),
            FunctionSpec::Power { m } => {
                if m == 1.0 {
                    1.0
                } else {
                    m * pow(x, m - 1.0)
                }
            }
            FunctionSpec::QuadConcaveDeriv => 1.0 + x,
            FunctionSpec::Remark2Piecewise => {
                if x <= 1.0 {
                    1.0
                } else {
                    x
                }
            }
        }
    }

    pub(crate) fn inverse_unchecked(&self, y: f64) -> f64 {
        match *self {
            FunctionSpec::Exponential { lambda } => y.ln() / lambda,
            FunctionSpec::Power { m } => {
                if m == 1.0 {
                    y
                } else if m == 2.0 {
                    y.sqrt()
                } else if m == 3.0 {
                    y.cbrt()
                } else {
                    y.powf(1.0 / m)
                }
            }
            // Root of x^2/2 + x - y = 0 in cancellation-free form.
            FunctionSpec::QuadConcaveDeriv => 2.0 * y / (1.0 + (1.0 + 2.0 * y).sqrt()),
            FunctionSpec::Remark2Piecewise => {
                if y <= 1.0 {
                    y
                } else {
                    (2.0 * y - 1.0).sqrt()
                }
            }
        }
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::Domain { x })
    } else {
        Ok(())
    }
}

fn pow(x: f64, m: f64) -> f64 {
    if m.fract() == 0.0 && m.abs() <= i32::MAX as f64 {
        x.powi(m as i32)
    } else {
        x.powf(m)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Exponential { lambda } => write!(f, "exp:lambda={lambda}"),
            FunctionSpec::Power { m } => write!(f, "pow:m={m}"),
            FunctionSpec::QuadConcaveDeriv => f.write_str("quad"),
            FunctionSpec::Remark2Piecewise => f.write_str("remark2"),
        }
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, params) = match s.split_once(':') {
            Some((family, params)) => (family, Some(params)),
            None => (s, None),
        };

        let spec = match family {
            "exp" => FunctionSpec::Exponential {
                lambda: parse_param(params, "lambda")?,
            },
            "pow" => FunctionSpec::Power {
                m: parse_param(params, "m")?,
            },
            "quad" | "remark2" => {
                if let Some(p) = params {
                    return Err(Error::Parse {
                        token: p.to_string(),
                        reason: format!("`{family}` takes no parameters"),
                    });
                }
                if family == "quad" {
                    FunctionSpec::QuadConcaveDeriv
                } else {
                    FunctionSpec::Remark2Piecewise
                }
            }
            other => {
                return Err(Error::Parse {
                    token: other.to_string(),
                    reason: "unknown function family (expected exp, pow, quad or remark2)".into(),
                })
            }
        };
        spec.validate().map_err(|e| match e {
            Error::Argument(reason) => Error::Parse {
                token: s.to_string(),
                reason,
            },
            other => other,
        })?;
        Ok(spec)
    }
}

fn parse_param(params: Option<&str>, name: &str) -> Result<f64> {
    let Some(params) = params else {
        return Err(Error::Parse {
            token: String::new(),
            reason: format!("missing parameter `{name}=<value>`"),
        });
    };
    let (key, value) = params.split_once('=').ok_or_else(|| Error::Parse {
        token: params.to_string(),
        reason: format!("expected `{name}=<value>`"),
    })?;
    if key.trim() != name {
        return Err(Error::Parse {
            token: key.to_string(),
            reason: format!("unknown parameter (expected `{name}`)"),
        });
    }
    value.trim().parse::<f64>().map_err(|_| Error::Parse {
        token: value.to_string(),
        reason: format!("`{name}` is not a number"),
    })
}

impl Serialize for FunctionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FunctionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<FunctionSpec> {
        vec![
            FunctionSpec::Exponential { lambda: 0.5 },
            FunctionSpec::Exponential { lambda: 1.0 },
            FunctionSpec::Exponential { lambda: 2.0 },
            FunctionSpec::Power { m: 1.0 },
            FunctionSpec::Power { m: 2.0 },
            FunctionSpec::Power { m: 3.0 },
            FunctionSpec::Power { m: 2.5 },
            FunctionSpec::QuadConcaveDeriv,
            FunctionSpec::Remark2Piecewise,
        ]
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn eval_examples() {
        let e = FunctionSpec::exponential(0.5).unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 1.0);
        assert_eq!(FunctionSpec::power(2.0).unwrap().eval(3.0).unwrap(), 9.0);
        assert_eq!(FunctionSpec::Remark2Piecewise.eval(2.0).unwrap(), 2.5);
        assert_eq!(FunctionSpec::Remark2Piecewise.eval(0.5).unwrap(), 0.5);
    }

    #[test]
    fn negative_argument_is_a_domain_error() {
        for spec in all_families() {
            assert_eq!(spec.eval(-0.1), Err(Error::Domain { x: -0.1 }));
            assert!(matches!(spec.deriv(-1.0), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn deriv_examples() {
        assert_eq!(
            FunctionSpec::Exponential { lambda: 1.0 }
                .deriv(0.0)
                .unwrap(),
            1.0
        );
        assert_eq!(FunctionSpec::Power { m: 3.0 }.deriv(2.0).unwrap(), 12.0);
        // kink: left derivative
        assert_eq!(FunctionSpec::Remark2Piecewise.deriv(1.0).unwrap(), 1.0);

        let quad = FunctionSpec::QuadConcaveDeriv;
        let h = 1e-6;
        let fd = (quad.eval(2.0 + h).unwrap() - quad.eval(2.0 - h).unwrap()) / (2.0 * h);
        assert!((fd - 3.0).abs() < 1e-6);
        assert_eq!(quad.deriv(2.0).unwrap(), 3.0);
    }

    #[test]
    fn inverse_examples() {
        let e = FunctionSpec::Exponential { lambda: 0.5 };
        assert_eq!(e.inverse(1.0).unwrap(), 0.0);
        assert_eq!(FunctionSpec::Power { m: 2.0 }.inverse(9.0).unwrap(), 3.0);
        // f(0) itself must be accepted
        assert_eq!(FunctionSpec::Power { m: 2.0 }.inverse(0.0).unwrap(), 0.0);

        // independent bisection oracle on x + x^2/2 = 1 + sqrt(2)
        let target = 1.0 + 2f64.sqrt();
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + mid * mid / 2.0 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = FunctionSpec::QuadConcaveDeriv.inverse(target).unwrap();
        assert!((x - lo).abs() < 1e-12);
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn inverse_below_image_is_a_range_error() {
        let e = FunctionSpec::Exponential { lambda: 1.0 };
        assert_eq!(e.inverse(0.5), Err(Error::Range { y: 0.5, min: 1.0 }));
        assert!(FunctionSpec::QuadConcaveDeriv.inverse(-1e-9).is_err());
    }

    #[test]
    fn class_s_examples() {
        let e = FunctionSpec::Exponential { lambda: 2.0 };
        assert!(e.class_s_condition(&[0.0, 1.0, 2.0, 3.0]).unwrap().holds);
        let q = FunctionSpec::QuadConcaveDeriv;
        assert!(q.class_s_condition(&[0.0, 0.5, 1.0, 2.0]).unwrap().holds);

        let r = FunctionSpec::Remark2Piecewise
            .class_s_condition(&[0.5, 2.0])
            .unwrap();
        assert!(!r.holds);
        assert_eq!(r.first_violation, Some(2.0));

        assert!(matches!(
            e.class_s_condition(&[1.0]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn class_s_matches_families() {
        let g = grid(0.0, 20.0, 1000);
        for lambda in [0.5, 1.0, 2.0] {
            let spec = FunctionSpec::Exponential { lambda };
            assert!(spec.class_s_condition(&g).unwrap().holds);
        }
        for m in [1.0, 2.0, 3.0] {
            let spec = FunctionSpec::Power { m };
            assert!(spec.class_s_condition(&g).unwrap().holds, "m = {m}");
        }
        assert!(
            FunctionSpec::QuadConcaveDeriv
                .class_s_condition(&g)
                .unwrap()
                .holds
        );
        assert!(
            !FunctionSpec::Remark2Piecewise
                .class_s_condition(&g)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn closed_form_ratio_matches_finite_differences() {
        // second-order central differences, h = 1e-4, away from the origin
        let h = 1e-4;
        for spec in [
            FunctionSpec::Exponential { lambda: 0.7 },
            FunctionSpec::Power { m: 2.5 },
            FunctionSpec::QuadConcaveDeriv,
        ] {
            for x in grid(0.5, 5.0, 40) {
                let f = |t: f64| spec.eval(t).unwrap();
                let f2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                let f1 = spec.deriv(x).unwrap();
                let rel = (f2 / f1 - spec.curvature_ratio(x)).abs()
                    / spec.curvature_ratio(x).abs().max(1e-3);
                assert!(rel < 1e-4, "{spec} at {x}: {rel}");
            }
        }
    }

    #[test]
    fn deriv_matches_central_difference() {
        let h = 1e-6;
        for spec in all_families() {
            for x in grid(0.0, 20.0, 1000) {
                if x < h || (x - 1.0).abs() < 10.0 * h {
                    continue;
                }
                let fd = (spec.eval(x + h).unwrap() - spec.eval(x - h).unwrap()) / (2.0 * h);
                let d = spec.deriv(x).unwrap();
                let rel = (fd - d).abs() / d.abs().max(1.0);
                assert!(rel < 1e-5, "{spec} at {x}: fd {fd} vs {d}");
            }
        }
    }

    #[test]
    fn inverse_round_trip_on_grid() {
        for spec in all_families() {
            for x in grid(0.0, 20.0, 1000) {
                let y = spec.eval(x).unwrap();
                let back = spec.inverse(y).unwrap();
                assert!(
                    (back - x).abs() <= 1e-10 * x.max(1.0),
                    "{spec}: {x} -> {back}"
                );
                let again = spec.eval(back).unwrap();
                assert!((again - y).abs() <= 1e-10 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn increasing_and_convex_on_grid() {
        let g = grid(0.0, 20.0, 500);
        for spec in all_families() {
            for w in g.windows(2) {
                assert!(spec.eval(w[0]).unwrap() < spec.eval(w[1]).unwrap());
            }
            if spec == FunctionSpec::Remark2Piecewise {
                continue;
            }
            for w in g.windows(2) {
                assert!(spec.deriv(w[0]).unwrap() <= spec.deriv(w[1]).unwrap());
            }
        }
        let q = FunctionSpec::QuadConcaveDeriv;
        for w in g.windows(2) {
            assert!(q.second_deriv(w[1]).unwrap() <= q.second_deriv(w[0]).unwrap());
        }
    }

    #[test]
    fn parse_and_display_round_trip() {
        for spec in all_families() {
            let s = spec.to_string();
            assert_eq!(s.parse::<FunctionSpec>().unwrap(), spec, "{s}");
        }
        assert_eq!(
            "exp:lambda=0.5".parse::<FunctionSpec>().unwrap(),
            FunctionSpec::Exponential { lambda: 0.5 }
        );
    }

    #[test]
    fn parse_errors_name_the_token() {
        let err = "exp:lambda=-1".parse::<FunctionSpec>().unwrap_err();
        assert!(err.to_string().contains("lambda must be > 0"), "{err}");

        let err = "cosh".parse::<FunctionSpec>().unwrap_err();
        assert!(err.to_string().contains("`cosh`"), "{err}");

        let err = "pow:k=2".parse::<FunctionSpec>().unwrap_err();
        assert!(err.to_string().contains("`k`"), "{err}");

        let err = "pow:m=two".parse::<FunctionSpec>().unwrap_err();
        assert!(err.to_string().contains("`two`"), "{err}");

        let err = "pow:m=0.5".parse::<FunctionSpec>().unwrap_err();
        assert!(err.to_string().contains("m must be >= 1"), "{err}");

        let err = "quad:x=1".parse::<FunctionSpec>().unwrap_err();
        assert!(err.to_string().contains("`x=1`"), "{err}");
    }
}
