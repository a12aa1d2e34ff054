//! Departure and arrival cost functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_smoothing() -> f64 {
    0.05
}

/// A continuously differentiable cost of time.
///
/// `Vickrey` is the engineering schedule cost `ψ(τ) = τ + Ψ(τ − target)` with
/// `Ψ(x) = ((l − e)/2)·x + ((l + e)/2)·sqrt(x² + ε²)`, a smoothed version of
/// `e·(−x)⁺ + l·x⁺`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostFunction {
    /// `a + b·t`
    Affine { a: f64, b: f64 },
    /// `a + b·t + c·t²`
    Quadratic { a: f64, b: f64, c: f64 },
    /// `Σ coeffs[i]·tⁱ`
    Polynomial { coeffs: Vec<f64> },
    Vickrey {
        target: f64,
        early_rate: f64,
        late_rate: f64,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
}

impl CostFunction {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Self::Affine { a, b } if !finite(&[*a, *b]) => Err(Error::InvalidCost("non-finite coefficient".into())),
            Self::Quadratic { a, b, c } if !finite(&[*a, *b, *c]) => {
                Err(Error::InvalidCost("non-finite coefficient".into()))
            }
            Self::Polynomial { coeffs } if coeffs.is_empty() || !finite(coeffs) => {
                Err(Error::InvalidCost("polynomial needs at least one finite coefficient".into()))
            }
            Self::Vickrey {
                target,
                early_rate,
                late_rate,
                smoothing,
            } => {
                if !finite(&[*target, *early_rate, *late_rate, *smoothing]) {
                    return Err(Error::InvalidCost("non-finite Vickrey parameter".into()));
                }
                if *early_rate < 0.0 || *late_rate < 0.0 {
                    return Err(Error::InvalidCost("Vickrey rates must be non-negative".into()));
                }
                if *early_rate >= 1.0 {
                    return Err(Error::InvalidCost(format!(
                        "Vickrey early rate {early_rate} must be below 1 so that arrival cost increases"
                    )));
                }
                if *smoothing <= 0.0 {
                    return Err(Error::InvalidCost("Vickrey smoothing must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Affine { a, b } => a + b * t,
            Self::Quadratic { a, b, c } => a + t * (b + c * t),
            Self::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Self::Vickrey {
                target,
                early_rate: e,
                late_rate: l,
                smoothing: eps,
            } => {
                let x = t - target;
                t + 0.5 * (l - e) * x + 0.5 * (l + e) * x.hypot(*eps)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Self::Affine { b, .. } => *b,
            Self::Quadratic { b, c, .. } => b + 2.0 * c * t,
            Self::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c),
            Self::Vickrey {
                target,
                early_rate: e,
                late_rate: l,
                smoothing: eps,
            } => {
                let x = t - target;
                1.0 + 0.5 * (l - e) + 0.5 * (l + e) * x / x.hypot(*eps)
            }
        }
    }

    /// An antiderivative, used for exact integration against piecewise-constant rates.
    pub fn antiderivative(&self, t: f64) -> f64 {
        match self {
            Self::Affine { a, b } => t * (a + 0.5 * b * t),
            Self::Quadratic { a, b, c } => t * (a + t * (0.5 * b + c * t / 3.0)),
            Self::Polynomial { coeffs } => {
                t * coeffs
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (i, c)| acc * t + c / (i + 1) as f64)
            }
            Self::Vickrey {
                target,
                early_rate: e,
                late_rate: l,
                smoothing: eps,
            } => {
                let x = t - target;
                0.5 * t * t
                    + 0.25 * (l - e) * x * x
                    + 0.25 * (l + e) * (x * x.hypot(*eps) + eps * eps * (x / eps).asinh())
            }
        }
    }

    /// `∫_{t0}^{t1} self`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        match self {
            // the closed forms above lose digits far from the origin; shift instead
            Self::Affine { a, b } => (t1 - t0) * (a + 0.5 * b * (t0 + t1)),
            _ => self.antiderivative(t1) - self.antiderivative(t0),
        }
    }

    /// The schedule penalty `Ψ` of a Vickrey cost, if this is one.
    pub fn schedule_penalty(&self, t: f64) -> Option<(f64, f64)> {
        match self {
            Self::Vickrey { .. } => Some((self.value(t) - t, self.derivative(t) - 1.0)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn samples() -> Vec<CostFunction> {
        vec![
            CostFunction::Affine { a: 1.0, b: -2.0 },
            CostFunction::Quadratic { a: 0.5, b: 1.0, c: 0.3 },
            CostFunction::Polynomial {
                coeffs: vec![1.0, -1.0, 0.5, 0.25],
            },
            CostFunction::Vickrey {
                target: 2.0,
                early_rate: 0.5,
                late_rate: 2.0,
                smoothing: 0.05,
            },
        ]
    }

    #[test]
    fn polynomial_cube() {
        let c = CostFunction::Polynomial {
            coeffs: vec![0.0, 0.0, 0.0, 1.0],
        };
        assert_eq!(c.value(2.0), 8.0);
        assert_eq!(c.derivative(0.0), 0.0);
        assert_eq!(c.derivative(2.0), 12.0);
        assert_eq!(c.antiderivative(2.0), 4.0);
    }

    #[test]
    fn vickrey_penalty_shape() {
        let c = &samples()[3];
        let (p_early, d_early) = c.schedule_penalty(-8.0).unwrap();
        let (p_late, d_late) = c.schedule_penalty(12.0).unwrap();
        assert_abs_diff_eq!(p_early, 0.5 * 10.0, epsilon = 1e-3);
        assert_abs_diff_eq!(p_late, 2.0 * 10.0, epsilon = 1e-3);
        assert_abs_diff_eq!(d_early, -0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(d_late, 2.0, epsilon = 1e-4);
        assert!(c.schedule_penalty(2.0).unwrap().0 > 0.0);
    }

    #[test]
    fn vickrey_rejects_steep_early_rate() {
        let c = CostFunction::Vickrey {
            target: 0.0,
            early_rate: 1.0,
            late_rate: 2.0,
            smoothing: 0.05,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn serde_defaults_smoothing() {
        let c: CostFunction =
            serde_json::from_str(r#"{"kind":"vickrey","target":1,"early_rate":0.5,"late_rate":2}"#).unwrap();
        assert_eq!(
            c,
            CostFunction::Vickrey {
                target: 1.0,
                early_rate: 0.5,
                late_rate: 2.0,
                smoothing: 0.05
            }
        );
    }

    proptest! {
        #[test]
        fn derivative_matches_difference_quotient(t in -5.0..5.0f64, idx in 0usize..4) {
            let c = &samples()[idx];
            let h = 1e-5;
            let fd = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
            prop_assert!((fd - c.derivative(t)).abs() < 1e-5 * (1.0 + fd.abs()));
        }

        #[test]
        fn integral_matches_simpson(t0 in -5.0..5.0f64, w in 0.0..3.0f64, idx in 0usize..4) {
            let c = &samples()[idx];
            let t1 = t0 + w;
            let n = 20000;
            let hstep = w / n as f64;
            let mut s = c.value(t0) + c.value(t1);
            for i in 1..n {
                let f = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += f * c.value(t0 + i as f64 * hstep);
            }
            let simpson = s * hstep / 3.0;
            prop_assert!((simpson - c.integral(t0, t1)).abs() < 1e-7 * (1.0 + simpson.abs()));
        }
    }
}
