use serde::{Deserialize, Serialize};

use super::{dot, norm};
use crate::error::{Error, Result};

/// Per-block separable objective term (the `h_i` and `g_j` pieces).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SeparableTerm {
    Zero,
    /// `½ Σ diag_i v_i² + Σ linear_i v_i + constant`; `diag ≥ 0`.
    Quadratic {
        diag: Vec<f64>,
        linear: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    /// `weight · ‖v‖₁`.
    ScaledL1 { weight: f64 },
    /// `max_p ⟨slopes[p], v⟩ + offsets[p]`.
    PiecewiseLinearMax {
        slopes: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
}

impl SeparableTerm {
    pub fn quadratic(diag: Vec<f64>, linear: Vec<f64>) -> Self {
        SeparableTerm::Quadratic {
            diag,
            linear,
            constant: 0.0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            SeparableTerm::Zero => Ok(()),
            SeparableTerm::Quadratic { diag, linear, .. } => {
                if diag.len() != dim || linear.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: diag.len(),
                    });
                }
                if diag.iter().any(|d| *d < 0.0) {
                    return Err(Error::InvalidParam(
                        "quadratic term needs nonnegative curvature".into(),
                    ));
                }
                Ok(())
            }
            SeparableTerm::ScaledL1 { weight } => {
                if *weight < 0.0 {
                    return Err(Error::InvalidParam("negative l1 weight".into()));
                }
                Ok(())
            }
            SeparableTerm::PiecewiseLinearMax { slopes, offsets } => {
                if slopes.is_empty() || slopes.len() != offsets.len() {
                    return Err(Error::InvalidParam(
                        "piecewise-linear max needs at least one piece".into(),
                    ));
                }
                if slopes.iter().any(|s| s.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: slopes[0].len(),
                    });
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        match self {
            SeparableTerm::Zero => 0.0,
            SeparableTerm::Quadratic {
                diag,
                linear,
                constant,
            } => {
                let q: f64 = v.iter().zip(diag).map(|(x, d)| 0.5 * d * x * x).sum();
                q + dot(linear, v) + constant
            }
            SeparableTerm::ScaledL1 { weight } => weight * v.iter().map(|x| x.abs()).sum::<f64>(),
            SeparableTerm::PiecewiseLinearMax { slopes, offsets } => slopes
                .iter()
                .zip(offsets)
                .map(|(s, o)| dot(s, v) + o)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// A deterministic subgradient: sign (zero at kinks) for the l1 term,
    /// the lowest-index maximizing piece for the piecewise max.
    pub fn subgradient(&self, v: &[f64]) -> Vec<f64> {
        match self {
            SeparableTerm::Zero => vec![0.0; v.len()],
            SeparableTerm::Quadratic { diag, linear, .. } => v
                .iter()
                .zip(diag.iter().zip(linear))
                .map(|(x, (d, l))| d * x + l)
                .collect(),
            SeparableTerm::ScaledL1 { weight } => v
                .iter()
                .map(|x| {
                    if *x > 0.0 {
                        *weight
                    } else if *x < 0.0 {
                        -*weight
                    } else {
                        0.0
                    }
                })
                .collect(),
            SeparableTerm::PiecewiseLinearMax { slopes, offsets } => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (p, (s, o)) in slopes.iter().zip(offsets).enumerate() {
                    let val = dot(s, v) + o;
                    if val > best_val {
                        best_val = val;
                        best = p;
                    }
                }
                slopes[best].clone()
            }
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, SeparableTerm::Zero | SeparableTerm::Quadratic { .. })
    }

    /// Strong-convexity modulus: the smallest quadratic curvature, zero for
    /// every other variant.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            SeparableTerm::Quadratic { diag, .. } => diag.iter().cloned().fold(f64::INFINITY, f64::min),
            _ => 0.0,
        }
    }

    /// Uniform bound on subgradient norms, where one exists.
    pub fn subgradient_bound(&self, dim: usize) -> Option<f64> {
        match self {
            SeparableTerm::Zero => Some(0.0),
            SeparableTerm::Quadratic { .. } => None,
            SeparableTerm::ScaledL1 { weight } => Some(weight * (dim as f64).sqrt()),
            SeparableTerm::PiecewiseLinearMax { slopes, .. } => Some(
                slopes
                    .iter()
                    .map(|s| norm(s))
                    .fold(0.0, f64::max),
            ),
        }
    }

    /// Splits into a smooth quadratic part `(diag, linear)` padded to `dim`
    /// and a residual nonsmooth term, so composite solvers can fold the
    /// smooth part into their gradient.
    pub fn smooth_split(&self, dim: usize) -> (Vec<f64>, Vec<f64>, SeparableTerm) {
        match self {
            SeparableTerm::Quadratic { diag, linear, .. } => {
                (diag.clone(), linear.clone(), SeparableTerm::Zero)
            }
            other => (vec![0.0; dim], vec![0.0; dim], other.clone()),
        }
    }
}
