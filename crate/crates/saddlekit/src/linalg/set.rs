use serde::{Deserialize, Serialize};

use super::{norm, sub};
use crate::error::{Error, Result};

/// Relative slack under which a point counts as already inside a curved
/// set; keeps re-projection a no-op despite rounding in the scale factors.
const PROJ_SNAP: f64 = 1e-12;

/// Per-block feasible set. Every variant except `Free` is compact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConvexSet {
    /// `{v : lo ≤ v ≤ hi}` componentwise.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{v : ‖v − center‖ ≤ radius}`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `{v ≥ 0 : Σ v = 1}`.
    Simplex { dim: usize },
    /// `{v ≥ 0 : ‖v‖ ≤ radius}`, the nonnegative orthant cut by a ball.
    NonnegBall { dim: usize, radius: f64 },
    /// All of `ℝᵈ`.
    Free { dim: usize },
}

impl ConvexSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lo.len(),
                        got: hi.len(),
                    });
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidParam("box lower bound exceeds upper".into()));
                }
            }
            ConvexSet::Ball { radius, .. } | ConvexSet::NonnegBall { radius, .. } => {
                if *radius < 0.0 {
                    return Err(Error::InvalidParam("negative ball radius".into()));
                }
            }
            ConvexSet::Simplex { dim } | ConvexSet::Free { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParam("zero-dimensional set".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Simplex { dim } | ConvexSet::NonnegBall { dim, .. } | ConvexSet::Free { dim } => *dim,
        }
    }

    /// Exact Euclidean diameter; errors for the non-compact `Free` variant.
    pub fn diameter(&self) -> Result<f64> {
        match self {
            ConvexSet::Box { lo, hi } => Ok(norm(&sub(hi, lo))),
            ConvexSet::Ball { radius, .. } => Ok(2.0 * radius),
            // farthest vertex pair is (e_i, e_j), i ≠ j
            ConvexSet::Simplex { dim } => Ok(if *dim >= 2 { 2f64.sqrt() } else { 0.0 }),
            // two orthogonal boundary points for dim ≥ 2; an interval for dim 1
            ConvexSet::NonnegBall { dim, radius } => {
                Ok(if *dim >= 2 { radius * 2f64.sqrt() } else { *radius })
            }
            ConvexSet::Free { .. } => Err(Error::NonCompact),
        }
    }

    /// A deterministic interior-leaning reference point: box midpoint, ball
    /// center, simplex barycenter.
    pub fn center(&self) -> Vec<f64> {
        match self {
            ConvexSet::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            ConvexSet::Ball { center, .. } => center.clone(),
            ConvexSet::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
            ConvexSet::NonnegBall { dim, radius } => {
                vec![0.5 * radius / (*dim as f64).sqrt(); *dim]
            }
            ConvexSet::Free { dim } => vec![0.0; *dim],
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        if v.len() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::Box { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| *x >= l - tol && *x <= h + tol),
            ConvexSet::Ball { center, radius } => norm(&sub(v, center)) <= radius + tol,
            ConvexSet::Simplex { .. } => {
                v.iter().all(|x| *x >= -tol) && (v.iter().sum::<f64>() - 1.0).abs() <= tol
            }
            ConvexSet::NonnegBall { radius, .. } => {
                v.iter().all(|x| *x >= -tol) && norm(v) <= radius + tol
            }
            ConvexSet::Free { .. } => true,
        }
    }

    /// Euclidean projection onto the set.
    ///
    /// Points already in the set (within a relative snap of a few ulps) are
    /// returned unchanged, which makes re-projection exactly idempotent.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(match self {
            ConvexSet::Box { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (l, h))| x.max(*l).min(*h))
                .collect(),
            ConvexSet::Ball { center, radius } => {
                let d = sub(v, center);
                let n = norm(&d);
                if n <= radius * (1.0 + PROJ_SNAP) {
                    v.to_vec()
                } else {
                    let s = radius / n;
                    center.iter().zip(&d).map(|(c, di)| c + s * di).collect()
                }
            }
            ConvexSet::Simplex { .. } => {
                if v.iter().all(|x| *x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= PROJ_SNAP
                {
                    v.to_vec()
                } else {
                    project_simplex(v)
                }
            }
            ConvexSet::NonnegBall { radius, .. } => {
                // project onto the orthant, then radially onto the ball;
                // exact because the ball is centered at the cone apex
                let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
                let n = norm(&clipped);
                if n <= radius * (1.0 + PROJ_SNAP) {
                    clipped
                } else {
                    let s = radius / n;
                    clipped.iter().map(|x| x * s).collect()
                }
            }
            ConvexSet::Free { .. } => v.to_vec(),
        })
    }
}

/// Projection onto the unit simplex by sort-and-threshold. Equal components
/// straddling the threshold receive the identical shift, so tie handling is
/// deterministic.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn box_projection_clamps() {
        let s = ConvexSet::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        assert_eq!(s.project(&[2.0, -1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn ball_projection_scales_radially() {
        let s = ConvexSet::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let p = s.project(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn simplex_projection_vertex() {
        let s = ConvexSet::Simplex { dim: 3 };
        let p = s.project(&[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn simplex_projection_ties_split_evenly() {
        let s = ConvexSet::Simplex { dim: 2 };
        let p = s.project(&[3.0, 3.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn nonneg_ball_projection() {
        let s = ConvexSet::NonnegBall { dim: 2, radius: 1.0 };
        // negative coordinate clipped first, then radial shrink
        let p = s.project(&[2.0, -3.0]).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        let q = s.project(&[0.3, 0.4]).unwrap();
        assert_eq!(q, vec![0.3, 0.4]);
    }

    #[test]
    fn diameters() {
        let b = ConvexSet::Box {
            lo: vec![0.0; 4],
            hi: vec![1.0; 4],
        };
        assert_abs_diff_eq!(b.diameter().unwrap(), 2.0, epsilon = 1e-15);
        let ball = ConvexSet::Ball {
            center: vec![1.0],
            radius: 2.5,
        };
        assert_abs_diff_eq!(ball.diameter().unwrap(), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            ConvexSet::Simplex { dim: 3 }.diameter().unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(ConvexSet::Simplex { dim: 1 }.diameter().unwrap(), 0.0);
        assert_eq!(
            ConvexSet::Free { dim: 2 }.diameter(),
            Err(Error::NonCompact)
        );
    }

    #[test]
    fn projection_dimension_mismatch() {
        let s = ConvexSet::Simplex { dim: 3 };
        assert!(matches!(
            s.project(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn box_validation_rejects_crossed_bounds() {
        let s = ConvexSet::Box {
            lo: vec![1.0],
            hi: vec![0.0],
        };
        assert!(s.validate().is_err());
    }
}
