use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, operator_norm, Matrix};

const NORM_TOL: f64 = 1e-12;

/// Smooth convex-concave coupling
/// `Ψ(x,y) = ½ xᵀdiag(p)x + c_xᵀx + xᵀK y − ½ yᵀdiag(q)y − c_yᵀy`.
///
/// Keeping the coupling structural (rather than a black-box closure) makes
/// problems serializable and the Lipschitz constants exactly computable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCoupling {
    pub p_diag: Vec<f64>,
    pub q_diag: Vec<f64>,
    pub k: Matrix,
    pub c_x: Vec<f64>,
    pub c_y: Vec<f64>,
}

/// Coupling-term oracle `Ψ, ∇Ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    Quadratic(QuadraticCoupling),
}

impl Coupling {
    pub fn zero(dx: usize, dy: usize) -> Self {
        Coupling::Quadratic(QuadraticCoupling {
            p_diag: vec![0.0; dx],
            q_diag: vec![0.0; dy],
            k: Matrix::zeros(dx, dy),
            c_x: vec![0.0; dx],
            c_y: vec![0.0; dy],
        })
    }

    pub fn dx(&self) -> usize {
        match self {
            Coupling::Quadratic(q) => q.p_diag.len(),
        }
    }

    pub fn dy(&self) -> usize {
        match self {
            Coupling::Quadratic(q) => q.q_diag.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Coupling::Quadratic(q) => {
                if q.k.rows() != q.p_diag.len() || q.k.cols() != q.q_diag.len() {
                    return Err(Error::DimensionMismatch {
                        expected: q.p_diag.len(),
                        got: q.k.rows(),
                    });
                }
                if q.c_x.len() != q.p_diag.len() || q.c_y.len() != q.q_diag.len() {
                    return Err(Error::DimensionMismatch {
                        expected: q.p_diag.len(),
                        got: q.c_x.len(),
                    });
                }
                if q.p_diag.iter().any(|v| *v < 0.0) || q.q_diag.iter().any(|v| *v < 0.0) {
                    return Err(Error::InvalidParam(
                        "coupling curvature must be convex-concave".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Coupling::Quadratic(q) => {
                let quad_x: f64 = x.iter().zip(&q.p_diag).map(|(v, p)| 0.5 * p * v * v).sum();
                let quad_y: f64 = y.iter().zip(&q.q_diag).map(|(v, d)| 0.5 * d * v * v).sum();
                let cross = dot(x, &q.k.matvec(y));
                quad_x + dot(&q.c_x, x) + cross - quad_y - dot(&q.c_y, y)
            }
        }
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match self {
            Coupling::Quadratic(q) => {
                let mut g = q.k.matvec(y);
                for ((gi, xi), (p, c)) in g.iter_mut().zip(x).zip(q.p_diag.iter().zip(&q.c_x)) {
                    *gi += p * xi + c;
                }
                g
            }
        }
    }

    pub fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match self {
            Coupling::Quadratic(q) => {
                let mut g = q.k.matvec_t(x);
                for ((gi, yi), (d, c)) in g.iter_mut().zip(y).zip(q.q_diag.iter().zip(&q.c_y)) {
                    *gi -= d * yi + c;
                }
                g
            }
        }
    }

    /// Lipschitz constant of the full gradient map: the spectral norm of the
    /// symmetric Jacobian `[[P, K], [Kᵀ, −Q]]`.
    pub fn lipschitz_full(&self) -> f64 {
        match self {
            Coupling::Quadratic(q) => {
                let dx = q.p_diag.len();
                let dy = q.q_diag.len();
                if dx + dy == 0 {
                    return 0.0;
                }
                let j = Matrix::from_fn(dx + dy, dx + dy, |i, jj| {
                    if i < dx && jj < dx {
                        if i == jj {
                            q.p_diag[i]
                        } else {
                            0.0
                        }
                    } else if i < dx {
                        q.k[(i, jj - dx)]
                    } else if jj < dx {
                        q.k[(jj, i - dx)]
                    } else if i == jj {
                        -q.q_diag[i - dx]
                    } else {
                        0.0
                    }
                });
                operator_norm(&j, NORM_TOL)
            }
        }
    }

    /// Lipschitz constant of `∇_x Ψ(·, y)` for fixed `y`.
    pub fn lipschitz_x(&self) -> f64 {
        match self {
            Coupling::Quadratic(q) => q.p_diag.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Lipschitz constant of `(x,y) ↦ ∇_y Ψ(x,y) − diag(g_extra) y`: the
    /// norm of the stacked Jacobian `[Kᵀ | −(Q + diag(g_extra))]`. The extra
    /// diagonal lets callers fold smooth separable `g` curvature into the
    /// same constant.
    pub fn lipschitz_y_with(&self, g_extra: &[f64]) -> f64 {
        match self {
            Coupling::Quadratic(q) => {
                let dy = q.q_diag.len();
                if dy == 0 {
                    return 0.0;
                }
                assert_eq!(g_extra.len(), dy);
                let dx = q.p_diag.len();
                let j = Matrix::from_fn(dy, dx + dy, |i, jj| {
                    if jj < dx {
                        q.k[(jj, i)]
                    } else if jj - dx == i {
                        -(q.q_diag[i] + g_extra[i])
                    } else {
                        0.0
                    }
                });
                operator_norm(&j, NORM_TOL)
            }
        }
    }

    /// Componentwise bound on `|∇_x Ψ|` over a box `lo ≤ x ≤ hi`,
    /// `ylo ≤ y ≤ yhi` (corner maximization, exact per component).
    pub fn grad_x_componentwise_bound(
        &self,
        lo: &[f64],
        hi: &[f64],
        ylo: &[f64],
        yhi: &[f64],
    ) -> Vec<f64> {
        match self {
            Coupling::Quadratic(q) => (0..q.p_diag.len())
                .map(|i| {
                    let mut bound = q.c_x[i].abs();
                    bound += q.p_diag[i] * lo[i].abs().max(hi[i].abs());
                    for j in 0..q.q_diag.len() {
                        bound += q.k[(i, j)].abs() * ylo[j].abs().max(yhi[j].abs());
                    }
                    bound
                })
                .collect(),
        }
    }

    /// Componentwise bound on `|∇_y Ψ|` over a box `lo ≤ x ≤ hi`,
    /// `ylo ≤ y ≤ yhi` (corner maximization, exact per component).
    pub fn grad_y_componentwise_bound(
        &self,
        lo: &[f64],
        hi: &[f64],
        ylo: &[f64],
        yhi: &[f64],
    ) -> Vec<f64> {
        match self {
            Coupling::Quadratic(q) => (0..q.q_diag.len())
                .map(|j| {
                    let mut bound = q.c_y[j].abs();
                    bound += q.q_diag[j] * ylo[j].abs().max(yhi[j].abs());
                    for i in 0..q.p_diag.len() {
                        bound += q.k[(i, j)].abs() * lo[i].abs().max(hi[i].abs());
                    }
                    bound
                })
                .collect(),
        }
    }
}
