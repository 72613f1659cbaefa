//! Inner solver for the affinely restricted one-side problems behind the
//! best-response oracles: minimize a diagonal quadratic plus separable
//! proximable terms over a product of sets, subject to `Cv = d`, by an
//! augmented-Lagrangian outer loop with accelerated proximal-gradient inner
//! solves. Deliberately independent of the solver algorithms under test.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, operator_norm, prox, sub, BlockVector, Matrix, SeparableTerm};
use crate::problem::BlockSpec;

pub struct RestrictedProblem<'a> {
    pub specs: &'a [BlockSpec],
    /// Diagonal quadratic curvature of the smooth coupling part.
    pub quad_diag: Vec<f64>,
    /// Linear coefficient of the smooth coupling part.
    pub lin: Vec<f64>,
    pub c_blocks: &'a [Matrix],
    pub d: &'a [f64],
    /// Feasible warm start.
    pub start: BlockVector,
}

pub struct RestrictedSolution {
    pub point: BlockVector,
    pub kkt_residual: f64,
}

const OUTER_CAP: usize = 80;
const INNER_CAP: usize = 200_000;
const BETA_MAX: f64 = 1e12;

struct Smooth<'a> {
    quad_diag: &'a [f64],
    lin: &'a [f64],
    term_diag: Vec<f64>,
    term_lin: Vec<f64>,
    nonsmooth: Vec<SeparableTerm>,
    dims: Vec<usize>,
}

impl<'a> Smooth<'a> {
    fn new(p: &'a RestrictedProblem) -> Self {
        let dims: Vec<usize> = p.specs.iter().map(|s| s.set.dim()).collect();
        let mut term_diag = Vec::new();
        let mut term_lin = Vec::new();
        let mut nonsmooth = Vec::new();
        for spec in p.specs {
            let (d, l, rest) = spec.term.smooth_split(spec.set.dim());
            term_diag.extend(d);
            term_lin.extend(l);
            nonsmooth.push(rest);
        }
        Smooth {
            quad_diag: &p.quad_diag,
            lin: &p.lin,
            term_diag,
            term_lin,
            nonsmooth,
            dims,
        }
    }

    fn curvature_max(&self) -> f64 {
        self.quad_diag
            .iter()
            .zip(&self.term_diag)
            .map(|(a, b)| a + b)
            .fold(0.0, f64::max)
    }

    fn grad(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.quad_diag.iter().zip(&self.term_diag))
            .zip(self.lin.iter().zip(&self.term_lin))
            .map(|((vi, (q, t)), (l, tl))| (q + t) * vi + l + tl)
            .collect()
    }

    fn value(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((vi, (q, t)), (l, tl)) in v
            .iter()
            .zip(self.quad_diag.iter().zip(&self.term_diag))
            .zip(self.lin.iter().zip(&self.term_lin))
        {
            s += 0.5 * (q + t) * vi * vi + (l + tl) * vi;
        }
        let bv = BlockVector::split(v, &self.dims);
        for (t, b) in self.nonsmooth.iter().zip(bv.blocks()) {
            s += t.value(b);
        }
        s
    }

    /// Blockwise prox of the nonsmooth terms plus set indicators.
    fn prox_all(&self, specs: &[BlockSpec], target: &[f64], step: f64, tol: f64) -> Result<Vec<f64>> {
        let bv = BlockVector::split(target, &self.dims);
        let mut out = Vec::with_capacity(target.len());
        for ((spec, rest), b) in specs.iter().zip(&self.nonsmooth).zip(bv.blocks()) {
            out.extend(prox(rest, &spec.set, b, step, tol)?);
        }
        Ok(out)
    }
}

/// KKT residual of the restricted problem at `v` given multiplier `eta`:
/// prox-gradient displacement of the Lagrangian plus the constraint
/// residual.
fn kkt_residual(
    p: &RestrictedProblem,
    smooth: &Smooth,
    rows: usize,
    v: &[f64],
    eta: &[f64],
    tol: f64,
) -> Result<f64> {
    let ls = smooth.curvature_max().max(1.0);
    let mut g = smooth.grad(v);
    if rows > 0 {
        let bv = BlockVector::split(v, &smooth.dims);
        let r = sub(&apply(p.c_blocks, rows, &bv), p.d);
        let mut at = 0;
        for (mat, dim) in p.c_blocks.iter().zip(&smooth.dims) {
            let contrib = mat.matvec_t(eta);
            for (gi, c) in g[at..at + dim].iter_mut().zip(&contrib) {
                *gi -= c;
            }
            at += dim;
        }
        let target: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| vi - gi / ls).collect();
        let w = smooth.prox_all(p.specs, &target, 1.0 / ls, tol * 0.01)?;
        let stat = ls * norm(&sub(&w, v));
        Ok(stat + norm(&r))
    } else {
        let target: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| vi - gi / ls).collect();
        let w = smooth.prox_all(p.specs, &target, 1.0 / ls, tol * 0.01)?;
        Ok(ls * norm(&sub(&w, v)))
    }
}

fn apply(blocks: &[Matrix], rows: usize, v: &BlockVector) -> Vec<f64> {
    let mut out = vec![0.0; rows];
    for (mat, b) in blocks.iter().zip(v.blocks()) {
        axpy(&mut out, 1.0, &mat.matvec(b));
    }
    out
}

/// Accelerated proximal-gradient solve of the β-penalized Lagrangian to a
/// prox-displacement residual ≤ `tol`.
#[allow(clippy::too_many_arguments)]
fn inner_solve(
    p: &RestrictedProblem,
    smooth: &Smooth,
    rows: usize,
    norm_c: f64,
    beta: f64,
    eta: &[f64],
    v0: Vec<f64>,
    tol: f64,
) -> Result<Vec<f64>> {
    let lf = (smooth.curvature_max() + beta * norm_c * norm_c).max(1e-12);
    let grad = |v: &[f64]| -> Vec<f64> {
        let mut g = smooth.grad(v);
        if rows > 0 {
            let bv = BlockVector::split(v, &smooth.dims);
            let r = sub(&apply(p.c_blocks, rows, &bv), p.d);
            // −Cᵀη + β Cᵀ(Cv − d)
            let pull: Vec<f64> = r.iter().zip(eta).map(|(ri, e)| beta * ri - e).collect();
            let mut at = 0;
            for (mat, dim) in p.c_blocks.iter().zip(&smooth.dims) {
                let contrib = mat.matvec_t(&pull);
                for (gi, c) in g[at..at + dim].iter_mut().zip(&contrib) {
                    *gi += c;
                }
                at += dim;
            }
        }
        g
    };
    let objective = |v: &[f64]| -> f64 {
        let mut s = smooth.value(v);
        if rows > 0 {
            let bv = BlockVector::split(v, &smooth.dims);
            let r = sub(&apply(p.c_blocks, rows, &bv), p.d);
            s += 0.5 * beta * dot(&r, &r) - dot(eta, &r);
        }
        s
    };

    let mut w = v0;
    let mut z = w.clone();
    let mut t_prev = 1.0f64;
    let mut f_prev = f64::INFINITY;
    for _ in 0..INNER_CAP {
        let g = grad(&z);
        let target: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lf).collect();
        let w_next = smooth.prox_all(p.specs, &target, 1.0 / lf, tol * 0.01)?;
        let residual = lf * norm(&sub(&w_next, &z));
        let f_next = objective(&w_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
        let beta_m = (t_prev - 1.0) / t_next;
        let z_next: Vec<f64> = if f_next > f_prev {
            t_prev = 1.0;
            w_next.clone()
        } else {
            t_prev = t_next;
            w_next
                .iter()
                .zip(&w)
                .map(|(wn, wo)| wn + beta_m * (wn - wo))
                .collect()
        };
        w = w_next;
        z = z_next;
        f_prev = f_next;
        if residual <= tol {
            return Ok(w);
        }
    }
    Err(Error::NonConvergence {
        iters: INNER_CAP,
        tol,
        residual: f64::NAN,
    })
}

/// Augmented-Lagrangian outer loop to KKT residual ≤ `tol`. The error path
/// carries the best value and residual reached so the caller can decide.
pub fn solve_restricted(
    p: &RestrictedProblem,
    tol: f64,
    value_of: impl Fn(&BlockVector) -> f64,
) -> Result<(RestrictedSolution, f64)> {
    let smooth = Smooth::new(p);
    let rows = p.d.len();
    let norm_c = if rows > 0 {
        let mut full = p.c_blocks[0].clone();
        for b in &p.c_blocks[1..] {
            full = full.hcat(b);
        }
        operator_norm(&full, 1e-10)
    } else {
        0.0
    };

    let mut v = p.start.concat();
    let mut eta = vec![0.0; rows];
    let mut beta = smooth.curvature_max().max(1.0);
    let mut prev_feas = f64::INFINITY;

    for _ in 0..OUTER_CAP {
        let inner_tol = (tol * 0.1).max(1e-13);
        v = inner_solve(p, &smooth, rows, norm_c, beta, &eta, v, inner_tol)?;
        let bv = BlockVector::split(&v, &smooth.dims);
        let feas = if rows > 0 {
            let r = sub(&apply(p.c_blocks, rows, &bv), p.d);
            for (e, ri) in eta.iter_mut().zip(&r) {
                *e -= beta * ri;
            }
            norm(&r)
        } else {
            0.0
        };
        let kkt = kkt_residual(p, &smooth, rows, &v, &eta, tol)?;
        if kkt <= tol {
            let value = value_of(&bv);
            return Ok((
                RestrictedSolution {
                    point: bv,
                    kkt_residual: kkt,
                },
                value,
            ));
        }
        if rows == 0 {
            // unconstrained: one exhausted inner solve is all there is
            break;
        }
        if feas > 0.5 * prev_feas && beta < BETA_MAX {
            beta *= 5.0;
        }
        prev_feas = feas;
    }
    let bv = BlockVector::split(&v, &smooth.dims);
    let kkt = kkt_residual(p, &smooth, rows, &v, &eta, tol)?;
    if kkt <= tol {
        let value = value_of(&bv);
        return Ok((
            RestrictedSolution {
                point: bv,
                kkt_residual: kkt,
            },
            value,
        ));
    }
    Err(Error::BestResponseCap {
        value: value_of(&bv),
        residual: kkt,
    })
}
