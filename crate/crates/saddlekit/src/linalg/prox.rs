//! Proximal operator `argmin_{w ∈ set} step·term(w) + ½‖w − v‖²`.
//!
//! Closed forms cover {Zero with any set, Quadratic with Box/Free, ScaledL1
//! with Box/Free, everything in one dimension}; the remaining smooth pairs
//! run an accelerated projected-gradient loop, and multi-dimensional
//! piecewise-linear terms fall back to projected subgradient steps.

use super::{dot, norm, ConvexSet, SeparableTerm};
use crate::error::{Error, Result};

pub(crate) const INNER_CAP: usize = 50_000;

pub fn prox(
    term: &SeparableTerm,
    set: &ConvexSet,
    v: &[f64],
    step: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if step <= 0.0 {
        return Err(Error::InvalidParam("prox step must be positive".into()));
    }
    if v.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: v.len(),
        });
    }
    term.validate(v.len())?;

    match (term, set) {
        (SeparableTerm::Zero, _) => set.project(v),
        (SeparableTerm::Quadratic { diag, linear, .. }, ConvexSet::Free { .. }) => {
            Ok(quad_free(diag, linear, v, step))
        }
        (SeparableTerm::Quadratic { diag, linear, .. }, ConvexSet::Box { lo, hi }) => {
            // separable objective over a separable set: clamp the scalar minima
            let w = quad_free(diag, linear, v, step);
            Ok(w.iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (l, h))| x.max(*l).min(*h))
                .collect())
        }
        (SeparableTerm::ScaledL1 { weight }, ConvexSet::Free { .. }) => {
            Ok(v.iter().map(|x| soft_threshold(*x, step * weight)).collect())
        }
        (SeparableTerm::ScaledL1 { weight }, ConvexSet::Box { lo, hi }) => Ok(v
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(x, (l, h))| soft_threshold(*x, step * weight).max(*l).min(*h))
            .collect()),
        // over the simplex the l1 norm is the constant 1
        (SeparableTerm::ScaledL1 { .. }, ConvexSet::Simplex { .. }) => set.project(v),
        // over the orthant the l1 norm is linear, so it shifts the target
        (SeparableTerm::ScaledL1 { weight }, ConvexSet::NonnegBall { .. }) => {
            let shifted: Vec<f64> = v.iter().map(|x| x - step * weight).collect();
            set.project(&shifted)
        }
        (SeparableTerm::Quadratic { diag, linear, .. }, _) => {
            smooth_prox_apg(diag, linear, set, v, step, tol)
        }
        (t @ SeparableTerm::PiecewiseLinearMax { slopes, offsets }, _) if set.dim() == 1 => {
            Ok(vec![plm_prox_1d(slopes, offsets, set, v[0], step, t)?])
        }
        (t, _) => subgradient_prox(t, set, v, step, tol),
    }
}

fn quad_free(diag: &[f64], linear: &[f64], v: &[f64], step: f64) -> Vec<f64> {
    v.iter()
        .zip(diag.iter().zip(linear))
        .map(|(x, (d, l))| (x - step * l) / (1.0 + step * d))
        .collect()
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// FISTA with projection for `f(w) = step·(½ wᵀdiag w + linearᵀw) + ½‖w−v‖²`
/// over a set without a separable closed form.
fn smooth_prox_apg(
    diag: &[f64],
    linear: &[f64],
    set: &ConvexSet,
    v: &[f64],
    step: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let lf = 1.0 + step * diag.iter().cloned().fold(0.0, f64::max);
    let grad = |w: &[f64]| -> Vec<f64> {
        w.iter()
            .zip(diag.iter().zip(linear))
            .zip(v)
            .map(|((wi, (d, l)), vi)| step * (d * wi + l) + (wi - vi))
            .collect()
    };
    let mut w = set.project(v)?;
    let mut z = w.clone();
    let mut t_prev = 1.0f64;
    let mut f_prev = f64::INFINITY;
    for _ in 0..INNER_CAP {
        let g = grad(&z);
        let target: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lf).collect();
        let w_next = set.project(&target)?;
        let residual = lf * dist(&w_next, &z);

        let f_next = obj_quad(diag, linear, v, step, &w_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
        let beta = (t_prev - 1.0) / t_next;
        let mut z_next: Vec<f64> = w_next
            .iter()
            .zip(&w)
            .map(|(wn, wo)| wn + beta * (wn - wo))
            .collect();
        if f_next > f_prev {
            // function restart
            z_next = w_next.clone();
            t_prev = 1.0;
        } else {
            t_prev = t_next;
        }
        w = w_next;
        z = z_next;
        f_prev = f_next;
        if residual <= tol {
            return Ok(w);
        }
    }
    let g = grad(&w);
    let target: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - gi / lf).collect();
    let residual = lf * dist(&set.project(&target)?, &w);
    Err(Error::NonConvergence {
        iters: INNER_CAP,
        tol,
        residual,
    })
}

fn obj_quad(diag: &[f64], linear: &[f64], v: &[f64], step: f64, w: &[f64]) -> f64 {
    let q: f64 = w.iter().zip(diag).map(|(x, d)| 0.5 * d * x * x).sum();
    step * (q + dot(linear, w)) + 0.5 * super::dist_sq(w, v)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    super::dist_sq(a, b).sqrt()
}

/// Exact scalar prox of a max of lines: the minimizer sits where a line's
/// own quadratic is active, at a kink, or at an interval endpoint, so
/// enumerating those candidates is exhaustive.
fn plm_prox_1d(
    slopes: &[Vec<f64>],
    offsets: &[f64],
    set: &ConvexSet,
    v: f64,
    step: f64,
    term: &SeparableTerm,
) -> Result<f64> {
    let (lo, hi) = match set {
        ConvexSet::Box { lo, hi } => (lo[0], hi[0]),
        ConvexSet::Free { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        ConvexSet::Ball { center, radius } => (center[0] - radius, center[0] + radius),
        ConvexSet::NonnegBall { radius, .. } => (0.0, *radius),
        ConvexSet::Simplex { .. } => (1.0, 1.0),
    };
    let clamp = |w: f64| w.max(lo).min(hi);
    let mut candidates: Vec<f64> = Vec::new();
    for s in slopes {
        candidates.push(clamp(v - step * s[0]));
    }
    for (p, sp) in slopes.iter().enumerate() {
        for (q, sq) in slopes.iter().enumerate().skip(p + 1) {
            if sp[0] != sq[0] {
                candidates.push(clamp((offsets[p] - offsets[q]) / (sq[0] - sp[0])));
            }
        }
    }
    if lo.is_finite() {
        candidates.push(lo);
    }
    if hi.is_finite() {
        candidates.push(hi);
    }
    let mut best = f64::NAN;
    let mut best_f = f64::INFINITY;
    for w in candidates {
        let f = step * term.value(&[w]) + 0.5 * (w - v) * (w - v);
        if f < best_f {
            best_f = f;
            best = w;
        }
    }
    if best.is_nan() {
        return Err(Error::InvalidParam("empty candidate set in scalar prox".into()));
    }
    Ok(best)
}

/// Projected subgradient descent for nonsmooth terms without a closed form.
/// The objective is 1-strongly convex, which fixes the step schedule.
fn subgradient_prox(
    term: &SeparableTerm,
    set: &ConvexSet,
    v: &[f64],
    step: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let mut w = set.project(v)?;
    let mut avg = w.clone();
    let mut weight_sum = 1.0;
    let mut last_check = avg.clone();
    let movement_tol = tol.max(1e-12) * norm(v).max(1.0);
    for k in 0..INNER_CAP {
        let mut g = term.subgradient(&w);
        for (gi, (wi, vi)) in g.iter_mut().zip(w.iter().zip(v)) {
            *gi = step * *gi + (wi - vi);
        }
        let alpha = 2.0 / (k + 2) as f64;
        let target: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - alpha * gi).collect();
        w = set.project(&target)?;
        // weighted averaging with weight k+1 gives the O(1/k) certificate
        let wk = (k + 1) as f64;
        weight_sum += wk;
        let frac = wk / weight_sum;
        for (a, wi) in avg.iter_mut().zip(&w) {
            *a += frac * (wi - *a);
        }
        if (k + 1) % 200 == 0 {
            if dist(&avg, &last_check) <= movement_tol {
                return Ok(avg);
            }
            last_check = avg.clone();
        }
    }
    Err(Error::NonConvergence {
        iters: INNER_CAP,
        tol,
        residual: dist(&avg, &last_check),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_term_reduces_to_projection() {
        let set = ConvexSet::Box {
            lo: vec![0.0],
            hi: vec![1.0],
        };
        let w = prox(&SeparableTerm::Zero, &set, &[2.0], 1.0, 1e-12).unwrap();
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn quadratic_free_shrinks() {
        let set = ConvexSet::Free { dim: 1 };
        let t = SeparableTerm::quadratic(vec![1.0], vec![0.0]);
        let w = prox(&t, &set, &[2.0], 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn l1_free_soft_thresholds() {
        let set = ConvexSet::Free { dim: 1 };
        let t = SeparableTerm::ScaledL1 { weight: 1.0 };
        let w = prox(&t, &set, &[2.0], 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-15);
        let w = prox(&t, &set, &[0.5], 1.0, 1e-12).unwrap();
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn quadratic_on_ball_via_inner_loop() {
        // minimize ½w² + ½‖w−v‖² over the unit ball: unconstrained optimum
        // v/2 = (1.5, 0) lies outside, so the solution is on the boundary.
        let set = ConvexSet::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let t = SeparableTerm::quadratic(vec![1.0, 1.0], vec![0.0, 0.0]);
        let w = prox(&t, &set, &[3.0, 0.0], 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn plm_scalar_prox_exact() {
        // |w| as max(w, -w); prox equals soft threshold
        let t = SeparableTerm::PiecewiseLinearMax {
            slopes: vec![vec![1.0], vec![-1.0]],
            offsets: vec![0.0, 0.0],
        };
        let set = ConvexSet::Free { dim: 1 };
        let w = prox(&t, &set, &[2.0], 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-15);
        let w = prox(&t, &set, &[0.3], 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(w[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_nonpositive_step() {
        let set = ConvexSet::Free { dim: 1 };
        assert!(prox(&SeparableTerm::Zero, &set, &[1.0], 0.0, 1e-10).is_err());
    }
}
