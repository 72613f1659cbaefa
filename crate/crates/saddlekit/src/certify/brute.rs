//! Grid-enumeration oracle for tiny instances, kept independent of the
//! best-response solver so the two can cross-validate each other. Affine
//! rows are handled by eliminating one coordinate per row (through a pivoted
//! square subsystem) when possible, otherwise by filtering grid points whose
//! residual exceeds the grid pitch.

use serde::{Deserialize, Serialize};

use super::{residuals, GapReport};
use crate::error::{Error, Result};
use crate::linalg::{norm, operator_norm, sub, BlockVector, ConvexSet, Matrix, SeparableTerm};
use crate::problem::{BlockSpec, Coupling, SaddleProblem};

const MAX_SIDE_DIM: usize = 4;
const PIVOT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceReport {
    pub report: GapReport,
    /// Certified enumeration error of each side: objective Lipschitz bound
    /// times the worst-case distance from the optimum to a scanned point.
    pub error_bound_max: f64,
    pub error_bound_min: f64,
}

/// Discrete penalty-gap certificate by exhaustive grid scan of both
/// restricted sides.
pub fn brute_force_gap(
    problem: &SaddleProblem,
    x: &BlockVector,
    y: &BlockVector,
    rho: f64,
    grid_points_per_dim: usize,
) -> Result<BruteForceReport> {
    if grid_points_per_dim < 2 {
        return Err(Error::InvalidParam("need at least two grid points per dim".into()));
    }
    let (br_min, err_min) = scan_side(problem, SideData::min_x(problem), y, grid_points_per_dim)?;
    let (br_max, err_max) = scan_side(problem, SideData::max_y(problem), x, grid_points_per_dim)?;
    let res = residuals(problem, x, y);
    Ok(BruteForceReport {
        report: GapReport {
            br_max,
            br_min,
            res_x: res.0,
            res_y: res.1,
            rho,
            penalty_gap: br_max - br_min + rho * res.0 + rho * res.1,
            kkt_max: 0.0,
            kkt_min: 0.0,
        },
        error_bound_max: err_max,
        error_bound_min: err_min,
    })
}

/// One restricted side of the scan: which blocks, constraints, and
/// objective orientation to use.
struct SideData<'a> {
    specs: &'a [BlockSpec],
    c_blocks: &'a [Matrix],
    d: &'a [f64],
    minimize: bool,
}

impl<'a> SideData<'a> {
    fn min_x(problem: &'a SaddleProblem) -> Self {
        SideData {
            specs: problem.x_blocks(),
            c_blocks: problem.parts().a_blocks.as_slice(),
            d: problem.a_rhs(),
            minimize: true,
        }
    }

    fn max_y(problem: &'a SaddleProblem) -> Self {
        SideData {
            specs: problem.y_blocks(),
            c_blocks: problem.parts().b_blocks.as_slice(),
            d: problem.b_rhs(),
            minimize: false,
        }
    }
}

fn scan_side(
    problem: &SaddleProblem,
    side: SideData,
    anchor: &BlockVector,
    grid: usize,
) -> Result<(f64, f64)> {
    let dims: Vec<usize> = side.specs.iter().map(|s| s.set.dim()).collect();
    let total: usize = dims.iter().sum();
    if total == 0 {
        let v = BlockVector::new(vec![]);
        let value = if side.minimize {
            problem.phi(&v, anchor)
        } else {
            problem.phi(anchor, &v)
        };
        return Ok((value, 0.0));
    }
    if total > MAX_SIDE_DIM {
        return Err(Error::Unsupported(format!(
            "grid oracle limited to {MAX_SIDE_DIM} dims per side, got {total}"
        )));
    }
    let (lo, hi) = coordinate_bounds(side.specs)?;
    let rows = side.d.len();

    // choose pivot columns for elimination, if the constraints admit it
    let full_c = if rows > 0 {
        let mut m = side.c_blocks[0].clone();
        for b in &side.c_blocks[1..] {
            m = m.hcat(b);
        }
        Some(m)
    } else {
        None
    };
    let elim = full_c.as_ref().and_then(|c| choose_pivots(c, rows));

    let eval = |flat: &[f64]| -> f64 {
        let v = BlockVector::split(flat, &dims);
        if side.minimize {
            problem.phi(&v, anchor)
        } else {
            problem.phi(anchor, &v)
        }
    };
    let member = |flat: &[f64]| -> bool {
        let v = BlockVector::split(flat, &dims);
        v.blocks()
            .iter()
            .zip(side.specs)
            .all(|(b, s)| s.set.contains(b, 1e-9))
    };

    let pitch: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l) / (grid - 1) as f64)
        .collect();

    let mut best: Option<f64> = None;
    let mut amplification = 1.0f64;
    match elim {
        Some(ref pivots) => {
            let c = full_c.as_ref().expect("elimination implies constraints");
            let free: Vec<usize> = (0..total).filter(|j| !pivots.contains(j)).collect();
            let c_sub = Matrix::from_fn(rows, rows, |i, j| c[(i, pivots[j])]);
            // amplification ‖C_sub⁻¹ C_free‖ propagates free-grid spacing
            // into the eliminated coordinates
            if !free.is_empty() {
                let mut m = Matrix::zeros(rows, free.len());
                for (jj, fj) in free.iter().enumerate() {
                    let col: Vec<f64> = (0..rows).map(|i| c[(i, *fj)]).collect();
                    let solved = c_sub.solve(&col)?;
                    for i in 0..rows {
                        m[(i, jj)] = solved[i];
                    }
                }
                let amp = operator_norm(&m, 1e-10);
                amplification = (1.0 + amp * amp).sqrt();
            }
            let mut flat = vec![0.0; total];
            let mut idx = vec![0usize; free.len()];
            loop {
                for (slot, fj) in free.iter().enumerate() {
                    flat[*fj] = lo[*fj] + pitch[*fj] * idx[slot] as f64;
                }
                let mut rhs = side.d.to_vec();
                for (i, r) in rhs.iter_mut().enumerate() {
                    for fj in &free {
                        *r -= c[(i, *fj)] * flat[*fj];
                    }
                }
                let solved = c_sub.solve(&rhs)?;
                for (j, pj) in pivots.iter().enumerate() {
                    flat[*pj] = solved[j];
                }
                if member(&flat) {
                    let v = eval(&flat);
                    best = Some(match (best, side.minimize) {
                        (None, _) => v,
                        (Some(b), true) => b.min(v),
                        (Some(b), false) => b.max(v),
                    });
                }
                if free.is_empty() || !advance(&mut idx, grid) {
                    break;
                }
            }
        }
        None => {
            // filter mode: keep grid points whose residual is below the pitch
            let pitch_norm = norm(&pitch);
            let mut flat = vec![0.0; total];
            let mut idx = vec![0usize; total];
            loop {
                for j in 0..total {
                    flat[j] = lo[j] + pitch[j] * idx[j] as f64;
                }
                let feasible = if rows > 0 {
                    let c = full_c.as_ref().expect("rows > 0");
                    let r = sub(&c.matvec(&flat), side.d);
                    norm(&r) <= pitch_norm
                } else {
                    true
                };
                if feasible && member(&flat) {
                    let v = eval(&flat);
                    best = Some(match (best, side.minimize) {
                        (None, _) => v,
                        (Some(b), true) => b.min(v),
                        (Some(b), false) => b.max(v),
                    });
                }
                if !advance(&mut idx, grid) {
                    break;
                }
            }
        }
    }

    let best = best.ok_or_else(|| {
        Error::InvalidParam("grid empty after constraint filtering; refine the grid".into())
    })?;
    let half_diag = norm(&pitch.iter().map(|p| 0.5 * p).collect::<Vec<_>>());
    let lipschitz = objective_lipschitz(problem, &side, anchor, &lo, &hi);
    Ok((best, lipschitz * half_diag * amplification))
}

fn advance(idx: &mut [usize], grid: usize) -> bool {
    for slot in idx.iter_mut() {
        *slot += 1;
        if *slot < grid {
            return true;
        }
        *slot = 0;
    }
    false
}

fn coordinate_bounds(specs: &[BlockSpec]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for spec in specs {
        match &spec.set {
            ConvexSet::Box { lo: l, hi: h } => {
                lo.extend_from_slice(l);
                hi.extend_from_slice(h);
            }
            ConvexSet::Ball { center, radius } => {
                lo.extend(center.iter().map(|c| c - radius));
                hi.extend(center.iter().map(|c| c + radius));
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "grid oracle handles Box and Ball sets only, got {other:?}"
                )))
            }
        }
    }
    Ok((lo, hi))
}

/// Greedy pivoted column choice: run Gaussian elimination picking, per row,
/// the unused column with the largest remaining coefficient.
fn choose_pivots(c: &Matrix, rows: usize) -> Option<Vec<usize>> {
    let total = c.cols();
    let mut work = c.clone();
    let mut pivots = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut best_col = None;
        let mut best_val = PIVOT_EPS;
        for j in 0..total {
            if pivots.contains(&j) {
                continue;
            }
            let v = work[(r, j)].abs();
            if v > best_val {
                best_val = v;
                best_col = Some(j);
            }
        }
        let col = best_col?;
        pivots.push(col);
        for rr in r + 1..rows {
            let f = work[(rr, col)] / work[(r, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..total {
                work[(rr, j)] -= f * work[(r, j)];
            }
        }
    }
    Some(pivots)
}

/// Gradient-norm bound of the scanned side's objective over its bounding
/// box, by componentwise interval maximization.
fn objective_lipschitz(
    problem: &SaddleProblem,
    side: &SideData,
    anchor: &BlockVector,
    lo: &[f64],
    hi: &[f64],
) -> f64 {
    let anchor_flat = anchor.concat();
    let mut per_comp = match problem.coupling() {
        Coupling::Quadratic(_) => {
            if side.minimize {
                problem.coupling().grad_x_componentwise_bound(
                    lo,
                    hi,
                    &anchor_flat,
                    &anchor_flat,
                )
            } else {
                problem
                    .coupling()
                    .grad_y_componentwise_bound(&anchor_flat, &anchor_flat, lo, hi)
            }
        }
    };
    let mut at = 0;
    for spec in side.specs {
        let d = spec.set.dim();
        match &spec.term {
            SeparableTerm::Zero => {}
            SeparableTerm::Quadratic { diag, linear, .. } => {
                for j in 0..d {
                    per_comp[at + j] +=
                        diag[j] * lo[at + j].abs().max(hi[at + j].abs()) + linear[j].abs();
                }
            }
            SeparableTerm::ScaledL1 { weight } => {
                for j in 0..d {
                    per_comp[at + j] += weight;
                }
            }
            SeparableTerm::PiecewiseLinearMax { slopes, .. } => {
                for j in 0..d {
                    per_comp[at + j] += slopes.iter().map(|s| s[j].abs()).fold(0.0, f64::max);
                }
            }
        }
        at += d;
    }
    norm(&per_comp)
}
