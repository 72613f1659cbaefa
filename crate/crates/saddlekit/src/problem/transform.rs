//! Problem transforms: the strongly convex perturbation of the later
//! x-blocks, and the slack-variable reformulation of conic inequality
//! constraints into equality form.

use serde::{Deserialize, Serialize};

use super::{
    apply_blocks_pub, BlockSpec, Coupling, ProblemParts, QuadraticCoupling, SaddleProblem,
    FEASIBILITY_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{norm, norm_sq, BlockVector, ConvexSet, Matrix, SeparableTerm};

/// Returns a problem whose objective gains `(eps/2) Σ_{i≥2} ‖x_i − x0_i‖²`:
/// block 1 is untouched, every later `h_i` becomes `eps`-strongly convex on
/// top of its own modulus.
pub fn perturb(problem: &SaddleProblem, eps: f64, x0: &BlockVector) -> Result<SaddleProblem> {
    if eps < 0.0 {
        return Err(Error::InvalidParam("perturbation eps must be ≥ 0".into()));
    }
    if x0.dims() != problem.x_dims() {
        return Err(Error::DimensionMismatch {
            expected: problem.nx(),
            got: x0.total_dim(),
        });
    }
    for (v, spec) in x0.blocks().iter().zip(problem.x_blocks()) {
        if !spec.set.contains(v, FEASIBILITY_TOL) {
            return Err(Error::InvalidParam("perturbation anchor leaves its set".into()));
        }
    }
    let mut parts = problem.parts().clone();
    for (i, spec) in parts.x_blocks.iter_mut().enumerate().skip(1) {
        spec.term = add_quadratic(&spec.term, eps, x0.block(i))?;
    }
    SaddleProblem::new(parts)
}

/// `term + (eps/2)‖v − anchor‖²`, expanded into the quadratic's fields.
fn add_quadratic(term: &SeparableTerm, eps: f64, anchor: &[f64]) -> Result<SeparableTerm> {
    let d = anchor.len();
    let (mut diag, mut linear, mut constant) = match term {
        SeparableTerm::Zero => (vec![0.0; d], vec![0.0; d], 0.0),
        SeparableTerm::Quadratic {
            diag,
            linear,
            constant,
        } => (diag.clone(), linear.clone(), *constant),
        _ => {
            return Err(Error::Unsupported(
                "perturbation needs quadratic-compatible x terms".into(),
            ))
        }
    };
    for j in 0..d {
        diag[j] += eps;
        linear[j] -= eps * anchor[j];
    }
    constant += 0.5 * eps * norm_sq(anchor);
    Ok(SeparableTerm::Quadratic {
        diag,
        linear,
        constant,
    })
}

/// Supported cone families for conic inequality constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    NonnegOrthant,
}

/// A saddle-point instance whose affine constraints are conic inequalities
/// `Ax ⪯_{K₁} a` (and/or `By ⪯_{K₂} b`) rather than equalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSaddleProblem {
    parts: ProblemParts,
    x_cone: Option<ConeKind>,
    y_cone: Option<ConeKind>,
}

impl ConicSaddleProblem {
    pub fn new(
        parts: ProblemParts,
        x_cone: Option<ConeKind>,
        y_cone: Option<ConeKind>,
    ) -> Result<Self> {
        super::validate_structure(&parts)?;
        if x_cone.is_none() && !parts.a_rhs.is_empty() {
            return Err(Error::InvalidParam("x constraint present without a cone".into()));
        }
        if y_cone.is_none() && !parts.b_rhs.is_empty() {
            return Err(Error::InvalidParam("y constraint present without a cone".into()));
        }
        // the stored point must satisfy the inequalities with slack in the cone
        if x_cone.is_some() {
            let ax = apply_blocks_pub(&parts.a_blocks, parts.a_rhs.len(), &parts.feasible_x);
            if ax
                .iter()
                .zip(&parts.a_rhs)
                .any(|(v, rhs)| rhs - v < -FEASIBILITY_TOL)
            {
                return Err(Error::InvalidParam("conic feasible point violates Ax ⪯ a".into()));
            }
        }
        if y_cone.is_some() {
            let by = apply_blocks_pub(&parts.b_blocks, parts.b_rhs.len(), &parts.feasible_y);
            if by
                .iter()
                .zip(&parts.b_rhs)
                .any(|(v, rhs)| rhs - v < -FEASIBILITY_TOL)
            {
                return Err(Error::InvalidParam("conic feasible point violates By ⪯ b".into()));
            }
        }
        Ok(ConicSaddleProblem {
            parts,
            x_cone,
            y_cone,
        })
    }

    pub fn parts(&self) -> &ProblemParts {
        &self.parts
    }

    pub fn x_cone(&self) -> Option<ConeKind> {
        self.x_cone
    }

    pub fn y_cone(&self) -> Option<ConeKind> {
        self.y_cone
    }
}

/// Rewrites conic inequalities as equalities by appending one slack block
/// per constrained side: identity constraint columns, a zero objective
/// term, and a cone-capped ball whose radius bounds every feasible slack.
pub fn conic_to_equality(conic: &ConicSaddleProblem) -> Result<SaddleProblem> {
    let mut parts = conic.parts().clone();

    if let Some(kind) = conic.x_cone() {
        let ConeKind::NonnegOrthant = kind;
        let n = parts.a_rhs.len();
        let diam: f64 = product_diameter(&parts.x_blocks)?;
        let norm_a = stacked_norm(&parts.a_blocks);
        let radius = norm(&parts.a_rhs) + norm_a * diam;
        let slack = {
            let ax = apply_blocks_pub(&parts.a_blocks, n, &parts.feasible_x);
            parts
                .a_rhs
                .iter()
                .zip(&ax)
                .map(|(rhs, v)| (rhs - v).max(0.0))
                .collect::<Vec<f64>>()
        };
        parts.x_blocks.push(BlockSpec {
            set: ConvexSet::NonnegBall { dim: n, radius },
            term: SeparableTerm::Zero,
        });
        parts.a_blocks.push(Matrix::identity(n));
        let mut fx = parts.feasible_x.blocks().to_vec();
        fx.push(slack);
        parts.feasible_x = BlockVector::new(fx);
        parts.coupling = extend_coupling(&parts.coupling, n, 0);
    }

    if let Some(kind) = conic.y_cone() {
        let ConeKind::NonnegOrthant = kind;
        let m = parts.b_rhs.len();
        let diam: f64 = product_diameter(&parts.y_blocks)?;
        let norm_b = stacked_norm(&parts.b_blocks);
        let radius = norm(&parts.b_rhs) + norm_b * diam;
        let slack = {
            let by = apply_blocks_pub(&parts.b_blocks, m, &parts.feasible_y);
            parts
                .b_rhs
                .iter()
                .zip(&by)
                .map(|(rhs, v)| (rhs - v).max(0.0))
                .collect::<Vec<f64>>()
        };
        parts.y_blocks.push(BlockSpec {
            set: ConvexSet::NonnegBall { dim: m, radius },
            term: SeparableTerm::Zero,
        });
        parts.b_blocks.push(Matrix::identity(m));
        let mut fy = parts.feasible_y.blocks().to_vec();
        fy.push(slack);
        parts.feasible_y = BlockVector::new(fy);
        parts.coupling = extend_coupling(&parts.coupling, 0, m);
    }

    parts.meta.generator = format!("{}+slack", parts.meta.generator);
    SaddleProblem::new(parts)
}

/// Appends zero rows/columns to the coupling so slack blocks do not enter Ψ.
fn extend_coupling(coupling: &Coupling, extra_x: usize, extra_y: usize) -> Coupling {
    match coupling {
        Coupling::Quadratic(q) => {
            let dx = q.p_diag.len() + extra_x;
            let dy = q.q_diag.len() + extra_y;
            let mut p_diag = q.p_diag.clone();
            p_diag.extend(std::iter::repeat_n(0.0, extra_x));
            let mut q_diag = q.q_diag.clone();
            q_diag.extend(std::iter::repeat_n(0.0, extra_y));
            let mut c_x = q.c_x.clone();
            c_x.extend(std::iter::repeat_n(0.0, extra_x));
            let mut c_y = q.c_y.clone();
            c_y.extend(std::iter::repeat_n(0.0, extra_y));
            let k = Matrix::from_fn(dx, dy, |i, j| {
                if i < q.k.rows() && j < q.k.cols() {
                    q.k[(i, j)]
                } else {
                    0.0
                }
            });
            Coupling::Quadratic(QuadraticCoupling {
                p_diag,
                q_diag,
                k,
                c_x,
                c_y,
            })
        }
    }
}

fn product_diameter(blocks: &[BlockSpec]) -> Result<f64> {
    let mut sum = 0.0;
    for b in blocks {
        let d = b.set.diameter()?;
        sum += d * d;
    }
    Ok(sum.sqrt())
}

fn stacked_norm(blocks: &[Matrix]) -> f64 {
    if blocks.is_empty() {
        return 0.0;
    }
    let mut full = blocks[0].clone();
    for b in &blocks[1..] {
        full = full.hcat(b);
    }
    crate::linalg::operator_norm(&full, 1e-12)
}
