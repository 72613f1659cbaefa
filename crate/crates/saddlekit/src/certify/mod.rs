//! Approximate-saddle-point certification: feasibility residuals,
//! best-response oracles over the affinely restricted sets, the penalty-gap
//! certificate `br_max − br_min + ρ·res_x + ρ·res_y`, a brute-force grid
//! oracle for tiny instances, and the per-iteration inequality checkers.

mod brute;
mod solve;

pub use brute::{brute_force_gap, BruteForceReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq, sub, BlockVector};
use crate::problem::{Coupling, SaddleProblem};
use crate::solvers::{Iterate, Snapshot, StepSizes};
use solve::{solve_restricted, RestrictedProblem};

/// Euclidean feasibility residuals `(‖Ax − a‖, ‖By − b‖)`; an absent
/// constraint side reports zero.
pub fn residuals(problem: &SaddleProblem, x: &BlockVector, y: &BlockVector) -> (f64, f64) {
    (problem.residual_x(x), problem.residual_y(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `max_{y ∈ 𝒴, By = b} Φ(anchor, y)`.
    MaxY,
    /// `min_{x ∈ 𝒳, Ax = a} Φ(x, anchor)`.
    MinX,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub value: f64,
    pub point: BlockVector,
    pub kkt_residual: f64,
}

/// Exact single-side optimization over the set-and-affine-restricted
/// domain, to KKT residual ≤ `tol`, holding the other side at `anchor`.
pub fn best_response(
    problem: &SaddleProblem,
    side: Side,
    anchor: &BlockVector,
    tol: f64,
) -> Result<BestResponse> {
    match side {
        Side::MinX => {
            if anchor.dims() != problem.y_dims() {
                return Err(Error::DimensionMismatch {
                    expected: problem.ny(),
                    got: anchor.total_dim(),
                });
            }
            if problem.nx() == 0 {
                return Ok(BestResponse {
                    value: problem.phi(&BlockVector::new(vec![]), anchor),
                    point: BlockVector::new(vec![]),
                    kkt_residual: 0.0,
                });
            }
            // minimize h(x) + Ψ(x, ȳ): quadratic x-part of Ψ plus K ȳ pulled
            // into the linear coefficient
            let y_flat = anchor.concat();
            let (quad_diag, lin) = match problem.coupling() {
                Coupling::Quadratic(q) => {
                    let mut lin = q.k.matvec(&y_flat);
                    for (l, c) in lin.iter_mut().zip(&q.c_x) {
                        *l += c;
                    }
                    (q.p_diag.clone(), lin)
                }
            };
            let restricted = RestrictedProblem {
                specs: problem.x_blocks(),
                quad_diag,
                lin,
                c_blocks: problem.parts().a_blocks.as_slice(),
                d: problem.a_rhs(),
                start: problem.feasible().0.clone(),
            };
            let (sol, value) =
                solve_restricted(&restricted, tol, |x| problem.phi(x, anchor))?;
            Ok(BestResponse {
                value,
                point: sol.point,
                kkt_residual: sol.kkt_residual,
            })
        }
        Side::MaxY => {
            if anchor.dims() != problem.x_dims() {
                return Err(Error::DimensionMismatch {
                    expected: problem.nx(),
                    got: anchor.total_dim(),
                });
            }
            if problem.ny() == 0 {
                return Ok(BestResponse {
                    value: problem.phi(anchor, &BlockVector::new(vec![])),
                    point: BlockVector::new(vec![]),
                    kkt_residual: 0.0,
                });
            }
            // maximize Ψ(x̄, y) − g(y) = minimize g(y) + ½yᵀQy − (Kᵀx̄ − c_y)ᵀy
            let x_flat = anchor.concat();
            let (quad_diag, lin) = match problem.coupling() {
                Coupling::Quadratic(q) => {
                    let mut lin = q.k.matvec_t(&x_flat);
                    for (l, c) in lin.iter_mut().zip(&q.c_y) {
                        *l = -(*l - c);
                    }
                    (q.q_diag.clone(), lin)
                }
            };
            let restricted = RestrictedProblem {
                specs: problem.y_blocks(),
                quad_diag,
                lin,
                c_blocks: problem.parts().b_blocks.as_slice(),
                d: problem.b_rhs(),
                start: problem.feasible().1.clone(),
            };
            let (sol, value) =
                solve_restricted(&restricted, tol, |y| problem.phi(anchor, y))?;
            Ok(BestResponse {
                value,
                point: sol.point,
                kkt_residual: sol.kkt_residual,
            })
        }
    }
}

/// The certificate quantities at a candidate pair `(x̄, ȳ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// `max_{y∈𝒴, By=b} Φ(x̄, y)`.
    pub br_max: f64,
    /// `min_{x∈𝒳, Ax=a} Φ(x, ȳ)`.
    pub br_min: f64,
    pub res_x: f64,
    pub res_y: f64,
    pub rho: f64,
    /// `br_max − br_min + ρ·res_x + ρ·res_y`.
    pub penalty_gap: f64,
    /// KKT residuals certifying the two inner solves.
    pub kkt_max: f64,
    pub kkt_min: f64,
}

impl GapReport {
    fn assemble(br_max: &BestResponse, br_min: &BestResponse, res: (f64, f64), rho: f64) -> Self {
        GapReport {
            br_max: br_max.value,
            br_min: br_min.value,
            res_x: res.0,
            res_y: res.1,
            rho,
            penalty_gap: br_max.value - br_min.value + rho * res.0 + rho * res.1,
            kkt_max: br_max.kkt_residual,
            kkt_min: br_min.kkt_residual,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("gap report serialization cannot fail")
    }
}

/// Penalty-gap certificate at a single report weight.
pub fn penalty_gap(
    problem: &SaddleProblem,
    x: &BlockVector,
    y: &BlockVector,
    rho: f64,
    tol: f64,
) -> Result<GapReport> {
    Ok(penalty_gap_multi(problem, x, y, &[rho], tol)?.pop().expect("one report"))
}

/// Penalty-gap certificates at several report weights, sharing the two
/// best-response solves (only the `ρ·residual` recombination differs).
pub fn penalty_gap_multi(
    problem: &SaddleProblem,
    x: &BlockVector,
    y: &BlockVector,
    rhos: &[f64],
    tol: f64,
) -> Result<Vec<GapReport>> {
    if rhos.iter().any(|r| *r <= 0.0) {
        return Err(Error::InvalidParam("penalty weight must be positive".into()));
    }
    let br_max = best_response(problem, Side::MaxY, x, tol)?;
    let br_min = best_response(problem, Side::MinX, y, tol)?;
    let res = residuals(problem, x, y);
    Ok(rhos
        .iter()
        .map(|rho| GapReport::assemble(&br_max, &br_min, res, *rho))
        .collect())
}

/// Which per-iteration inequality to evaluate. The identifiers mirror the
/// CLI's `certify` scenario kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    /// Two-block ADMM step inequality (feasible-comparator descent).
    Lemma2,
    /// Supergradient ascent step inequality.
    Lemma3,
    /// Extragradient ascent step inequality.
    Lemma4,
    /// Joint extragradient step inequality in the metric `H`.
    Lemma5,
    /// Multi-block ADMM step inequality under partial strong convexity.
    Lemma7,
}

impl LemmaKind {
    pub const ALL: [LemmaKind; 5] = [
        LemmaKind::Lemma2,
        LemmaKind::Lemma3,
        LemmaKind::Lemma4,
        LemmaKind::Lemma5,
        LemmaKind::Lemma7,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LemmaKind::Lemma2 => "lemma2",
            LemmaKind::Lemma3 => "lemma3",
            LemmaKind::Lemma4 => "lemma4",
            LemmaKind::Lemma5 => "lemma5",
            LemmaKind::Lemma7 => "lemma7",
        }
    }
}

/// Comparator points for the inequality checkers. `x` must be feasible
/// (`Ax = a` within 1e-9) where a lemma restricts the comparator; `y` need
/// only lie in its sets; multipliers are arbitrary.
#[derive(Debug, Clone, Default)]
pub struct Probe {
    pub x: Option<BlockVector>,
    pub y: Option<BlockVector>,
    pub lambda: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
}

/// RHS − LHS of the named step inequality, evaluated term-by-term at one
/// recorded iteration; ≥ −1e-8 whenever the snapshot was produced by the
/// matching algorithm with its step rule satisfied.
pub fn check_step_inequality(
    kind: LemmaKind,
    problem: &SaddleProblem,
    steps: &StepSizes,
    snapshot: &Snapshot,
    probe: &Probe,
) -> Result<f64> {
    match kind {
        LemmaKind::Lemma2 | LemmaKind::Lemma7 => {
            let (x_k, lambda_k, x_k1, lambda_k1, y_anchor) = admm_snapshot_parts(problem, snapshot)?;
            let x_feas = probe
                .x
                .as_ref()
                .ok_or_else(|| Error::InvalidParam("needs a feasible x probe".into()))?;
            let lambda = probe
                .lambda
                .as_ref()
                .ok_or_else(|| Error::InvalidParam("needs a multiplier probe".into()))?;
            let state_k = crate::admm::AdmmState::new(
                x_k.clone(),
                lambda_k.clone(),
                steps.gamma,
                steps.sigma_x,
            )?;
            let state_k1 = crate::admm::AdmmState::new(
                x_k1.clone(),
                lambda_k1.clone(),
                steps.gamma,
                steps.sigma_x,
            )?;
            match kind {
                LemmaKind::Lemma2 => {
                    crate::admm::lemma2_slack(problem, &state_k, &state_k1, &y_anchor, x_feas, lambda)
                }
                _ => crate::admm::lemma_n_slack(
                    problem, &state_k, &state_k1, &y_anchor, x_feas, lambda,
                ),
            }
        }
        LemmaKind::Lemma3 => {
            let Snapshot::Ssg {
                x_k1,
                y_k,
                u_k,
                y_k1,
                ..
            } = snapshot
            else {
                return Err(Error::InvalidParam(
                    "supergradient inequality needs ssg snapshots".into(),
                ));
            };
            let y = probe
                .y
                .as_ref()
                .ok_or_else(|| Error::InvalidParam("needs a y probe".into()))?;
            check_in_sets(problem, y)?;
            let sigma_y = steps.sigma_y;
            let lhs = problem.phi(x_k1, y) - problem.phi(x_k1, y_k);
            let rhs = 0.5 * sigma_y * (y.dist_sq(y_k) - y.dist_sq(y_k1))
                + u_k.norm_sq() / (2.0 * sigma_y);
            Ok(rhs - lhs)
        }
        LemmaKind::Lemma4 => {
            let Snapshot::Seg {
                x_k,
                y_k,
                y_hat_k1,
                x_k1,
                y_k1,
                ..
            } = snapshot
            else {
                return Err(Error::InvalidParam(
                    "extragradient inequality needs seg snapshots".into(),
                ));
            };
            let y = probe
                .y
                .as_ref()
                .ok_or_else(|| Error::InvalidParam("needs a y probe".into()))?;
            check_in_sets(problem, y)?;
            let l_y = problem
                .constants()
                .l_y
                .ok_or_else(|| Error::MissingConstant("L_y".into()))?;
            let sigma_y = steps.sigma_y;
            let lhs = problem.phi(x_k1, y) - problem.phi(x_k1, y_hat_k1);
            let rhs = 0.5 * sigma_y * (y.dist_sq(y_k) - y.dist_sq(y_k1))
                + 0.5 * l_y * x_k.dist_sq(x_k1)
                - 0.5 * (sigma_y - l_y) * (y_hat_k1.dist_sq(y_k) + y_hat_k1.dist_sq(y_k1));
            Ok(rhs - lhs)
        }
        LemmaKind::Lemma5 => {
            let Snapshot::Egmm {
                z_k,
                z_hat_k1,
                z_k1,
            } = snapshot
            else {
                return Err(Error::InvalidParam(
                    "joint extragradient inequality needs egmm snapshots".into(),
                ));
            };
            let probe_z = Iterate {
                x: probe
                    .x
                    .clone()
                    .ok_or_else(|| Error::InvalidParam("needs an x probe".into()))?,
                y: probe
                    .y
                    .clone()
                    .unwrap_or_else(|| BlockVector::new(vec![])),
                lambda: probe.lambda.clone().unwrap_or_else(|| vec![0.0; problem.n()]),
                mu: probe.mu.clone().unwrap_or_else(|| vec![0.0; problem.m()]),
            };
            lemma5_slack(problem, steps, z_k, z_hat_k1, z_k1, &probe_z)
        }
    }
}

/// `(x^k, λ^k, x^{k+1}, λ^{k+1}, ỹ)` of a sweep-bearing snapshot.
type AdmmParts<'a> = (
    &'a BlockVector,
    &'a Vec<f64>,
    &'a BlockVector,
    &'a Vec<f64>,
    BlockVector,
);

fn admm_snapshot_parts<'a>(
    problem: &SaddleProblem,
    snapshot: &'a Snapshot,
) -> Result<AdmmParts<'a>> {
    match snapshot {
        Snapshot::Ssg {
            x_k,
            lambda_k,
            y_k,
            x_k1,
            lambda_k1,
            ..
        } => Ok((x_k, lambda_k, x_k1, lambda_k1, y_k.clone())),
        Snapshot::Seg {
            x_k,
            lambda_k,
            y_hat_k1,
            x_k1,
            lambda_k1,
            ..
        } => Ok((x_k, lambda_k, x_k1, lambda_k1, y_hat_k1.clone())),
        Snapshot::AdmmMin {
            x_k,
            lambda_k,
            x_k1,
            lambda_k1,
        } => Ok((x_k, lambda_k, x_k1, lambda_k1, problem.center_y())),
        Snapshot::Egmm { .. } => Err(Error::InvalidParam(
            "ADMM step inequality cannot consume egmm snapshots".into(),
        )),
    }
}

fn check_in_sets(problem: &SaddleProblem, y: &BlockVector) -> Result<()> {
    for (v, spec) in y.blocks().iter().zip(problem.y_blocks()) {
        if !spec.set.contains(v, 1e-9) {
            return Err(Error::InvalidParam("y probe leaves its set".into()));
        }
    }
    Ok(())
}

/// `F(z)` of the joint primal-dual operator, flattened per slot.
fn operator_f(problem: &SaddleProblem, z: &Iterate) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut fx = problem.grad_x_psi(&z.x, &z.y).concat();
    if problem.n() > 0 {
        let mut at = 0;
        for (i, dim) in problem.x_dims().iter().enumerate() {
            let pull = problem.a_block(i).matvec_t(&z.lambda);
            for (g, c) in fx[at..at + dim].iter_mut().zip(&pull) {
                *g -= c;
            }
            at += dim;
        }
    }
    let mut fy = problem.grad_y_psi(&z.x, &z.y).concat();
    for v in fy.iter_mut() {
        *v = -*v;
    }
    if problem.m() > 0 {
        let mut at = 0;
        for (j, dim) in problem.y_dims().iter().enumerate() {
            let pull = problem.b_block(j).matvec_t(&z.mu);
            for (g, c) in fy[at..at + dim].iter_mut().zip(&pull) {
                *g -= c;
            }
            at += dim;
        }
    }
    let f_lambda = if problem.n() > 0 {
        sub(&problem.apply_a(&z.x), problem.a_rhs())
    } else {
        Vec::new()
    };
    let f_mu = if problem.m() > 0 {
        sub(&problem.apply_b(&z.y), problem.b_rhs())
    } else {
        Vec::new()
    };
    (fx, fy, f_lambda, f_mu)
}

fn weighted_dist_sq(a: &Iterate, b: &Iterate, w: &StepSizes) -> f64 {
    w.sigma_x * a.x.dist_sq(&b.x)
        + w.sigma_y * a.y.dist_sq(&b.y)
        + w.sigma_lambda * norm_sq(&sub(&a.lambda, &b.lambda))
        + w.sigma_mu * norm_sq(&sub(&a.mu, &b.mu))
}

fn lemma5_slack(
    problem: &SaddleProblem,
    steps: &StepSizes,
    z_k: &Iterate,
    z_hat: &Iterate,
    z_k1: &Iterate,
    z: &Iterate,
) -> Result<f64> {
    for (v, spec) in z.x.blocks().iter().zip(problem.x_blocks()) {
        if !spec.set.contains(v, 1e-9) {
            return Err(Error::InvalidParam("x probe leaves its set".into()));
        }
    }
    check_in_sets(problem, &z.y)?;

    let r = |it: &Iterate| problem.h_value(&it.x) + problem.g_value(&it.y);
    let (fx, fy, fl, fm) = operator_f(problem, z_hat);
    let inner = dot(&fx, &sub(&z_hat.x.concat(), &z.x.concat()))
        + dot(&fy, &sub(&z_hat.y.concat(), &z.y.concat()))
        + dot(&fl, &sub(&z_hat.lambda, &z.lambda))
        + dot(&fm, &sub(&z_hat.mu, &z.mu));
    let lhs = r(z_hat) - r(z) + inner;

    // Weights of the cross-term bound. The Cauchy pairings behind the step
    // inequality collect (L+‖A‖) per x-slot, (L+‖B‖) per y-slot, and
    // ‖A‖/‖B‖ per multiplier slot across the two displacement norms; these
    // are the smallest weights for which the inequality holds on arbitrary
    // iterates.
    let c = problem.constants();
    let g = StepSizes {
        gamma: 1.0,
        sigma_x: c.l_full + c.norm_a,
        sigma_y: c.l_full + c.norm_b,
        sigma_lambda: c.norm_a,
        sigma_mu: c.norm_b,
    };
    let h_minus_g = StepSizes {
        gamma: 1.0,
        sigma_x: steps.sigma_x - g.sigma_x,
        sigma_y: steps.sigma_y - g.sigma_y,
        sigma_lambda: steps.sigma_lambda - g.sigma_lambda,
        sigma_mu: steps.sigma_mu - g.sigma_mu,
    };
    let rhs = 0.5 * weighted_dist_sq(z_k, z, steps) - 0.5 * weighted_dist_sq(z, z_k1, steps)
        - 0.5 * weighted_dist_sq(z_k, z_hat, &h_minus_g)
        - 0.5 * weighted_dist_sq(z_hat, z_k1, &h_minus_g);
    Ok(rhs - lhs)
}
