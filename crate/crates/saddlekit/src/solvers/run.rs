use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{resolve_stepsizes, Algorithm, Iterate, RunConfig, RunOutput, Snapshot, StepSizes, Trace, TraceRow};
use crate::admm::{prox_admm_step, AdmmState};
use crate::error::{Error, Result};
use crate::linalg::{axpy, prox, sub, BlockVector};
use crate::problem::{perturb, BlockSpec, Coupling, SaddleProblem};

/// Loose tolerance for gap snapshots taken mid-run; the final certificate
/// is computed separately at the caller's tolerance.
const GAP_SNAPSHOT_TOL: f64 = 1e-6;

fn initial_point(
    blocks: &[BlockSpec],
    explicit: &Option<BlockVector>,
    centers: BlockVector,
) -> Result<BlockVector> {
    match explicit {
        None => Ok(centers),
        Some(p) => {
            if p.dims() != centers.dims() {
                return Err(Error::DimensionMismatch {
                    expected: centers.total_dim(),
                    got: p.total_dim(),
                });
            }
            for (v, spec) in p.blocks().iter().zip(blocks) {
                if !spec.set.contains(v, 1e-9) {
                    return Err(Error::InvalidParam("initial point leaves its set".into()));
                }
            }
            Ok(p.clone())
        }
    }
}

fn project_blocks(specs: &[BlockSpec], target: &BlockVector) -> Result<BlockVector> {
    let mut out = Vec::with_capacity(specs.len());
    for (spec, t) in specs.iter().zip(target.blocks()) {
        out.push(spec.set.project(t)?);
    }
    Ok(BlockVector::new(out))
}

/// Running arithmetic mean of a block-vector stream.
struct Averager {
    sum: BlockVector,
    count: usize,
}

impl Averager {
    fn new(dims: &[usize]) -> Self {
        Averager {
            sum: BlockVector::zeros(dims),
            count: 0,
        }
    }

    fn push(&mut self, v: &BlockVector) {
        self.sum.axpy(1.0, v);
        self.count += 1;
    }

    fn mean(&self) -> BlockVector {
        self.sum.scale(1.0 / self.count.max(1) as f64)
    }
}

fn gap_snapshot(
    gap_problem: &SaddleProblem,
    config: &RunConfig,
    k: usize,
    x_avg: &Averager,
    y_avg: &Averager,
) -> Option<f64> {
    if config.gap_eval_every == 0 || !(k + 1).is_multiple_of(config.gap_eval_every) {
        return None;
    }
    crate::certify::penalty_gap(
        gap_problem,
        &x_avg.mean(),
        &y_avg.mean(),
        config.rho_report,
        GAP_SNAPSHOT_TOL,
    )
    .ok()
    .map(|r| r.penalty_gap)
}

fn require_one_side(problem: &SaddleProblem) -> Result<()> {
    if problem.m() != 0 {
        return Err(Error::InvalidParam(
            "this algorithm handles one-side problems only (m = 0)".into(),
        ));
    }
    Ok(())
}

/// Supergradient ADMM: one proximal ADMM sweep on `x` anchored at the
/// current `y`, then a projected supergradient ascent step on `y`. Outputs
/// average `x` over `k = 1..T` and `y` over `k = 0..T−1`.
pub fn run_ssg_admm(problem: &SaddleProblem, config: &RunConfig) -> Result<RunOutput> {
    run_ssg_inner(problem, config, problem)
}

pub(crate) fn run_ssg_inner(
    problem: &SaddleProblem,
    config: &RunConfig,
    gap_problem: &SaddleProblem,
) -> Result<RunOutput> {
    config.validate()?;
    require_one_side(problem)?;
    let steps = resolve_stepsizes(problem, config)?;
    let mut x = initial_point(problem.x_blocks(), &config.x0, problem.center_x())?;
    let mut y = initial_point(problem.y_blocks(), &config.y0, problem.center_y())?;
    let mut lambda = vec![0.0; problem.n()];

    let mut x_avg = Averager::new(&problem.x_dims());
    let mut y_avg = Averager::new(&problem.y_dims());
    let mut trace = Trace::empty(steps);
    let start = Instant::now();

    for k in 0..config.t {
        y_avg.push(&y);
        if config.record_iterates {
            trace.y_stream.push(y.clone());
        }
        let state = AdmmState::new(x.clone(), lambda.clone(), steps.gamma, steps.sigma_x)?;
        let next = prox_admm_step(problem, &state, &y, config.inner_tol)?;
        let u = problem.supergrad_y_phi(&next.x, &y);
        let mut target = y.clone();
        target.axpy(1.0 / steps.sigma_y, &u);
        let y_next = project_blocks(problem.y_blocks(), &target)?;

        x_avg.push(&next.x);
        if config.record_iterates {
            trace.x_stream.push(next.x.clone());
        }
        if config.record_snapshots {
            trace.snapshots.push(Snapshot::Ssg {
                x_k: x.clone(),
                lambda_k: lambda.clone(),
                y_k: y.clone(),
                x_k1: next.x.clone(),
                lambda_k1: next.lambda.clone(),
                u_k: u,
                y_k1: y_next.clone(),
            });
        }
        let gap = gap_snapshot(gap_problem, config, k, &x_avg, &y_avg);
        trace.rows.push(TraceRow {
            iter: k + 1,
            res_x: problem.residual_x(&next.x),
            res_y: 0.0,
            dx_norm: x.dist(&next.x),
            dy_norm: y.dist(&y_next),
            gap,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        x = next.x;
        lambda = next.lambda;
        y = y_next;
    }
    Ok(RunOutput {
        x_avg: x_avg.mean(),
        y_avg: y_avg.mean(),
        trace,
    })
}

/// Extragradient ADMM: ascend `y` from the current pair, run the proximal
/// ADMM sweep anchored at the half-step `ŷ`, then ascend `y` again with the
/// gradient at `(x⁺, ŷ)`. Outputs average `x` and the hatted `ŷ` sequence,
/// both over `k = 1..T`.
pub fn run_seg_admm(problem: &SaddleProblem, config: &RunConfig) -> Result<RunOutput> {
    run_seg_inner(problem, config, problem)
}

pub(crate) fn run_seg_inner(
    problem: &SaddleProblem,
    config: &RunConfig,
    gap_problem: &SaddleProblem,
) -> Result<RunOutput> {
    config.validate()?;
    require_one_side(problem)?;
    if !problem.smooth_in_y() {
        return Err(Error::InvalidParam(
            "extragradient y-updates need a smooth-in-y instance".into(),
        ));
    }
    let steps = resolve_stepsizes(problem, config)?;
    let l_x = problem.constants().l_x;
    let l_y = problem.constants().l_y.unwrap_or(0.0);
    let mut x = initial_point(problem.x_blocks(), &config.x0, problem.center_x())?;
    let mut y = initial_point(problem.y_blocks(), &config.y0, problem.center_y())?;
    let mut lambda = vec![0.0; problem.n()];

    let mut x_avg = Averager::new(&problem.x_dims());
    let mut y_avg = Averager::new(&problem.y_dims());
    let mut trace = Trace::empty(steps);
    let mut cancel_min = f64::INFINITY;
    let start = Instant::now();

    for k in 0..config.t {
        let g0 = problem.supergrad_y_phi(&x, &y);
        let mut target = y.clone();
        target.axpy(1.0 / steps.sigma_y, &g0);
        let y_hat = project_blocks(problem.y_blocks(), &target)?;

        let state = AdmmState::new(x.clone(), lambda.clone(), steps.gamma, steps.sigma_x)?;
        let next = prox_admm_step(problem, &state, &y_hat, config.inner_tol)?;

        let g1 = problem.supergrad_y_phi(&next.x, &y_hat);
        let mut target = y.clone();
        target.axpy(1.0 / steps.sigma_y, &g1);
        let y_next = project_blocks(problem.y_blocks(), &target)?;

        cancel_min = cancel_min.min(0.5 * ((steps.sigma_x - l_x) - l_y) * x.dist_sq(&next.x));

        x_avg.push(&next.x);
        y_avg.push(&y_hat);
        if config.record_iterates {
            trace.x_stream.push(next.x.clone());
            trace.y_stream.push(y_hat.clone());
        }
        if config.record_snapshots {
            trace.snapshots.push(Snapshot::Seg {
                x_k: x.clone(),
                lambda_k: lambda.clone(),
                y_k: y.clone(),
                y_hat_k1: y_hat.clone(),
                x_k1: next.x.clone(),
                lambda_k1: next.lambda.clone(),
                y_k1: y_next.clone(),
            });
        }
        let gap = gap_snapshot(gap_problem, config, k, &x_avg, &y_avg);
        trace.rows.push(TraceRow {
            iter: k + 1,
            res_x: problem.residual_x(&next.x),
            res_y: 0.0,
            dx_norm: x.dist(&next.x),
            dy_norm: y.dist(&y_next),
            gap,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        x = next.x;
        lambda = next.lambda;
        y = y_next;
    }
    let mut out = RunOutput {
        x_avg: x_avg.mean(),
        y_avg: y_avg.mean(),
        trace,
    };
    out.trace.seg_cancel_min = Some(cancel_min);
    Ok(out)
}

/// Extragradient method of multipliers, the compact half-step/full-step
/// scheme in the diagonal metric `H = diag(σ_x, σ_y, σ_λ, σ_μ)`:
/// both steps are separable per-block proximal maps and plain multiplier
/// shifts, with the y-ascent direction taken from the primal-dual operator
/// (`+Bᵀμ` inside the ascent).
pub fn run_egmm(problem: &SaddleProblem, config: &RunConfig) -> Result<RunOutput> {
    run_egmm_inner(problem, config, problem)
}

pub(crate) fn run_egmm_inner(
    problem: &SaddleProblem,
    config: &RunConfig,
    gap_problem: &SaddleProblem,
) -> Result<RunOutput> {
    config.validate()?;
    let steps = resolve_stepsizes(problem, config)?;
    let mut z = Iterate {
        x: initial_point(problem.x_blocks(), &config.x0, problem.center_x())?,
        y: initial_point(problem.y_blocks(), &config.y0, problem.center_y())?,
        lambda: vec![0.0; problem.n()],
        mu: vec![0.0; problem.m()],
    };

    let mut x_avg = Averager::new(&problem.x_dims());
    let mut y_avg = Averager::new(&problem.y_dims());
    let mut trace = Trace::empty(steps);
    let start = Instant::now();

    for k in 0..config.t {
        let z_hat = egmm_prox_step(problem, &steps, &z, &z, config.inner_tol)?;
        let z_next = egmm_prox_step(problem, &steps, &z, &z_hat, config.inner_tol)?;

        x_avg.push(&z_hat.x);
        y_avg.push(&z_hat.y);
        if config.record_iterates {
            trace.x_stream.push(z_hat.x.clone());
            trace.y_stream.push(z_hat.y.clone());
        }
        if config.record_snapshots {
            trace.snapshots.push(Snapshot::Egmm {
                z_k: z.clone(),
                z_hat_k1: z_hat.clone(),
                z_k1: z_next.clone(),
            });
        }
        let gap = gap_snapshot(gap_problem, config, k, &x_avg, &y_avg);
        trace.rows.push(TraceRow {
            iter: k + 1,
            res_x: problem.residual_x(&z_next.x),
            res_y: problem.residual_y(&z_next.y),
            dx_norm: z.x.dist(&z_next.x),
            dy_norm: z.y.dist(&z_next.y),
            gap,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        z = z_next;
    }
    Ok(RunOutput {
        x_avg: x_avg.mean(),
        y_avg: y_avg.mean(),
        trace,
    })
}

/// One proximal step `argmin_z ½‖z − (base − H⁻¹F(at))‖²_H + R(z)`,
/// evaluated blockwise.
fn egmm_prox_step(
    problem: &SaddleProblem,
    steps: &StepSizes,
    base: &Iterate,
    at: &Iterate,
    tol: f64,
) -> Result<Iterate> {
    let gx = problem.grad_x_psi(&at.x, &at.y);
    let gy = problem.grad_y_psi(&at.x, &at.y);

    let mut x_new = Vec::with_capacity(problem.num_x_blocks());
    for i in 0..problem.num_x_blocks() {
        let spec = problem.x_block(i);
        let mut dir = gx.block(i).to_vec();
        if problem.n() > 0 {
            axpy(&mut dir, -1.0, &problem.a_block(i).matvec_t(&at.lambda));
        }
        let target: Vec<f64> = base.x.block(i)
            .iter()
            .zip(&dir)
            .map(|(xb, d)| xb - d / steps.sigma_x)
            .collect();
        x_new.push(prox(&spec.term, &spec.set, &target, 1.0 / steps.sigma_x, tol)?);
    }
    let mut y_new = Vec::with_capacity(problem.num_y_blocks());
    for j in 0..problem.num_y_blocks() {
        let spec = problem.y_block(j);
        let mut dir = gy.block(j).to_vec();
        if problem.m() > 0 {
            axpy(&mut dir, 1.0, &problem.b_block(j).matvec_t(&at.mu));
        }
        let target: Vec<f64> = base.y.block(j)
            .iter()
            .zip(&dir)
            .map(|(yb, d)| yb + d / steps.sigma_y)
            .collect();
        y_new.push(prox(&spec.term, &spec.set, &target, 1.0 / steps.sigma_y, tol)?);
    }

    let lambda = if problem.n() > 0 {
        let r = sub(&problem.apply_a(&at.x), problem.a_rhs());
        base.lambda
            .iter()
            .zip(&r)
            .map(|(l, ri)| l - ri / steps.sigma_lambda)
            .collect()
    } else {
        Vec::new()
    };
    let mu = if problem.m() > 0 {
        let r = sub(&problem.apply_b(&at.y), problem.b_rhs());
        base.mu
            .iter()
            .zip(&r)
            .map(|(m, ri)| m - ri / steps.sigma_mu)
            .collect()
    } else {
        Vec::new()
    };

    Ok(Iterate {
        x: BlockVector::new(x_new),
        y: BlockVector::new(y_new),
        lambda,
        mu,
    })
}

fn y_independent(problem: &SaddleProblem) -> bool {
    if problem.ny() == 0 {
        return true;
    }
    match problem.coupling() {
        Coupling::Quadratic(q) => {
            q.k.data().iter().all(|v| *v == 0.0)
                && q.q_diag.iter().all(|v| *v == 0.0)
                && q.c_y.iter().all(|v| *v == 0.0)
        }
    }
}

/// Pure proximal-ADMM minimization: the saddle algorithms with the `y`
/// update removed. Requires an instance whose objective does not depend on
/// `y` at all.
pub fn run_admm_min(problem: &SaddleProblem, config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    if !y_independent(problem) {
        return Err(Error::InvalidParam(
            "minimization variant needs a y-independent objective".into(),
        ));
    }
    let steps = resolve_stepsizes(problem, config)?;
    let mut x = initial_point(problem.x_blocks(), &config.x0, problem.center_x())?;
    let y = initial_point(problem.y_blocks(), &config.y0, problem.center_y())?;
    let mut lambda = vec![0.0; problem.n()];

    let mut x_avg = Averager::new(&problem.x_dims());
    let mut trace = Trace::empty(steps);
    let start = Instant::now();

    for k in 0..config.t {
        let state = AdmmState::new(x.clone(), lambda.clone(), steps.gamma, steps.sigma_x)?;
        let next = prox_admm_step(problem, &state, &y, config.inner_tol)?;
        x_avg.push(&next.x);
        if config.record_iterates {
            trace.x_stream.push(next.x.clone());
        }
        if config.record_snapshots {
            trace.snapshots.push(Snapshot::AdmmMin {
                x_k: x.clone(),
                lambda_k: lambda.clone(),
                x_k1: next.x.clone(),
                lambda_k1: next.lambda.clone(),
            });
        }
        let gap = if config.gap_eval_every > 0 && (k + 1) % config.gap_eval_every == 0 {
            crate::certify::penalty_gap(
                problem,
                &x_avg.mean(),
                &y,
                config.rho_report,
                GAP_SNAPSHOT_TOL,
            )
            .ok()
            .map(|r| r.penalty_gap)
        } else {
            None
        };
        trace.rows.push(TraceRow {
            iter: k + 1,
            res_x: problem.residual_x(&next.x),
            res_y: 0.0,
            dx_norm: x.dist(&next.x),
            dy_norm: 0.0,
            gap,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        x = next.x;
        lambda = next.lambda;
    }
    Ok(RunOutput {
        x_avg: x_avg.mean(),
        y_avg: y,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbedVariant {
    Ssg,
    Seg,
}

/// Multi-block repair: adds the strongly convex perturbation
/// `(ε/2)Σ_{i≥2}‖x_i − x_i⁰‖²` with `ε = c/√T`, sets the matching penalty
/// `γ = ε/(N(N−1)·max_{i≥2}‖A_i‖²)`, runs the chosen one-side variant on
/// the perturbed instance, and reports gaps against the original problem.
pub fn run_perturbed(
    variant: PerturbedVariant,
    problem: &SaddleProblem,
    config: &RunConfig,
) -> Result<RunOutput> {
    config.validate()?;
    let nb = problem.num_x_blocks();
    if nb < 3 {
        return Err(Error::InvalidParam(
            "perturbed variants target N ≥ 3 (use the plain variant)".into(),
        ));
    }
    require_one_side(problem)?;
    let eps = if config.perturbation_eps > 0.0 {
        config.perturbation_eps
    } else {
        1.0 / (config.t as f64).sqrt()
    };
    let anchor = match &config.x0 {
        Some(p) => p.clone(),
        None => problem.center_x(),
    };
    let perturbed = perturb(problem, eps, &anchor)?;

    let max_na = problem.constants().norm_a_blocks[1..]
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    if max_na <= 0.0 {
        return Err(Error::MissingConstant(
            "nonzero later constraint blocks for the perturbed γ rule".into(),
        ));
    }
    let gamma = eps / ((nb * (nb - 1)) as f64 * max_na * max_na);

    let mut cfg = config.clone();
    cfg.gamma = super::StepSize::Fixed(gamma);
    cfg.perturbation_eps = eps;
    cfg.x0 = Some(anchor);
    match variant {
        PerturbedVariant::Ssg => {
            cfg.algorithm = Algorithm::SsgAdmm;
            run_ssg_inner(&perturbed, &cfg, problem)
        }
        PerturbedVariant::Seg => {
            cfg.algorithm = Algorithm::SegAdmm;
            run_seg_inner(&perturbed, &cfg, problem)
        }
    }
}

impl Trace {
    fn empty(steps: StepSizes) -> Self {
        Trace {
            rows: Vec::new(),
            steps,
            x_stream: Vec::new(),
            y_stream: Vec::new(),
            snapshots: Vec::new(),
            seg_cancel_min: None,
        }
    }
}
