//! Proximal ADMM sweep: sequential block minimization of the linearized
//! augmented Lagrangian plus per-block proximal terms, followed by the
//! multiplier update `λ⁺ = λ − γ(Ax⁺ − a)`. Also hosts the per-step
//! inequality checkers that certify the sweep's descent properties.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq, prox, sub, BlockVector, ConvexSet, Matrix, SeparableTerm};
use crate::problem::SaddleProblem;

/// State advanced by one `prox_admm_step`: primal blocks, multiplier, and
/// the penalty/proximal weights the sweep was configured with.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: BlockVector,
    pub lambda: Vec<f64>,
    /// Augmented-Lagrangian penalty γ > 0.
    pub gamma: f64,
    /// Proximal weight σ ≥ 0.
    pub sigma: f64,
}

impl AdmmState {
    pub fn new(x: BlockVector, lambda: Vec<f64>, gamma: f64, sigma: f64) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(Error::InvalidParam("gamma must be positive".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidParam("sigma must be nonnegative".into()));
        }
        Ok(AdmmState {
            x,
            lambda,
            gamma,
            sigma,
        })
    }
}

/// One Gauss-Seidel sweep at the anchor `y_tilde`.
///
/// Block `i` minimizes, over its set,
/// `h_i(w) + ⟨∇_{x_i}Ψ(x^k, ỹ), w⟩ − ⟨λ, A_i w⟩ + (γ/2)‖A_i w + r_i − a‖² + (σ/2)‖w − x_i^k‖²`
/// with `r_i` the running partial sum over already-updated earlier blocks
/// and stale later blocks; the partial sum is maintained incrementally.
pub fn prox_admm_step(
    problem: &SaddleProblem,
    state: &AdmmState,
    y_tilde: &BlockVector,
    tol: f64,
) -> Result<AdmmState> {
    let n = problem.n();
    if n == 0 {
        return Err(Error::InvalidParam(
            "prox-admm needs at least one x-constraint row".into(),
        ));
    }
    if y_tilde.dims() != problem.y_dims() {
        return Err(Error::DimensionMismatch {
            expected: problem.ny(),
            got: y_tilde.total_dim(),
        });
    }
    let gamma = state.gamma;
    let sigma = state.sigma;
    let grad_psi = problem.grad_x_psi(&state.x, y_tilde);

    // residual r = A x − a at the current mix of new and stale blocks
    let mut residual = sub(&problem.apply_a(&state.x), problem.a_rhs());
    let mut x_next = state.x.clone();
    for i in 0..problem.num_x_blocks() {
        let a_i = problem.a_block(i);
        let x_old = state.x.block(i);
        // drop block i's stale contribution
        axpy(&mut residual, -1.0, &a_i.matvec(x_old));

        // quadratic model: ½ wᵀ(γ A_iᵀA_i + σI) w + linᵀ w
        let mut lin = grad_psi.block(i).to_vec();
        axpy(&mut lin, -1.0, &a_i.matvec_t(&state.lambda));
        axpy(&mut lin, gamma, &a_i.matvec_t(&residual));
        axpy(&mut lin, -sigma, x_old);
        let mut quad = a_i.gram();
        for r in 0..quad.rows() {
            quad[(r, r)] = gamma * quad[(r, r)] + sigma;
            for c in 0..quad.cols() {
                if c != r {
                    quad[(r, c)] *= gamma;
                }
            }
        }

        let spec = problem.x_block(i);
        let w = solve_block_subproblem(&spec.set, &spec.term, &quad, &lin, tol)?;
        axpy(&mut residual, 1.0, &a_i.matvec(&w));
        *x_next.block_mut(i) = w;
    }

    // multiplier update from a freshly assembled residual
    let r_final = sub(&problem.apply_a(&x_next), problem.a_rhs());
    let lambda_next: Vec<f64> = state
        .lambda
        .iter()
        .zip(&r_final)
        .map(|(l, r)| l - gamma * r)
        .collect();

    Ok(AdmmState {
        x: x_next,
        lambda: lambda_next,
        gamma,
        sigma,
    })
}

const BLOCK_CAP: usize = 50_000;

/// Minimizes `½ wᵀ Q w + linᵀ w + term(w)` over the set, `Q` PSD.
///
/// Closed form via a dense solve (plus a clamp in one dimension) when the
/// term is quadratic and the set is `Free` or a one-dimensional box;
/// otherwise an accelerated proximal-gradient loop to stationarity `tol`.
pub fn solve_block_subproblem(
    set: &ConvexSet,
    term: &SeparableTerm,
    quad: &Matrix,
    lin: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let d = set.dim();
    assert_eq!(quad.rows(), d);
    assert_eq!(lin.len(), d);
    let (term_diag, term_lin, nonsmooth) = term.smooth_split(d);

    let closed_form_set = match set {
        ConvexSet::Free { .. } => true,
        ConvexSet::Box { .. } => d == 1,
        _ => false,
    };
    if matches!(nonsmooth, SeparableTerm::Zero) && closed_form_set {
        let mut sys = quad.clone();
        for j in 0..d {
            sys[(j, j)] += term_diag[j];
        }
        let rhs: Vec<f64> = lin.iter().zip(&term_lin).map(|(a, b)| -(a + b)).collect();
        let w = sys.solve(&rhs)?;
        return Ok(match set {
            ConvexSet::Box { lo, hi } => {
                // exact in one dimension: scalar convex objective clamps
                vec![w[0].max(lo[0]).min(hi[0])]
            }
            _ => w,
        });
    }

    // accelerated proximal gradient on the smooth part, with the nonsmooth
    // remainder and the set handled by the prox operator
    let lf = {
        let gram_norm = crate::linalg::operator_norm(quad, 1e-10);
        gram_norm + term_diag.iter().cloned().fold(0.0, f64::max)
    };
    let lf = lf.max(1e-12);
    let grad = |w: &[f64]| -> Vec<f64> {
        let mut g = quad.matvec(w);
        for j in 0..d {
            g[j] += lin[j] + term_diag[j] * w[j] + term_lin[j];
        }
        g
    };
    let objective = |w: &[f64]| -> f64 {
        0.5 * dot(w, &quad.matvec(w))
            + dot(lin, w)
            + 0.5 * term_diag.iter().zip(w).map(|(dj, wj)| dj * wj * wj).sum::<f64>()
            + dot(&term_lin, w)
            + nonsmooth.value(w)
    };

    let mut w = set.project(&vec![0.0; d])?;
    let mut z = w.clone();
    let mut t_prev = 1.0f64;
    let mut f_prev = f64::INFINITY;
    for _ in 0..BLOCK_CAP {
        let g = grad(&z);
        let target: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lf).collect();
        let w_next = prox(&nonsmooth, set, &target, 1.0 / lf, tol * 0.1)?;
        let residual = lf * norm_sq(&sub(&w_next, &z)).sqrt();

        let f_next = objective(&w_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
        let beta = (t_prev - 1.0) / t_next;
        let z_next: Vec<f64> = if f_next > f_prev {
            t_prev = 1.0;
            w_next.clone()
        } else {
            t_prev = t_next;
            w_next
                .iter()
                .zip(&w)
                .map(|(wn, wo)| wn + beta * (wn - wo))
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
        iters: BLOCK_CAP,
        tol,
        residual: f64::NAN,
    })
}

/// RHS − LHS of the two-block per-step inequality, evaluated at a feasible
/// comparator `x_feas` and an arbitrary multiplier probe. Nonnegative (to
/// 1e-8) whenever the step was produced with exact block solves and
/// `σ ≥ L_x`.
pub fn lemma2_slack(
    problem: &SaddleProblem,
    state_k: &AdmmState,
    state_k1: &AdmmState,
    y_tilde: &BlockVector,
    x_feas: &BlockVector,
    lambda_probe: &[f64],
) -> Result<f64> {
    if problem.num_x_blocks() != 2 {
        return Err(Error::InvalidParam(
            "two-block checker needs exactly N = 2".into(),
        ));
    }
    check_feasible_comparator(problem, x_feas)?;
    let gamma = state_k.gamma;
    let sigma = state_k.sigma;
    let l_x = problem.constants().l_x;

    let ax_next = sub(&problem.apply_a(&state_k1.x), problem.a_rhs());
    let lhs = problem.phi(&state_k1.x, y_tilde) - problem.phi(x_feas, y_tilde)
        - dot(lambda_probe, &ax_next);

    let lam_k = norm_sq(&sub(lambda_probe, &state_k.lambda));
    let lam_k1 = norm_sq(&sub(lambda_probe, &state_k1.lambda));
    // comparator block 1 with iterate block 2, old and new
    let mixed = |x2: &[f64]| -> f64 {
        let mut r = problem.a_block(0).matvec(x_feas.block(0));
        axpy(&mut r, 1.0, &problem.a_block(1).matvec(x2));
        axpy(&mut r, -1.0, problem.a_rhs());
        norm_sq(&r)
    };
    let rhs = (lam_k - lam_k1) / (2.0 * gamma)
        + 0.5 * gamma * (mixed(state_k.x.block(1)) - mixed(state_k1.x.block(1)))
        + 0.5 * sigma * (x_feas.dist_sq(&state_k.x) - x_feas.dist_sq(&state_k1.x))
        - 0.5 * (sigma - l_x) * state_k.x.dist_sq(&state_k1.x);
    Ok(rhs - lhs)
}

/// RHS − LHS of the multi-block (N ≥ 3) per-step inequality under partial
/// strong convexity, including the telescoping mixed-residual terms and the
/// `−½(μ_i − γN(N−1)‖A_i‖²)‖x_i − x_i⁺‖²` corrections.
pub fn lemma_n_slack(
    problem: &SaddleProblem,
    state_k: &AdmmState,
    state_k1: &AdmmState,
    y_tilde: &BlockVector,
    x_feas: &BlockVector,
    lambda_probe: &[f64],
) -> Result<f64> {
    let nb = problem.num_x_blocks();
    if nb < 3 {
        return Err(Error::InvalidParam(
            "multi-block checker needs N ≥ 3 (use the two-block checker)".into(),
        ));
    }
    let mut mus = Vec::with_capacity(nb);
    for i in 1..nb {
        let mu = problem.mu_x(i);
        if mu <= 0.0 {
            return Err(Error::MissingConstant(format!(
                "strong-convexity modulus of x-block {i}"
            )));
        }
        mus.push(mu);
    }
    check_feasible_comparator(problem, x_feas)?;
    let gamma = state_k.gamma;
    let gamma_rule = strong_convexity_gamma(problem)?;
    if gamma > gamma_rule * (1.0 + 1e-12) {
        return Err(Error::InvalidParam(format!(
            "gamma {gamma} exceeds the strong-convexity rule {gamma_rule}"
        )));
    }
    let sigma = state_k.sigma;
    let l_x = problem.constants().l_x;

    let ax_next = sub(&problem.apply_a(&state_k1.x), problem.a_rhs());
    let lhs = problem.phi(&state_k1.x, y_tilde) - problem.phi(x_feas, y_tilde)
        - dot(lambda_probe, &ax_next);

    let lam_k = norm_sq(&sub(lambda_probe, &state_k.lambda));
    let lam_k1 = norm_sq(&sub(lambda_probe, &state_k1.lambda));

    // ‖𝒜(x_{1:j−1}, x_{j:N})−a‖² with comparator blocks before j and iterate
    // blocks from j on
    let mixed = |j: usize, xs: &BlockVector| -> f64 {
        let mut r = vec![0.0; problem.n()];
        for i in 0..nb {
            let v = if i < j { x_feas.block(i) } else { xs.block(i) };
            axpy(&mut r, 1.0, &problem.a_block(i).matvec(v));
        }
        axpy(&mut r, -1.0, problem.a_rhs());
        norm_sq(&r)
    };
    let mut telescope = 0.0;
    for j in 1..nb {
        telescope += mixed(j, &state_k.x) - mixed(j, &state_k1.x);
    }

    let mut sc_terms = 0.0;
    let nn = (nb * (nb - 1)) as f64;
    for i in 1..nb {
        let norm_ai = problem.constants().norm_a_blocks[i];
        let coeff = mus[i - 1] - gamma * nn * norm_ai * norm_ai;
        sc_terms += coeff * crate::linalg::dist_sq(x_feas.block(i), state_k1.x.block(i));
    }

    let rhs = (lam_k - lam_k1) / (2.0 * gamma)
        + 0.5 * sigma * (x_feas.dist_sq(&state_k.x) - x_feas.dist_sq(&state_k1.x))
        + 0.5 * gamma * telescope
        - 0.5 * (sigma - l_x) * state_k.x.dist_sq(&state_k1.x)
        - 0.5 * sc_terms;
    Ok(rhs - lhs)
}

/// `γ = 1/(N(N−1)) · min_{i≥2} μ_i/‖A_i‖²`, the penalty rule under partial
/// strong convexity.
pub fn strong_convexity_gamma(problem: &SaddleProblem) -> Result<f64> {
    let nb = problem.num_x_blocks();
    if nb < 2 {
        return Err(Error::InvalidParam("need at least two blocks".into()));
    }
    let mut min_ratio = f64::INFINITY;
    for i in 1..nb {
        let mu = problem.mu_x(i);
        if mu <= 0.0 {
            return Err(Error::MissingConstant(format!(
                "strong-convexity modulus of x-block {i}"
            )));
        }
        let na = problem.constants().norm_a_blocks[i];
        if na == 0.0 {
            continue;
        }
        min_ratio = min_ratio.min(mu / (na * na));
    }
    if !min_ratio.is_finite() {
        return Err(Error::InvalidParam("all later constraint blocks are zero".into()));
    }
    Ok(min_ratio / (nb * (nb - 1)) as f64)
}

fn check_feasible_comparator(problem: &SaddleProblem, x_feas: &BlockVector) -> Result<f64> {
    let res = problem.residual_x(x_feas);
    if res > 1e-9 {
        return Err(Error::InvalidParam(format!(
            "comparator residual {res:.2e} exceeds 1e-9"
        )));
    }
    Ok(res)
}
