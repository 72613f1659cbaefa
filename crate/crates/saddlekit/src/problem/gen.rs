//! Deterministic synthetic instance families. Every generator is a pure
//! function of its seed: identical inputs produce bitwise-identical
//! problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    BlockSpec, ConeKind, ConicSaddleProblem, Coupling, ProblemMeta, ProblemParts,
    QuadraticCoupling, SaddleProblem,
};
use crate::error::{Error, Result};
use crate::linalg::{norm, operator_norm, BlockVector, ConvexSet, Matrix, SeparableTerm};

const NORM_TOL: f64 = 1e-12;
/// Safety factor applied on top of corner-maximization supergradient bounds.
const ELL_SAFETY: f64 = 1.1;

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = uniform(rng, lo, hi);
        }
    }
    m
}

fn random_box(rng: &mut ChaCha8Rng, dim: usize) -> ConvexSet {
    let center = uniform_vec(rng, dim, -0.5, 0.5);
    let halfwidth = uniform_vec(rng, dim, 0.5, 1.0);
    ConvexSet::Box {
        lo: center.iter().zip(&halfwidth).map(|(c, w)| c - w).collect(),
        hi: center.iter().zip(&halfwidth).map(|(c, w)| c + w).collect(),
    }
}

fn random_quadratic(rng: &mut ChaCha8Rng, dim: usize, min_curvature: f64) -> SeparableTerm {
    SeparableTerm::quadratic(
        uniform_vec(rng, dim, min_curvature, min_curvature + 1.0),
        uniform_vec(rng, dim, -1.0, 1.0),
    )
}

/// Componentwise bounding box of a block set, if compact.
fn bounding_box(set: &ConvexSet) -> Option<(Vec<f64>, Vec<f64>)> {
    match set {
        ConvexSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
        ConvexSet::Ball { center, radius } => Some((
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )),
        ConvexSet::Simplex { dim } => Some((vec![0.0; *dim], vec![1.0; *dim])),
        ConvexSet::NonnegBall { dim, radius } => Some((vec![0.0; *dim], vec![*radius; *dim])),
        ConvexSet::Free { .. } => None,
    }
}

/// Upper bound on `sup ‖∂_y Φ‖` over the block sets via corner
/// maximization of `|∇_y Ψ|` plus per-component subgradient bounds of `g`,
/// inflated by a safety factor. `None` when some set is unbounded.
fn ell_bound(coupling: &Coupling, x_blocks: &[BlockSpec], y_blocks: &[BlockSpec]) -> Option<f64> {
    let mut xlo = Vec::new();
    let mut xhi = Vec::new();
    for b in x_blocks {
        let (l, h) = bounding_box(&b.set)?;
        xlo.extend(l);
        xhi.extend(h);
    }
    let mut ylo = Vec::new();
    let mut yhi = Vec::new();
    for b in y_blocks {
        let (l, h) = bounding_box(&b.set)?;
        ylo.extend(l);
        yhi.extend(h);
    }
    let mut per_comp = coupling.grad_y_componentwise_bound(&xlo, &xhi, &ylo, &yhi);
    let mut at = 0;
    for b in y_blocks {
        let d = b.set.dim();
        match &b.term {
            SeparableTerm::Zero => {}
            SeparableTerm::Quadratic { diag, linear, .. } => {
                for j in 0..d {
                    per_comp[at + j] +=
                        diag[j] * ylo[at + j].abs().max(yhi[at + j].abs()) + linear[j].abs();
                }
            }
            SeparableTerm::ScaledL1 { weight } => {
                for j in 0..d {
                    per_comp[at + j] += weight;
                }
            }
            SeparableTerm::PiecewiseLinearMax { slopes, .. } => {
                for j in 0..d {
                    let m = slopes.iter().map(|s| s[j].abs()).fold(0.0, f64::max);
                    per_comp[at + j] += m;
                }
            }
        }
        at += d;
    }
    Some(ELL_SAFETY * norm(&per_comp))
}

fn finish(mut parts: ProblemParts) -> Result<SaddleProblem> {
    if parts.ell.is_none() {
        parts.ell = ell_bound(&parts.coupling, &parts.x_blocks, &parts.y_blocks);
    }
    SaddleProblem::new(parts)
}

/// Random bilinear-quadratic instance
/// `Ψ(x,y) = ½xᵀPx + c_xᵀx + xᵀKy − ½yᵀQy − c_yᵀy` with quadratic separable
/// terms, box sets, and constraints anchored at an interior point so the
/// feasible sampler is exact.
pub fn gen_bilinear_qp(
    seed: u64,
    n_blocks_x: usize,
    n_blocks_y: usize,
    block_dim: usize,
    rows_n: usize,
    rows_m: usize,
    condition: f64,
) -> Result<SaddleProblem> {
    if n_blocks_x == 0 || n_blocks_y == 0 || block_dim == 0 {
        return Err(Error::InvalidParam("block counts and dims must be ≥ 1".into()));
    }
    if condition < 1.0 {
        return Err(Error::InvalidParam("condition must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = n_blocks_x * block_dim;
    let dy = n_blocks_y * block_dim;

    let x_blocks: Vec<BlockSpec> = (0..n_blocks_x)
        .map(|_| BlockSpec {
            set: random_box(&mut rng, block_dim),
            term: random_quadratic(&mut rng, block_dim, 0.5),
        })
        .collect();
    let y_blocks: Vec<BlockSpec> = (0..n_blocks_y)
        .map(|_| BlockSpec {
            set: random_box(&mut rng, block_dim),
            term: random_quadratic(&mut rng, block_dim, 0.5),
        })
        .collect();

    let coupling = Coupling::Quadratic(QuadraticCoupling {
        p_diag: uniform_vec(&mut rng, dx, 1.0, condition),
        q_diag: uniform_vec(&mut rng, dy, 1.0, condition),
        k: random_matrix(&mut rng, dx, dy, -1.0, 1.0),
        c_x: uniform_vec(&mut rng, dx, -0.5, 0.5),
        c_y: uniform_vec(&mut rng, dy, -0.5, 0.5),
    });

    let a_blocks: Vec<Matrix> = (0..if rows_n > 0 { n_blocks_x } else { 0 })
        .map(|_| random_matrix(&mut rng, rows_n, block_dim, -1.0, 1.0))
        .collect();
    let b_blocks: Vec<Matrix> = (0..if rows_m > 0 { n_blocks_y } else { 0 })
        .map(|_| random_matrix(&mut rng, rows_m, block_dim, -1.0, 1.0))
        .collect();

    let feasible_x = BlockVector::new(x_blocks.iter().map(|b| b.set.center()).collect());
    let feasible_y = BlockVector::new(y_blocks.iter().map(|b| b.set.center()).collect());
    let a_rhs = super::apply_blocks_pub(&a_blocks, rows_n, &feasible_x);
    let b_rhs = super::apply_blocks_pub(&b_blocks, rows_m, &feasible_y);

    finish(ProblemParts {
        x_blocks,
        y_blocks,
        coupling,
        a_blocks,
        a_rhs,
        b_blocks,
        b_rhs,
        feasible_x,
        feasible_y,
        ell: None,
        meta: ProblemMeta {
            generator: "bilinear_qp".into(),
            seed,
        },
    })
}

/// One-side instance that is nonsmooth in `y`: two quadratic x-blocks under
/// an affine constraint, and scalar y-blocks carrying piecewise-linear-max
/// terms with an analytically known supergradient bound.
pub fn gen_bilinear_plm(
    seed: u64,
    block_dim: usize,
    rows_n: usize,
    y_blocks: usize,
    pieces: usize,
) -> Result<SaddleProblem> {
    if block_dim == 0 || rows_n == 0 || y_blocks == 0 || pieces == 0 {
        return Err(Error::InvalidParam("all sizes must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = 2 * block_dim;
    let dy = y_blocks;

    let x_blocks: Vec<BlockSpec> = (0..2)
        .map(|_| BlockSpec {
            set: random_box(&mut rng, block_dim),
            term: random_quadratic(&mut rng, block_dim, 0.5),
        })
        .collect();
    let y_specs: Vec<BlockSpec> = (0..y_blocks)
        .map(|_| {
            let slopes: Vec<Vec<f64>> = (0..pieces)
                .map(|_| vec![uniform(&mut rng, -2.0, 2.0)])
                .collect();
            let offsets = uniform_vec(&mut rng, pieces, -1.0, 1.0);
            BlockSpec {
                set: ConvexSet::Box {
                    lo: vec![-1.0],
                    hi: vec![1.0],
                },
                term: SeparableTerm::PiecewiseLinearMax { slopes, offsets },
            }
        })
        .collect();

    let coupling = Coupling::Quadratic(QuadraticCoupling {
        p_diag: uniform_vec(&mut rng, dx, 0.5, 1.5),
        q_diag: uniform_vec(&mut rng, dy, 0.25, 0.75),
        k: random_matrix(&mut rng, dx, dy, -1.0, 1.0),
        c_x: uniform_vec(&mut rng, dx, -0.25, 0.25),
        c_y: uniform_vec(&mut rng, dy, -0.25, 0.25),
    });

    let a_blocks: Vec<Matrix> = (0..2)
        .map(|_| random_matrix(&mut rng, rows_n, block_dim, -1.0, 1.0))
        .collect();
    let feasible_x = BlockVector::new(x_blocks.iter().map(|b| b.set.center()).collect());
    let feasible_y = BlockVector::new(y_specs.iter().map(|b| b.set.center()).collect());
    let a_rhs = super::apply_blocks_pub(&a_blocks, rows_n, &feasible_x);

    finish(ProblemParts {
        x_blocks,
        y_blocks: y_specs,
        coupling,
        a_blocks,
        a_rhs,
        b_blocks: Vec::new(),
        b_rhs: Vec::new(),
        feasible_x,
        feasible_y,
        ell: None,
        meta: ProblemMeta {
            generator: "bilinear_plm".into(),
            seed,
        },
    })
}

/// Radius rule for slack-variable sets: the right-hand-side norm plus the
/// largest resource any feasible strategy profile can consume.
pub fn slack_radius(rhs_norm: f64, pairs: &[(f64, f64)]) -> f64 {
    rhs_norm + pairs.iter().map(|(n, m)| n * m).sum::<f64>()
}

/// Two-player multi-stage resource game with nonnegative slack blocks on
/// both sides. `stages` is the number of game stages; each side gets one
/// extra slack block carrying an identity constraint column.
pub fn gen_resource_game(
    seed: u64,
    stages: usize,
    dim_per_stage: usize,
    budget_a: f64,
    budget_b: f64,
) -> Result<SaddleProblem> {
    if stages < 2 {
        return Err(Error::InvalidParam("need at least two stages".into()));
    }
    if dim_per_stage == 0 {
        return Err(Error::InvalidParam("dim_per_stage must be ≥ 1".into()));
    }
    if budget_a <= 0.0 || budget_b <= 0.0 {
        return Err(Error::InvalidParam("budgets must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dim_per_stage;
    let n = d; // constraint rows = slack dimension

    let mut x_blocks = Vec::with_capacity(stages + 1);
    let mut y_blocks = Vec::with_capacity(stages + 1);
    let mut a_blocks = Vec::with_capacity(stages + 1);
    let mut b_blocks = Vec::with_capacity(stages + 1);
    for _ in 0..stages {
        let ux = uniform_vec(&mut rng, d, 0.5, 1.5);
        x_blocks.push(BlockSpec {
            set: ConvexSet::Box {
                lo: vec![0.0; d],
                hi: ux,
            },
            term: random_quadratic(&mut rng, d, 0.5),
        });
        let uy = uniform_vec(&mut rng, d, 0.5, 1.5);
        y_blocks.push(BlockSpec {
            set: ConvexSet::Box {
                lo: vec![0.0; d],
                hi: uy,
            },
            term: random_quadratic(&mut rng, d, 0.5),
        });
        a_blocks.push(random_matrix(&mut rng, n, d, 0.0, 1.0));
        b_blocks.push(random_matrix(&mut rng, n, d, 0.0, 1.0));
    }

    // stagewise bilinear payoffs: block-diagonal cross term
    let dx = stages * d;
    let dy = stages * d;
    let mut k = Matrix::zeros(dx + n, dy + n);
    for s in 0..stages {
        for i in 0..d {
            for j in 0..d {
                k[(s * d + i, s * d + j)] = uniform(&mut rng, -1.0, 1.0);
            }
        }
    }
    let coupling = Coupling::Quadratic(QuadraticCoupling {
        p_diag: vec![0.0; dx + n],
        q_diag: vec![0.0; dy + n],
        k,
        c_x: vec![0.0; dx + n],
        c_y: vec![0.0; dy + n],
    });

    // interior strategies, then pick budgets that leave positive slack
    let mut x_stage: Vec<Vec<f64>> = Vec::new();
    for b in &x_blocks {
        x_stage.push(b.set.center().iter().map(|c| 0.5 * c).collect());
    }
    let mut y_stage: Vec<Vec<f64>> = Vec::new();
    for b in &y_blocks {
        y_stage.push(b.set.center().iter().map(|c| 0.5 * c).collect());
    }
    let spend_a = super::apply_blocks_pub(&a_blocks, n, &BlockVector::new(x_stage.clone()));
    let spend_b = super::apply_blocks_pub(&b_blocks, n, &BlockVector::new(y_stage.clone()));
    let margin_a: Vec<f64> = uniform_vec(&mut rng, n, 0.25, 1.0)
        .iter()
        .map(|m| m * budget_a)
        .collect();
    let margin_b: Vec<f64> = uniform_vec(&mut rng, n, 0.25, 1.0)
        .iter()
        .map(|m| m * budget_b)
        .collect();
    let a_rhs: Vec<f64> = spend_a.iter().zip(&margin_a).map(|(s, m)| s + m).collect();
    let b_rhs: Vec<f64> = spend_b.iter().zip(&margin_b).map(|(s, m)| s + m).collect();

    let r_x = slack_radius(
        norm(&a_rhs),
        &x_blocks
            .iter()
            .zip(&a_blocks)
            .map(|(blk, mat)| {
                let hi = match &blk.set {
                    ConvexSet::Box { hi, .. } => hi.clone(),
                    _ => unreachable!(),
                };
                (operator_norm(mat, NORM_TOL), norm(&hi))
            })
            .collect::<Vec<_>>(),
    );
    let r_y = slack_radius(
        norm(&b_rhs),
        &y_blocks
            .iter()
            .zip(&b_blocks)
            .map(|(blk, mat)| {
                let hi = match &blk.set {
                    ConvexSet::Box { hi, .. } => hi.clone(),
                    _ => unreachable!(),
                };
                (operator_norm(mat, NORM_TOL), norm(&hi))
            })
            .collect::<Vec<_>>(),
    );
    x_blocks.push(BlockSpec {
        set: ConvexSet::NonnegBall { dim: n, radius: r_x },
        term: SeparableTerm::Zero,
    });
    y_blocks.push(BlockSpec {
        set: ConvexSet::NonnegBall { dim: n, radius: r_y },
        term: SeparableTerm::Zero,
    });
    a_blocks.push(Matrix::identity(n));
    b_blocks.push(Matrix::identity(n));

    let slack_a: Vec<f64> = a_rhs.iter().zip(&spend_a).map(|(a, s)| a - s).collect();
    let slack_b: Vec<f64> = b_rhs.iter().zip(&spend_b).map(|(b, s)| b - s).collect();
    let mut fx = x_stage;
    fx.push(slack_a);
    let mut fy = y_stage;
    fy.push(slack_b);

    finish(ProblemParts {
        x_blocks,
        y_blocks,
        coupling,
        a_blocks,
        a_rhs,
        b_blocks,
        b_rhs,
        feasible_x: BlockVector::new(fx),
        feasible_y: BlockVector::new(fy),
        ell: None,
        meta: ProblemMeta {
            generator: "resource_game".into(),
            seed,
        },
    })
}

/// Occupancy-measure reformulation of a clustered MDP with quadratic
/// utility. The maximizing occupancy variable becomes the constrained
/// x-side (cluster blocks under flow conservation), the conjugate variable
/// the unconstrained y-side, and the instance is solved as a minimization
/// of the negated objective.
pub fn gen_mdp_occupancy(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    n_clusters: usize,
    discount: f64,
    alpha: f64,
) -> Result<SaddleProblem> {
    if n_states == 0 || n_actions == 0 || n_clusters == 0 {
        return Err(Error::InvalidParam("state/action/cluster counts must be ≥ 1".into()));
    }
    if n_clusters > n_states {
        return Err(Error::InvalidParam("more clusters than states".into()));
    }
    if !(0.0 < discount && discount < 1.0) {
        return Err(Error::InvalidParam("discount must lie in (0,1)".into()));
    }
    if alpha <= 0.0 {
        return Err(Error::InvalidParam("alpha must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s_count = n_states;
    let a_count = n_actions;
    let sa = s_count * a_count;

    // transition kernel: rows P(·|s,a) sum to one
    let mut kernel = vec![vec![0.0; s_count]; sa];
    for row in kernel.iter_mut() {
        let raw = uniform_vec(&mut rng, s_count, 0.01, 1.0);
        let total: f64 = raw.iter().sum();
        for (r, v) in row.iter_mut().zip(&raw) {
            *r = v / total;
        }
    }

    // contiguous state clusters, sizes differing by at most one
    let base = s_count / n_clusters;
    let extra = s_count % n_clusters;
    let mut cluster_sizes = Vec::with_capacity(n_clusters);
    for i in 0..n_clusters {
        cluster_sizes.push(base + usize::from(i < extra));
    }

    let mass = 1.0 / (1.0 - discount);
    let mut x_blocks = Vec::with_capacity(n_clusters);
    for size in &cluster_sizes {
        let dim = size * a_count;
        let beta = uniform(&mut rng, 0.1, 0.5);
        let reward = uniform_vec(&mut rng, dim, 0.5, 1.5);
        x_blocks.push(BlockSpec {
            set: ConvexSet::Box {
                lo: vec![0.0; dim],
                hi: vec![mass; dim],
            },
            // negated concave local utility r(μ) = rewardᵀμ − (β/2)‖μ‖²
            term: SeparableTerm::quadratic(
                vec![beta; dim],
                reward.iter().map(|r| -r).collect(),
            ),
        });
    }

    // flow-conservation rows: Σ_a μ(s,a) − γ Σ_{s',a'} P(s|s',a') μ(s',a') = ξ(s)
    let mut a_blocks = Vec::with_capacity(n_clusters);
    let mut state_offset = 0;
    for size in &cluster_sizes {
        let dim = size * a_count;
        let mut mat = Matrix::zeros(s_count, dim);
        for local_s in 0..*size {
            let global_s = state_offset + local_s;
            for act in 0..a_count {
                let col = local_s * a_count + act;
                for row in 0..s_count {
                    let mut v = -discount * kernel[global_s * a_count + act][row];
                    if row == global_s {
                        v += 1.0;
                    }
                    mat[(row, col)] = v;
                }
            }
        }
        a_blocks.push(mat);
        state_offset += size;
    }
    let xi = vec![1.0 / s_count as f64; s_count];

    // conjugate variable z with g(z) = ‖z+c‖²/(2α)
    let c_util = uniform_vec(&mut rng, sa, 0.5, 1.5);
    let norm_c = norm(&c_util);
    let radius_z = ELL_SAFETY * (alpha * (sa as f64).sqrt() * mass + norm_c);
    let y_blocks = vec![BlockSpec {
        set: ConvexSet::Ball {
            center: vec![0.0; sa],
            radius: radius_z,
        },
        term: SeparableTerm::Quadratic {
            diag: vec![1.0 / alpha; sa],
            linear: c_util.iter().map(|c| c / alpha).collect(),
            constant: 0.5 * norm_c * norm_c / alpha,
        },
    }];

    let coupling = Coupling::Quadratic(QuadraticCoupling {
        p_diag: vec![0.0; sa],
        q_diag: vec![0.0; sa],
        k: Matrix::identity(sa),
        c_x: vec![0.0; sa],
        c_y: vec![0.0; sa],
    });

    // feasible occupancy from the uniform policy: solve the state flow
    // system, then split mass uniformly over actions
    let p_pi = Matrix::from_fn(s_count, s_count, |to, from| {
        let mut v = 0.0;
        for act in 0..a_count {
            v += kernel[from * a_count + act][to];
        }
        let mut entry = -discount * v / a_count as f64;
        if to == from {
            entry += 1.0;
        }
        entry
    });
    let mu_state = p_pi.solve(&xi).map_err(|_| {
        Error::InvalidParam("singular flow system despite discount < 1".into())
    })?;
    let mut feas_blocks = Vec::with_capacity(n_clusters);
    state_offset = 0;
    for size in &cluster_sizes {
        let mut block = Vec::with_capacity(size * a_count);
        for local_s in 0..*size {
            let v = mu_state[state_offset + local_s] / a_count as f64;
            block.extend(std::iter::repeat_n(v, a_count));
        }
        feas_blocks.push(block);
        state_offset += size;
    }
    let feasible_x = BlockVector::new(feas_blocks);
    let feasible_y = BlockVector::new(vec![vec![0.0; sa]]);

    finish(ProblemParts {
        x_blocks,
        y_blocks,
        coupling,
        a_blocks,
        a_rhs: xi,
        b_blocks: Vec::new(),
        b_rhs: Vec::new(),
        feasible_x,
        feasible_y,
        ell: None,
        meta: ProblemMeta {
            generator: "mdp_occupancy".into(),
            seed,
        },
    })
}

/// One-side multi-block family for rate studies: the coupling's
/// unconstrained saddle sits strictly inside the boxes, the affine
/// right-hand side is anchored near that saddle with a small `offset`
/// (keeping the constraint multiplier modest), and the box centers are
/// displaced from the saddle so initial points and perturbation anchors
/// genuinely have to travel.
pub fn gen_anchored_qp(
    seed: u64,
    n_blocks_x: usize,
    block_dim: usize,
    rows_n: usize,
    offset: f64,
) -> Result<SaddleProblem> {
    if n_blocks_x == 0 || block_dim == 0 || rows_n == 0 {
        return Err(Error::InvalidParam("all sizes must be ≥ 1".into()));
    }
    if offset < 0.0 {
        return Err(Error::InvalidParam("offset must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = block_dim;
    let dx = n_blocks_x * d;
    let dy = d;

    let h_diag = uniform_vec(&mut rng, dx, 0.5, 1.5);
    let h_lin = uniform_vec(&mut rng, dx, -1.0, 1.0);
    let g_diag = uniform_vec(&mut rng, dy, 0.5, 1.5);
    let g_lin = uniform_vec(&mut rng, dy, -1.0, 1.0);
    let p_diag = uniform_vec(&mut rng, dx, 0.5, 1.5);
    let q_diag = uniform_vec(&mut rng, dy, 0.5, 1.5);
    let k = random_matrix(&mut rng, dx, dy, -1.0, 1.0);
    let c_x = uniform_vec(&mut rng, dx, -0.5, 0.5);
    let c_y = uniform_vec(&mut rng, dy, -0.5, 0.5);

    // unconstrained saddle of h + Ψ − g:
    // [Hx K; Kᵀ −Hy]·[x; y] = [−(h_lin + c_x); c_y + g_lin]
    let sys = Matrix::from_fn(dx + dy, dx + dy, |i, j| {
        if i < dx && j < dx {
            if i == j {
                h_diag[i] + p_diag[i]
            } else {
                0.0
            }
        } else if i < dx {
            k[(i, j - dx)]
        } else if j < dx {
            k[(j, i - dx)]
        } else if i == j {
            -(q_diag[i - dx] + g_diag[i - dx])
        } else {
            0.0
        }
    });
    let mut rhs = vec![0.0; dx + dy];
    for i in 0..dx {
        rhs[i] = -(h_lin[i] + c_x[i]);
    }
    for j in 0..dy {
        rhs[dx + j] = c_y[j] + g_lin[j];
    }
    let saddle = sys
        .solve(&rhs)
        .map_err(|_| Error::InvalidParam("degenerate saddle system".into()))?;
    let (xs, ys) = saddle.split_at(dx);

    let a_blocks: Vec<Matrix> = (0..n_blocks_x)
        .map(|_| random_matrix(&mut rng, rows_n, d, -1.0, 1.0))
        .collect();
    let x_star = BlockVector::split(xs, &vec![d; n_blocks_x]);
    let mut a_rhs = super::apply_blocks_pub(&a_blocks, rows_n, &x_star);
    let dir = uniform_vec(&mut rng, rows_n, 0.5, 1.0);
    for (r, dv) in a_rhs.iter_mut().zip(&dir) {
        *r += offset * dv;
    }
    // closest point to the saddle on {Ax = a}
    let mut stacked = a_blocks[0].clone();
    for b in &a_blocks[1..] {
        stacked = stacked.hcat(b);
    }
    let gram = Matrix::from_fn(rows_n, rows_n, |i, j| {
        (0..stacked.cols()).map(|c| stacked[(i, c)] * stacked[(j, c)]).sum()
    });
    let resid: Vec<f64> = super::apply_blocks_pub(&a_blocks, rows_n, &x_star)
        .iter()
        .zip(&a_rhs)
        .map(|(v, a)| v - a)
        .collect();
    let mult = gram
        .solve(&resid)
        .map_err(|_| Error::InvalidParam("rank-deficient constraint rows".into()))?;
    let corr = stacked.matvec_t(&mult);
    let fx_flat: Vec<f64> = xs.iter().zip(&corr).map(|(x, c)| x - c).collect();
    let feasible_x = BlockVector::split(&fx_flat, &vec![d; n_blocks_x]);

    // boxes cover both the saddle and the feasible point, with the center
    // displaced from the saddle
    let mut x_blocks = Vec::with_capacity(n_blocks_x);
    for i in 0..n_blocks_x {
        let lo: Vec<f64> = (0..d)
            .map(|j| xs[i * d + j].min(fx_flat[i * d + j]) - 0.4)
            .collect();
        let hi: Vec<f64> = (0..d)
            .map(|j| xs[i * d + j].max(fx_flat[i * d + j]) + 1.6)
            .collect();
        x_blocks.push(BlockSpec {
            set: ConvexSet::Box { lo, hi },
            term: SeparableTerm::quadratic(
                h_diag[i * d..(i + 1) * d].to_vec(),
                h_lin[i * d..(i + 1) * d].to_vec(),
            ),
        });
    }
    let y_blocks = vec![BlockSpec {
        set: ConvexSet::Box {
            lo: ys.iter().map(|v| v - 0.4).collect(),
            hi: ys.iter().map(|v| v + 1.6).collect(),
        },
        term: SeparableTerm::quadratic(g_diag, g_lin),
    }];

    finish(ProblemParts {
        x_blocks,
        y_blocks,
        coupling: Coupling::Quadratic(QuadraticCoupling {
            p_diag,
            q_diag,
            k,
            c_x,
            c_y,
        }),
        a_blocks,
        a_rhs,
        b_blocks: Vec::new(),
        b_rhs: Vec::new(),
        feasible_x,
        feasible_y: BlockVector::split(ys, &[dy]),
        ell: None,
        meta: ProblemMeta {
            generator: "anchored_qp".into(),
            seed,
        },
    })
}

/// Pure minimization instance (no y-side at all): quadratic separable terms
/// plus a diagonal-quadratic coupling under one affine constraint block row
/// group, for the minimization-algorithm comparisons.
pub fn gen_min_qp(
    seed: u64,
    n_blocks: usize,
    block_dim: usize,
    rows_n: usize,
) -> Result<SaddleProblem> {
    if n_blocks == 0 || block_dim == 0 || rows_n == 0 {
        return Err(Error::InvalidParam("all sizes must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = n_blocks * block_dim;
    let x_blocks: Vec<BlockSpec> = (0..n_blocks)
        .map(|_| BlockSpec {
            set: random_box(&mut rng, block_dim),
            term: random_quadratic(&mut rng, block_dim, 0.5),
        })
        .collect();
    let coupling = Coupling::Quadratic(QuadraticCoupling {
        p_diag: uniform_vec(&mut rng, dx, 0.5, 1.5),
        q_diag: vec![],
        k: Matrix::zeros(dx, 0),
        c_x: uniform_vec(&mut rng, dx, -0.5, 0.5),
        c_y: vec![],
    });
    let a_blocks: Vec<Matrix> = (0..n_blocks)
        .map(|_| random_matrix(&mut rng, rows_n, block_dim, -1.0, 1.0))
        .collect();
    let feasible_x = BlockVector::new(x_blocks.iter().map(|b| b.set.center()).collect());
    let a_rhs = super::apply_blocks_pub(&a_blocks, rows_n, &feasible_x);
    finish(ProblemParts {
        x_blocks,
        y_blocks: vec![],
        coupling,
        a_blocks,
        a_rhs,
        b_blocks: Vec::new(),
        b_rhs: Vec::new(),
        feasible_x,
        feasible_y: BlockVector::new(vec![]),
        ell: Some(0.0),
        meta: ProblemMeta {
            generator: "min_qp".into(),
            seed,
        },
    })
}

/// The fixed three-scalar-block feasibility instance on which plain cyclic
/// ADMM diverges: columns (1,1,1), (1,1,2), (1,2,2), zero objective, a = 0.
pub fn divergence_3block() -> SaddleProblem {
    SaddleProblem::new(ProblemParts {
        x_blocks: (0..3)
            .map(|_| BlockSpec {
                set: ConvexSet::Free { dim: 1 },
                term: SeparableTerm::Zero,
            })
            .collect(),
        y_blocks: vec![],
        coupling: Coupling::zero(3, 0),
        a_blocks: vec![
            Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]),
            Matrix::from_rows(&[vec![1.0], vec![1.0], vec![2.0]]),
            Matrix::from_rows(&[vec![1.0], vec![2.0], vec![2.0]]),
        ],
        a_rhs: vec![0.0; 3],
        b_blocks: vec![],
        b_rhs: vec![],
        feasible_x: BlockVector::new(vec![vec![0.0], vec![0.0], vec![0.0]]),
        feasible_y: BlockVector::new(vec![]),
        ell: Some(0.0),
        meta: ProblemMeta {
            generator: "divergence_3block".into(),
            seed: 0,
        },
    })
    .expect("fixed instance is valid")
}

/// Nonnegative-orthant conic instance `Ax ⪯ a` over boxes anchored at the
/// origin, with a strictly feasible interior point.
pub fn gen_conic_qp(
    seed: u64,
    n_blocks_x: usize,
    block_dim: usize,
    rows_n: usize,
) -> Result<ConicSaddleProblem> {
    if n_blocks_x == 0 || block_dim == 0 || rows_n == 0 {
        return Err(Error::InvalidParam("all sizes must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = n_blocks_x * block_dim;
    let dy = block_dim;

    let x_blocks: Vec<BlockSpec> = (0..n_blocks_x)
        .map(|_| {
            let hi = uniform_vec(&mut rng, block_dim, 0.5, 1.5);
            BlockSpec {
                set: ConvexSet::Box {
                    lo: vec![0.0; block_dim],
                    hi,
                },
                term: random_quadratic(&mut rng, block_dim, 0.5),
            }
        })
        .collect();
    let y_blocks = vec![BlockSpec {
        set: ConvexSet::Box {
            lo: vec![-1.0; dy],
            hi: vec![1.0; dy],
        },
        term: random_quadratic(&mut rng, dy, 0.5),
    }];

    let coupling = Coupling::Quadratic(QuadraticCoupling {
        p_diag: uniform_vec(&mut rng, dx, 0.5, 1.5),
        q_diag: uniform_vec(&mut rng, dy, 0.5, 1.5),
        k: random_matrix(&mut rng, dx, dy, -1.0, 1.0),
        c_x: uniform_vec(&mut rng, dx, -0.5, 0.5),
        c_y: uniform_vec(&mut rng, dy, -0.5, 0.5),
    });

    let a_blocks: Vec<Matrix> = (0..n_blocks_x)
        .map(|_| random_matrix(&mut rng, rows_n, block_dim, 0.0, 1.0))
        .collect();
    let feasible_x = BlockVector::new(
        x_blocks
            .iter()
            .map(|b| b.set.center().iter().map(|c| 0.5 * c).collect())
            .collect(),
    );
    let feasible_y = BlockVector::new(y_blocks.iter().map(|b| b.set.center()).collect());
    let spend = super::apply_blocks_pub(&a_blocks, rows_n, &feasible_x);
    let margin = uniform_vec(&mut rng, rows_n, 0.3, 0.6);
    let a_rhs: Vec<f64> = spend.iter().zip(&margin).map(|(s, m)| s + m).collect();

    let mut parts = ProblemParts {
        x_blocks,
        y_blocks,
        coupling,
        a_blocks,
        a_rhs,
        b_blocks: Vec::new(),
        b_rhs: Vec::new(),
        feasible_x,
        feasible_y,
        ell: None,
        meta: ProblemMeta {
            generator: "conic_qp".into(),
            seed,
        },
    };
    parts.ell = ell_bound(&parts.coupling, &parts.x_blocks, &parts.y_blocks);
    ConicSaddleProblem::new(parts, Some(ConeKind::NonnegOrthant), None)
}
