//! The block-structured saddle-point problem record, its oracles, the
//! deterministic instance generators, and the perturbation / conic
//! reformulation transforms.

mod coupling;
pub mod gen;
mod transform;

pub use coupling::{Coupling, QuadraticCoupling};
pub use transform::{conic_to_equality, perturb, ConeKind, ConicSaddleProblem};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, operator_norm, sub, BlockVector, ConvexSet, Matrix, SeparableTerm};

pub const FEASIBILITY_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-12;

/// Feasible set and separable objective term of one variable block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub set: ConvexSet,
    pub term: SeparableTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ProblemMeta {
    pub generator: String,
    pub seed: u64,
}

/// Raw problem data before validation. Constraint matrices are dense and
/// row-major; an empty `a_blocks` list means the x-side has no affine
/// constraint (`n = 0`), likewise for `b_blocks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParts {
    pub x_blocks: Vec<BlockSpec>,
    pub y_blocks: Vec<BlockSpec>,
    pub coupling: Coupling,
    pub a_blocks: Vec<Matrix>,
    pub a_rhs: Vec<f64>,
    pub b_blocks: Vec<Matrix>,
    pub b_rhs: Vec<f64>,
    /// Stored output of the deterministic feasible sampler.
    pub feasible_x: BlockVector,
    pub feasible_y: BlockVector,
    /// Uniform bound on `‖∂_y Φ‖` for instances that are nonsmooth in `y`.
    pub ell: Option<f64>,
    pub meta: ProblemMeta,
}

/// Constants derived from the problem data at construction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Lipschitz constant of the full coupling gradient `∇Ψ`.
    pub l_full: f64,
    /// Lipschitz constant of `∇_x Ψ(·, y)`.
    pub l_x: f64,
    /// Lipschitz constant of `∇_y Φ(·,·)`, present only for smooth-in-y
    /// instances.
    pub l_y: Option<f64>,
    pub norm_a: f64,
    pub norm_b: f64,
    pub norm_a_blocks: Vec<f64>,
    pub norm_b_blocks: Vec<f64>,
}

/// A validated multi-block convex-concave saddle-point instance
/// `min_x max_y h(x) + Ψ(x,y) − g(y)  s.t.  Ax = a, By = b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleProblem {
    parts: ProblemParts,
    constants: Constants,
}

impl SaddleProblem {
    pub fn new(parts: ProblemParts) -> Result<Self> {
        validate_structure(&parts)?;
        validate_equality_feasible(&parts)?;
        let constants = derive_constants(&parts);
        Ok(SaddleProblem { parts, constants })
    }

    pub fn parts(&self) -> &ProblemParts {
        &self.parts
    }

    pub fn into_parts(self) -> ProblemParts {
        self.parts
    }

    pub fn meta(&self) -> &ProblemMeta {
        &self.parts.meta
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn num_x_blocks(&self) -> usize {
        self.parts.x_blocks.len()
    }

    pub fn num_y_blocks(&self) -> usize {
        self.parts.y_blocks.len()
    }

    pub fn x_block(&self, i: usize) -> &BlockSpec {
        &self.parts.x_blocks[i]
    }

    pub fn y_block(&self, j: usize) -> &BlockSpec {
        &self.parts.y_blocks[j]
    }

    pub fn x_blocks(&self) -> &[BlockSpec] {
        &self.parts.x_blocks
    }

    pub fn y_blocks(&self) -> &[BlockSpec] {
        &self.parts.y_blocks
    }

    pub fn x_dims(&self) -> Vec<usize> {
        self.parts.x_blocks.iter().map(|b| b.set.dim()).collect()
    }

    pub fn y_dims(&self) -> Vec<usize> {
        self.parts.y_blocks.iter().map(|b| b.set.dim()).collect()
    }

    pub fn nx(&self) -> usize {
        self.x_dims().iter().sum()
    }

    pub fn ny(&self) -> usize {
        self.y_dims().iter().sum()
    }

    /// Number of x-constraint rows.
    pub fn n(&self) -> usize {
        self.parts.a_rhs.len()
    }

    /// Number of y-constraint rows.
    pub fn m(&self) -> usize {
        self.parts.b_rhs.len()
    }

    pub fn a_block(&self, i: usize) -> &Matrix {
        &self.parts.a_blocks[i]
    }

    pub fn b_block(&self, j: usize) -> &Matrix {
        &self.parts.b_blocks[j]
    }

    pub fn a_rhs(&self) -> &[f64] {
        &self.parts.a_rhs
    }

    pub fn b_rhs(&self) -> &[f64] {
        &self.parts.b_rhs
    }

    pub fn coupling(&self) -> &Coupling {
        &self.parts.coupling
    }

    pub fn ell(&self) -> Option<f64> {
        self.parts.ell
    }

    pub fn smooth_in_y(&self) -> bool {
        self.parts.y_blocks.iter().all(|b| b.term.is_smooth())
    }

    /// Stored deterministic feasible point.
    pub fn feasible(&self) -> (&BlockVector, &BlockVector) {
        (&self.parts.feasible_x, &self.parts.feasible_y)
    }

    /// `Ax` (length `n`; empty when the x-side is unconstrained).
    pub fn apply_a(&self, x: &BlockVector) -> Vec<f64> {
        apply_blocks(&self.parts.a_blocks, self.n(), x)
    }

    pub fn apply_b(&self, y: &BlockVector) -> Vec<f64> {
        apply_blocks(&self.parts.b_blocks, self.m(), y)
    }

    pub fn residual_x(&self, x: &BlockVector) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        norm(&sub(&self.apply_a(x), &self.parts.a_rhs))
    }

    pub fn residual_y(&self, y: &BlockVector) -> f64 {
        if self.m() == 0 {
            return 0.0;
        }
        norm(&sub(&self.apply_b(y), &self.parts.b_rhs))
    }

    pub fn h_value(&self, x: &BlockVector) -> f64 {
        self.parts
            .x_blocks
            .iter()
            .zip(x.blocks())
            .map(|(b, v)| b.term.value(v))
            .sum()
    }

    pub fn g_value(&self, y: &BlockVector) -> f64 {
        self.parts
            .y_blocks
            .iter()
            .zip(y.blocks())
            .map(|(b, v)| b.term.value(v))
            .sum()
    }

    pub fn psi_value(&self, x: &BlockVector, y: &BlockVector) -> f64 {
        self.parts.coupling.value(&x.concat(), &y.concat())
    }

    /// `Φ(x,y) = h(x) + Ψ(x,y) − g(y)`.
    pub fn phi(&self, x: &BlockVector, y: &BlockVector) -> f64 {
        self.h_value(x) + self.psi_value(x, y) - self.g_value(y)
    }

    pub fn grad_x_psi(&self, x: &BlockVector, y: &BlockVector) -> BlockVector {
        let g = self.parts.coupling.grad_x(&x.concat(), &y.concat());
        BlockVector::split(&g, &self.x_dims())
    }

    pub fn grad_y_psi(&self, x: &BlockVector, y: &BlockVector) -> BlockVector {
        let g = self.parts.coupling.grad_y(&x.concat(), &y.concat());
        BlockVector::split(&g, &self.y_dims())
    }

    /// A deterministic supergradient of `Φ(x, ·)` at `y`:
    /// `∇_y Ψ(x,y) − u` with `u ∈ ∂g(y)` chosen deterministically.
    pub fn supergrad_y_phi(&self, x: &BlockVector, y: &BlockVector) -> BlockVector {
        let mut g = self.grad_y_psi(x, y);
        for (j, spec) in self.parts.y_blocks.iter().enumerate() {
            let sub = spec.term.subgradient(y.block(j));
            for (gi, si) in g.block_mut(j).iter_mut().zip(&sub) {
                *gi -= si;
            }
        }
        g
    }

    pub fn diam_x(&self) -> Result<f64> {
        product_diameter(&self.parts.x_blocks)
    }

    pub fn diam_y(&self) -> Result<f64> {
        product_diameter(&self.parts.y_blocks)
    }

    pub fn diam_x_block(&self, i: usize) -> Result<f64> {
        self.parts.x_blocks[i].set.diameter()
    }

    pub fn diam_y_block(&self, j: usize) -> Result<f64> {
        self.parts.y_blocks[j].set.diameter()
    }

    /// Strong-convexity modulus of `h_i`.
    pub fn mu_x(&self, i: usize) -> f64 {
        self.parts.x_blocks[i].term.strong_convexity()
    }

    /// Default initial point: per-block reference centers.
    pub fn center_x(&self) -> BlockVector {
        BlockVector::new(self.parts.x_blocks.iter().map(|b| b.set.center()).collect())
    }

    pub fn center_y(&self) -> BlockVector {
        BlockVector::new(self.parts.y_blocks.iter().map(|b| b.set.center()).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: SaddleProblem =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("problem json: {e}")))?;
        // re-validate: the constants travel with the file but must be
        // consistent with the data
        SaddleProblem::new(p.parts)
    }
}

/// `Φ(x,y)` with dimension checking.
pub fn phi_value(problem: &SaddleProblem, x: &BlockVector, y: &BlockVector) -> Result<f64> {
    if x.dims() != problem.x_dims() {
        return Err(Error::DimensionMismatch {
            expected: problem.nx(),
            got: x.total_dim(),
        });
    }
    if y.dims() != problem.y_dims() {
        return Err(Error::DimensionMismatch {
            expected: problem.ny(),
            got: y.total_dim(),
        });
    }
    Ok(problem.phi(x, y))
}

pub(crate) fn apply_blocks_pub(blocks: &[Matrix], rows: usize, v: &BlockVector) -> Vec<f64> {
    apply_blocks(blocks, rows, v)
}

fn apply_blocks(blocks: &[Matrix], rows: usize, v: &BlockVector) -> Vec<f64> {
    let mut out = vec![0.0; rows];
    for (mat, b) in blocks.iter().zip(v.blocks()) {
        let contrib = mat.matvec(b);
        for (o, c) in out.iter_mut().zip(&contrib) {
            *o += c;
        }
    }
    out
}

fn product_diameter(blocks: &[BlockSpec]) -> Result<f64> {
    let mut sum = 0.0;
    for b in blocks {
        let d = b.set.diameter()?;
        sum += d * d;
    }
    Ok(sum.sqrt())
}

fn validate_structure(parts: &ProblemParts) -> Result<()> {
    parts.coupling.validate()?;
    for b in parts.x_blocks.iter().chain(&parts.y_blocks) {
        b.set.validate()?;
        b.term.validate(b.set.dim())?;
    }
    let nx: usize = parts.x_blocks.iter().map(|b| b.set.dim()).sum();
    let ny: usize = parts.y_blocks.iter().map(|b| b.set.dim()).sum();
    if parts.coupling.dx() != nx || parts.coupling.dy() != ny {
        return Err(Error::DimensionMismatch {
            expected: nx,
            got: parts.coupling.dx(),
        });
    }
    check_constraint_side(&parts.a_blocks, &parts.a_rhs, &parts.x_blocks)?;
    check_constraint_side(&parts.b_blocks, &parts.b_rhs, &parts.y_blocks)?;
    if parts.feasible_x.dims() != parts.x_blocks.iter().map(|b| b.set.dim()).collect::<Vec<_>>()
        || parts.feasible_y.dims() != parts.y_blocks.iter().map(|b| b.set.dim()).collect::<Vec<_>>()
    {
        return Err(Error::InvalidParam("feasible point dims mismatch".into()));
    }
    let smooth = parts.y_blocks.iter().all(|b| b.term.is_smooth());
    if !smooth && parts.ell.is_none() {
        return Err(Error::MissingConstant(
            "nonsmooth-in-y instance needs a supergradient bound".into(),
        ));
    }
    Ok(())
}

fn check_constraint_side(blocks: &[Matrix], rhs: &[f64], specs: &[BlockSpec]) -> Result<()> {
    if blocks.is_empty() {
        if !rhs.is_empty() {
            return Err(Error::InvalidParam("rhs without constraint blocks".into()));
        }
        return Ok(());
    }
    if blocks.len() != specs.len() {
        return Err(Error::DimensionMismatch {
            expected: specs.len(),
            got: blocks.len(),
        });
    }
    for (mat, spec) in blocks.iter().zip(specs) {
        if mat.rows() != rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: rhs.len(),
                got: mat.rows(),
            });
        }
        if mat.cols() != spec.set.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.set.dim(),
                got: mat.cols(),
            });
        }
    }
    Ok(())
}

fn validate_equality_feasible(parts: &ProblemParts) -> Result<()> {
    for (bv, specs) in [
        (&parts.feasible_x, &parts.x_blocks),
        (&parts.feasible_y, &parts.y_blocks),
    ] {
        for (v, spec) in bv.blocks().iter().zip(specs.iter()) {
            if !spec.set.contains(v, FEASIBILITY_TOL) {
                return Err(Error::InvalidParam(
                    "feasible point leaves its block set".into(),
                ));
            }
        }
    }
    let res_x = if parts.a_rhs.is_empty() {
        0.0
    } else {
        norm(&sub(
            &apply_blocks(&parts.a_blocks, parts.a_rhs.len(), &parts.feasible_x),
            &parts.a_rhs,
        ))
    };
    let res_y = if parts.b_rhs.is_empty() {
        0.0
    } else {
        norm(&sub(
            &apply_blocks(&parts.b_blocks, parts.b_rhs.len(), &parts.feasible_y),
            &parts.b_rhs,
        ))
    };
    if res_x > FEASIBILITY_TOL || res_y > FEASIBILITY_TOL {
        return Err(Error::InvalidParam(format!(
            "feasible point residual too large: ({res_x:.2e}, {res_y:.2e})"
        )));
    }
    Ok(())
}

fn derive_constants(parts: &ProblemParts) -> Constants {
    let norm_a_blocks: Vec<f64> = parts
        .a_blocks
        .iter()
        .map(|m| operator_norm(m, NORM_TOL))
        .collect();
    let norm_b_blocks: Vec<f64> = parts
        .b_blocks
        .iter()
        .map(|m| operator_norm(m, NORM_TOL))
        .collect();
    let norm_a = stacked_norm(&parts.a_blocks);
    let norm_b = stacked_norm(&parts.b_blocks);
    let smooth = parts.y_blocks.iter().all(|b| b.term.is_smooth());
    let l_y = if smooth {
        let mut g_extra = Vec::new();
        for b in &parts.y_blocks {
            match &b.term {
                SeparableTerm::Quadratic { diag, .. } => g_extra.extend_from_slice(diag),
                _ => g_extra.extend(std::iter::repeat_n(0.0, b.set.dim())),
            }
        }
        Some(parts.coupling.lipschitz_y_with(&g_extra))
    } else {
        None
    };
    Constants {
        l_full: parts.coupling.lipschitz_full(),
        l_x: parts.coupling.lipschitz_x(),
        l_y,
        norm_a,
        norm_b,
        norm_a_blocks,
        norm_b_blocks,
    }
}

fn stacked_norm(blocks: &[Matrix]) -> f64 {
    if blocks.is_empty() {
        return 0.0;
    }
    let mut full = blocks[0].clone();
    for b in &blocks[1..] {
        full = full.hcat(b);
    }
    operator_norm(&full, NORM_TOL)
}

/// Maximum relative error of the coupling gradients against central finite
/// differences at `points` deterministic pseudo-random interior points.
pub fn gradient_check(problem: &SaddleProblem, seed: u64, points: usize) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = random_interior(&mut rng, problem.x_blocks());
        let y = random_interior(&mut rng, problem.y_blocks());
        let xf = x.concat();
        let yf = y.concat();
        let gx = problem.coupling().grad_x(&xf, &yf);
        let gy = problem.coupling().grad_y(&xf, &yf);
        let scale_x = norm(&gx).max(1.0);
        let scale_y = norm(&gy).max(1.0);
        for i in 0..xf.len() {
            let mut p = xf.clone();
            let mut m = xf.clone();
            p[i] += h;
            m[i] -= h;
            let fd = (problem.coupling().value(&p, &yf) - problem.coupling().value(&m, &yf))
                / (2.0 * h);
            worst = worst.max((gx[i] - fd).abs() / scale_x);
        }
        for j in 0..yf.len() {
            let mut p = yf.clone();
            let mut m = yf.clone();
            p[j] += h;
            m[j] -= h;
            let fd = (problem.coupling().value(&xf, &p) - problem.coupling().value(&xf, &m))
                / (2.0 * h);
            worst = worst.max((gy[j] - fd).abs() / scale_y);
        }
    }
    worst
}

fn random_interior(rng: &mut impl rand::Rng, blocks: &[BlockSpec]) -> BlockVector {
    BlockVector::new(
        blocks
            .iter()
            .map(|b| {
                let c = b.set.center();
                let jitter: Vec<f64> = c
                    .iter()
                    .map(|ci| ci + 0.05 * (rng.gen::<f64>() - 0.5))
                    .collect();
                b.set.project(&jitter).expect("projection of jittered center")
            })
            .collect(),
    )
}
