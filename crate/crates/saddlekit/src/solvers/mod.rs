//! The top-level algorithms: supergradient ADMM (`ssg_admm`), extragradient
//! ADMM (`seg_admm`), the extragradient method of multipliers (`egmm`), the
//! pure-minimization ADMM (`admm_min`), and perturbed multi-block variants;
//! plus default step-size rules, running averages, trace recording, and the
//! closed-form rate bounds.

mod run;

pub use run::{run_admm_min, run_egmm, run_perturbed, run_seg_admm, run_ssg_admm, PerturbedVariant};

use serde::{Deserialize, Serialize};

use crate::admm::strong_convexity_gamma;
use crate::error::{Error, Result};
use crate::linalg::BlockVector;
use crate::problem::SaddleProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SsgAdmm,
    SegAdmm,
    Egmm,
    AdmmMin,
}

/// A step size that is either pinned by the caller or derived from the
/// algorithm's rate rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

impl Serialize for StepSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepSize::Auto => s.serialize_str("auto"),
            StepSize::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for StepSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(StepSize::Fixed(v)),
            Raw::Str(s) if s == "auto" => Ok(StepSize::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "step size must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

/// Resolved step-size bundle actually used by a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    pub gamma: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_lambda: f64,
    pub sigma_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// Iteration budget; fixed a priori because some step rules depend on it.
    pub t: usize,
    #[serde(default = "auto_step")]
    pub gamma: StepSize,
    #[serde(default = "auto_step")]
    pub sigma_x: StepSize,
    #[serde(default = "auto_step")]
    pub sigma_y: StepSize,
    #[serde(default = "auto_step")]
    pub sigma_lambda: StepSize,
    #[serde(default = "auto_step")]
    pub sigma_mu: StepSize,
    /// Penalty weight for gap reporting.
    #[serde(default = "default_rho")]
    pub rho_report: f64,
    /// Perturbation strength for the multi-block variants; 0 disables and
    /// defers to the `1/√T` rule.
    #[serde(default)]
    pub perturbation_eps: f64,
    /// Evaluate a (loose-tolerance) gap snapshot of the running averages
    /// every this many iterations; 0 = only at the end, by the caller.
    #[serde(default)]
    pub gap_eval_every: usize,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Explicit initial points; block-set centers when absent.
    #[serde(default)]
    pub x0: Option<BlockVector>,
    #[serde(default)]
    pub y0: Option<BlockVector>,
    /// Record per-iteration algorithm snapshots for inequality checking.
    #[serde(default)]
    pub record_snapshots: bool,
    /// Record the averaged iterate streams.
    #[serde(default)]
    pub record_iterates: bool,
}

fn auto_step() -> StepSize {
    StepSize::Auto
}

fn default_rho() -> f64 {
    10.0
}

fn default_inner_tol() -> f64 {
    1e-10
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, t: usize) -> Self {
        RunConfig {
            algorithm,
            t,
            gamma: StepSize::Auto,
            sigma_x: StepSize::Auto,
            sigma_y: StepSize::Auto,
            sigma_lambda: StepSize::Auto,
            sigma_mu: StepSize::Auto,
            rho_report: default_rho(),
            perturbation_eps: 0.0,
            gap_eval_every: 0,
            inner_tol: default_inner_tol(),
            seed: 0,
            x0: None,
            y0: None,
            record_snapshots: false,
            record_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::InvalidParam("iteration budget must be ≥ 1".into()));
        }
        let positive = |name: &str, s: StepSize| -> Result<()> {
            if let StepSize::Fixed(v) = s {
                if v <= 0.0 {
                    return Err(Error::InvalidParam(format!("{name} must be positive")));
                }
            }
            Ok(())
        };
        positive("gamma", self.gamma)?;
        if let StepSize::Fixed(v) = self.sigma_x {
            let lo_ok = if self.algorithm == Algorithm::AdmmMin {
                v >= 0.0
            } else {
                v > 0.0
            };
            if !lo_ok {
                return Err(Error::InvalidParam("sigma_x out of range".into()));
            }
        }
        positive("sigma_y", self.sigma_y)?;
        positive("sigma_lambda", self.sigma_lambda)?;
        positive("sigma_mu", self.sigma_mu)?;
        if self.inner_tol <= 0.0 {
            return Err(Error::InvalidParam("inner_tol must be positive".into()));
        }
        if self.rho_report <= 0.0 {
            return Err(Error::InvalidParam("rho_report must be positive".into()));
        }
        Ok(())
    }
}

/// Joint point `z = (x, y, λ, μ)`; `μ` has length 0 on one-side problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub x: BlockVector,
    pub y: BlockVector,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub res_x: f64,
    pub res_y: f64,
    pub dx_norm: f64,
    pub dy_norm: f64,
    pub gap: Option<f64>,
    pub wall_ms: f64,
}

/// Per-algorithm snapshot of one iteration, for the inequality checkers.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Ssg {
        x_k: BlockVector,
        lambda_k: Vec<f64>,
        y_k: BlockVector,
        x_k1: BlockVector,
        lambda_k1: Vec<f64>,
        u_k: BlockVector,
        y_k1: BlockVector,
    },
    Seg {
        x_k: BlockVector,
        lambda_k: Vec<f64>,
        y_k: BlockVector,
        y_hat_k1: BlockVector,
        x_k1: BlockVector,
        lambda_k1: Vec<f64>,
        y_k1: BlockVector,
    },
    Egmm {
        z_k: Iterate,
        z_hat_k1: Iterate,
        z_k1: Iterate,
    },
    AdmmMin {
        x_k: BlockVector,
        lambda_k: Vec<f64>,
        x_k1: BlockVector,
        lambda_k1: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// Step sizes the run actually used.
    pub steps: StepSizes,
    /// Entries of the averaged x sequence (empty unless recording).
    pub x_stream: Vec<BlockVector>,
    /// Entries of the averaged y sequence (empty unless recording).
    pub y_stream: Vec<BlockVector>,
    pub snapshots: Vec<Snapshot>,
    /// Smallest per-iteration cancellation margin
    /// `((σ_x − L_x) − L_y)/2 · ‖x⁺ − x‖²` seen by an extragradient run.
    pub seg_cancel_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub x_avg: BlockVector,
    pub y_avg: BlockVector,
    pub trace: Trace,
}

/// The rate-rule step sizes for each algorithm.
///
/// `rho` enters only through the two-block ADMM penalty default
/// `γ = ρ/(‖A₂‖ D_{X₂})`, which balances the `ρ²/γ` and `γ‖A₂‖²D²` bound
/// terms.
pub fn default_stepsizes(
    problem: &SaddleProblem,
    algorithm: Algorithm,
    t: usize,
    rho: f64,
) -> Result<StepSizes> {
    let c = problem.constants();
    match algorithm {
        Algorithm::SsgAdmm => {
            let ell = problem
                .ell()
                .ok_or_else(|| Error::MissingConstant("supergradient bound ℓ".into()))?;
            let d_y = problem.diam_y()?;
            if d_y <= 0.0 || ell <= 0.0 {
                return Err(Error::MissingConstant(
                    "positive D_Y and ℓ for the supergradient step".into(),
                ));
            }
            let sigma_y = (t as f64).sqrt() * ell / d_y;
            let sigma_x = c.l_x;
            Ok(StepSizes {
                gamma: admm_gamma(problem, rho)?,
                sigma_x,
                sigma_y,
                sigma_lambda: 1.0,
                sigma_mu: 1.0,
            })
        }
        Algorithm::SegAdmm => {
            let l_y = c
                .l_y
                .ok_or_else(|| Error::MissingConstant("L_y on a nonsmooth instance".into()))?;
            if l_y <= 0.0 {
                return Err(Error::MissingConstant("positive L_y".into()));
            }
            Ok(StepSizes {
                gamma: admm_gamma(problem, rho)?,
                sigma_x: c.l_x + l_y,
                sigma_y: l_y,
                sigma_lambda: 1.0,
                sigma_mu: 1.0,
            })
        }
        Algorithm::Egmm => {
            let l = c.l_full;
            let sigma_x = 0.5 * (l + c.norm_a);
            let sigma_y = 0.5 * (l + c.norm_b);
            if problem.nx() > 0 && sigma_x <= 0.0 {
                return Err(Error::MissingConstant("positive σ_x for egmm".into()));
            }
            if problem.ny() > 0 && sigma_y <= 0.0 {
                return Err(Error::MissingConstant("positive σ_y for egmm".into()));
            }
            let sigma_lambda = if problem.n() > 0 {
                if c.norm_a == 0.0 {
                    return Err(Error::MissingConstant("positive ‖A‖ for egmm".into()));
                }
                0.5 * c.norm_a
            } else {
                1.0
            };
            let sigma_mu = if problem.m() > 0 {
                if c.norm_b == 0.0 {
                    return Err(Error::MissingConstant("positive ‖B‖ for egmm".into()));
                }
                0.5 * c.norm_b
            } else {
                1.0
            };
            Ok(StepSizes {
                gamma: 1.0,
                sigma_x: if problem.nx() > 0 { sigma_x } else { 1.0 },
                sigma_y: if problem.ny() > 0 { sigma_y } else { 1.0 },
                sigma_lambda,
                sigma_mu,
            })
        }
        Algorithm::AdmmMin => Ok(StepSizes {
            gamma: admm_gamma(problem, rho)?,
            sigma_x: c.l_x,
            sigma_y: 1.0,
            sigma_lambda: 1.0,
            sigma_mu: 1.0,
        }),
    }
}

/// Penalty default for the ADMM-family algorithms: the bound-balancing
/// two-block value, or the strong-convexity rule when there are three or
/// more blocks.
fn admm_gamma(problem: &SaddleProblem, rho: f64) -> Result<f64> {
    let nb = problem.num_x_blocks();
    if nb <= 2 {
        let norm_a2 = if nb == 2 {
            problem.constants().norm_a_blocks.get(1).copied().unwrap_or(0.0)
        } else {
            problem.constants().norm_a_blocks.first().copied().unwrap_or(0.0)
        };
        let d2 = if nb == 2 {
            problem.diam_x_block(1)?
        } else {
            problem.diam_x_block(0)?
        };
        let denom = norm_a2 * d2;
        if denom > 0.0 {
            Ok(rho / denom)
        } else {
            Ok(1.0)
        }
    } else {
        strong_convexity_gamma(problem).map_err(|_| {
            Error::MissingConstant(
                "γ rule for N ≥ 3 needs strong convexity (or use the perturbed variants)".into(),
            )
        })
    }
}

/// Which closed-form rate bound to evaluate. The numeric discriminants
/// (1, 2, 3) are the stable ids used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// Two-block supergradient rate (has a `1/√T` term).
    SsgNonsmooth = 1,
    /// Two-block extragradient rate.
    SegSmooth = 2,
    /// Fully primal-dual extragradient rate.
    EgmmPrimalDual = 3,
}

impl TryFrom<u8> for BoundKind {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(BoundKind::SsgNonsmooth),
            2 => Ok(BoundKind::SegSmooth),
            3 => Ok(BoundKind::EgmmPrimalDual),
            _ => Err(Error::Config(format!("unknown bound kind {v}"))),
        }
    }
}

/// Exact right-hand side of the selected rate guarantee at horizon `t` and
/// report weight `rho`.
pub fn theoretical_bound(
    kind: BoundKind,
    problem: &SaddleProblem,
    t: usize,
    rho: f64,
    gamma: f64,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidParam("t must be ≥ 1".into()));
    }
    let c = problem.constants();
    let tf = t as f64;
    match kind {
        BoundKind::SsgNonsmooth => {
            require_two_blocks(problem)?;
            let ell = problem
                .ell()
                .ok_or_else(|| Error::MissingConstant("supergradient bound ℓ".into()))?;
            let d_x = problem.diam_x()?;
            let d_y = problem.diam_y()?;
            let d_x2 = problem.diam_x_block(1)?;
            let na2 = c.norm_a_blocks[1];
            Ok(
                (rho * rho / gamma + c.l_x * d_x * d_x + gamma * na2 * na2 * d_x2 * d_x2)
                    / (2.0 * tf)
                    + d_y * ell / tf.sqrt(),
            )
        }
        BoundKind::SegSmooth => {
            require_two_blocks(problem)?;
            let l_y = c
                .l_y
                .ok_or_else(|| Error::MissingConstant("L_y on a nonsmooth instance".into()))?;
            let d_x = problem.diam_x()?;
            let d_y = problem.diam_y()?;
            let d_x2 = problem.diam_x_block(1)?;
            let na2 = c.norm_a_blocks[1];
            Ok((rho * rho / gamma
                + (c.l_x + l_y) * d_x * d_x
                + gamma * na2 * na2 * d_x2 * d_x2
                + l_y * d_y * d_y)
                / (2.0 * tf))
        }
        BoundKind::EgmmPrimalDual => {
            let d_x = problem.diam_x()?;
            let d_y = if problem.num_y_blocks() > 0 {
                problem.diam_y()?
            } else {
                0.0
            };
            Ok((c.l_full + c.norm_a) / (4.0 * tf) * d_x * d_x
                + (c.l_full + c.norm_b) / (4.0 * tf) * d_y * d_y
                + (c.norm_a + c.norm_b) / (2.0 * tf) * rho * rho)
        }
    }
}

fn require_two_blocks(problem: &SaddleProblem) -> Result<()> {
    if problem.num_x_blocks() != 2 {
        return Err(Error::InvalidParam(
            "two-block rate bound needs N = 2".into(),
        ));
    }
    Ok(())
}

/// Resolves the configured step sizes against the defaults; fields pinned in
/// the config always win, and the defaults are only derived when some field
/// the algorithm actually consumes is left on auto.
pub fn resolve_stepsizes(problem: &SaddleProblem, config: &RunConfig) -> Result<StepSizes> {
    let used: Vec<StepSize> = match config.algorithm {
        Algorithm::SsgAdmm | Algorithm::SegAdmm => {
            vec![config.gamma, config.sigma_x, config.sigma_y]
        }
        Algorithm::AdmmMin => vec![config.gamma, config.sigma_x],
        Algorithm::Egmm => {
            let mut v = Vec::new();
            if problem.nx() > 0 {
                v.push(config.sigma_x);
            }
            if problem.ny() > 0 {
                v.push(config.sigma_y);
            }
            if problem.n() > 0 {
                v.push(config.sigma_lambda);
            }
            if problem.m() > 0 {
                v.push(config.sigma_mu);
            }
            v
        }
    };
    let needs_default = used.iter().any(|f| matches!(f, StepSize::Auto));
    let base = if needs_default {
        default_stepsizes(problem, config.algorithm, config.t, config.rho_report)?
    } else {
        StepSizes {
            gamma: 1.0,
            sigma_x: 1.0,
            sigma_y: 1.0,
            sigma_lambda: 1.0,
            sigma_mu: 1.0,
        }
    };
    let pick = |s: StepSize, d: f64| match s {
        StepSize::Auto => d,
        StepSize::Fixed(v) => v,
    };
    Ok(StepSizes {
        gamma: pick(config.gamma, base.gamma),
        sigma_x: pick(config.sigma_x, base.sigma_x),
        sigma_y: pick(config.sigma_y, base.sigma_y),
        sigma_lambda: pick(config.sigma_lambda, base.sigma_lambda),
        sigma_mu: pick(config.sigma_mu, base.sigma_mu),
    })
}
