//! Config-driven experiment runner: single runs, T-sweeps with rate
//! fitting, lemma-slack certification suites, the minimization comparison,
//! the divergence/repair demonstration, and CSV/JSON/SVG artifact emission.

mod scenarios;
mod svg;

pub use scenarios::{certify_kind, execute, override_seed, probe_feasible_x, ScenarioReport, SLACK_FLOOR};
pub use svg::{emit_svg, render_svg, SvgSeries};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{conic_to_equality, gen, SaddleProblem};
use crate::solvers::{RunConfig, Trace};

/// Least-squares fit of `log gap` against `log T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `(log T, log gap)` pairs the fit was computed from.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares on `(log T, log gap)`; errors on nonpositive
/// gaps, naming the offending index.
pub fn rate_fit(pairs: &[(usize, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidParam("rate fit needs at least three points".into()));
    }
    let mut points = Vec::with_capacity(pairs.len());
    for (i, (t, gap)) in pairs.iter().enumerate() {
        if *gap <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "nonpositive gap {gap} at sweep index {i} (T = {t}); cannot take log"
            )));
        }
        points.push(((*t as f64).ln(), gap.ln()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::InvalidParam("degenerate sweep (all T equal)".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        points,
        slope,
        intercept,
        r_squared,
    })
}

/// Trace CSV with the documented columns
/// `iter,res_x,res_y,dx_norm,dy_norm,gap,wall_ms`; an unevaluated gap is an
/// empty cell.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::from("iter,res_x,res_y,dx_norm,dy_norm,gap,wall_ms\n");
    for row in &trace.rows {
        let gap = row.gap.map(|g| g.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.iter, row.res_x, row.res_y, row.dx_norm, row.dy_norm, gap, row.wall_ms
        ));
    }
    out
}

pub fn trace_to_json(trace: &Trace) -> String {
    #[derive(Serialize)]
    struct Row<'a> {
        #[serde(flatten)]
        row: &'a crate::solvers::TraceRow,
    }
    let rows: Vec<Row> = trace.rows.iter().map(|row| Row { row }).collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "steps": trace.steps,
        "rows": rows,
    }))
    .expect("trace serialization cannot fail")
}

/// Which experiment a config file drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Single,
    Rates,
    Certify,
    Compare,
    Divergence,
    Gap,
}

/// Generator selection mirroring the library's instance families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum GeneratorSpec {
    BilinearQp {
        seed: u64,
        n_blocks_x: usize,
        n_blocks_y: usize,
        block_dim: usize,
        rows_n: usize,
        rows_m: usize,
        condition: f64,
    },
    BilinearPlm {
        seed: u64,
        block_dim: usize,
        rows_n: usize,
        y_blocks: usize,
        pieces: usize,
    },
    ResourceGame {
        seed: u64,
        stages: usize,
        dim_per_stage: usize,
        budget_a: f64,
        budget_b: f64,
    },
    MdpOccupancy {
        seed: u64,
        n_states: usize,
        n_actions: usize,
        n_clusters: usize,
        discount: f64,
        alpha: f64,
    },
    AnchoredQp {
        seed: u64,
        n_blocks_x: usize,
        block_dim: usize,
        rows_n: usize,
        offset: f64,
    },
    MinQp {
        seed: u64,
        n_blocks: usize,
        block_dim: usize,
        rows_n: usize,
    },
    /// Conic instance, reformulated to equality form with a slack block on
    /// load.
    ConicQp {
        seed: u64,
        n_blocks_x: usize,
        block_dim: usize,
        rows_n: usize,
    },
    Divergence3block,
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<SaddleProblem> {
        match *self {
            GeneratorSpec::BilinearQp {
                seed,
                n_blocks_x,
                n_blocks_y,
                block_dim,
                rows_n,
                rows_m,
                condition,
            } => gen::gen_bilinear_qp(seed, n_blocks_x, n_blocks_y, block_dim, rows_n, rows_m, condition),
            GeneratorSpec::BilinearPlm {
                seed,
                block_dim,
                rows_n,
                y_blocks,
                pieces,
            } => gen::gen_bilinear_plm(seed, block_dim, rows_n, y_blocks, pieces),
            GeneratorSpec::ResourceGame {
                seed,
                stages,
                dim_per_stage,
                budget_a,
                budget_b,
            } => gen::gen_resource_game(seed, stages, dim_per_stage, budget_a, budget_b),
            GeneratorSpec::MdpOccupancy {
                seed,
                n_states,
                n_actions,
                n_clusters,
                discount,
                alpha,
            } => gen::gen_mdp_occupancy(seed, n_states, n_actions, n_clusters, discount, alpha),
            GeneratorSpec::AnchoredQp {
                seed,
                n_blocks_x,
                block_dim,
                rows_n,
                offset,
            } => gen::gen_anchored_qp(seed, n_blocks_x, block_dim, rows_n, offset),
            GeneratorSpec::MinQp {
                seed,
                n_blocks,
                block_dim,
                rows_n,
            } => gen::gen_min_qp(seed, n_blocks, block_dim, rows_n),
            GeneratorSpec::ConicQp {
                seed,
                n_blocks_x,
                block_dim,
                rows_n,
            } => conic_to_equality(&gen::gen_conic_qp(seed, n_blocks_x, block_dim, rows_n)?),
            GeneratorSpec::Divergence3block => Ok(gen::divergence_3block()),
        }
    }

    /// Re-seed a generator spec (the CLI `--seed` override).
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut s = self.clone();
        match &mut s {
            GeneratorSpec::BilinearQp { seed, .. }
            | GeneratorSpec::BilinearPlm { seed, .. }
            | GeneratorSpec::ResourceGame { seed, .. }
            | GeneratorSpec::MdpOccupancy { seed, .. }
            | GeneratorSpec::AnchoredQp { seed, .. }
            | GeneratorSpec::MinQp { seed, .. }
            | GeneratorSpec::ConicQp { seed, .. } => *seed = new_seed,
            GeneratorSpec::Divergence3block => {}
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Generator { generator: GeneratorSpec },
    File { path: String },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<SaddleProblem> {
        match self {
            ProblemSpec::Generator { generator } => generator.build(),
            ProblemSpec::File { path } => {
                let body = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("reading {path}: {e}")))?;
                SaddleProblem::from_json(&body)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifySpec {
    /// Lemma kinds to exercise; all five when empty.
    #[serde(default)]
    pub kinds: Vec<crate::certify::LemmaKind>,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_seeds() -> u64 {
    20
}

fn default_pairs() -> usize {
    50
}

impl Default for CertifySpec {
    fn default() -> Self {
        CertifySpec {
            kinds: Vec::new(),
            seeds: default_seeds(),
            pairs: default_pairs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: String,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default)]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Absent for scenarios with built-in instances (certify, divergence).
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    pub run: RunConfig,
    /// Iteration budgets for the `rates` sweep; strictly increasing.
    #[serde(default)]
    pub sweep: Vec<usize>,
    /// Report weights; the first drives rate fits.
    #[serde(default = "default_rhos")]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub certify: CertifySpec,
    /// Run the perturbed multi-block variant instead of the plain one.
    #[serde(default)]
    pub perturbed: bool,
    pub output: OutputSpec,
}

fn default_rhos() -> Vec<f64> {
    vec![10.0, 1.0]
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("config json: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.scenario == Scenario::Rates {
            if self.sweep.len() < 3 {
                return Err(Error::Config("rates sweep needs at least three budgets".into()));
            }
            if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("sweep budgets must be strictly increasing".into()));
            }
        }
        if self.rho.is_empty() || self.rho.iter().any(|r| *r <= 0.0) {
            return Err(Error::Config("report weights must be positive".into()));
        }
        Ok(())
    }
}

/// Parallelism cap for sweep entries, from `SADDLEKIT_THREADS` (default 1).
pub fn thread_cap() -> usize {
    std::env::var("SADDLEKIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|v| *v >= 1)
        .unwrap_or(1)
}
