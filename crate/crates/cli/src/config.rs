//! TOML run configuration.
//!
//! ```toml
//! dataset = "prices.csv"     # relative paths resolve against this file
//! output_dir = "out"
//! seed = 0
//!
//! [window]
//! in_len = 500
//! step = 20
//!
//! [metrics]
//! risk_free = 0.0
//! rachev_alpha = 0.05
//! rachev_beta = 0.05
//! roi_horizon = 250
//!
//! [[strategy]]
//! kind = "hfhe"
//! lambda_plus = 0.30
//! lambda_minus = 0.69
//!
//! [sweep]
//! lambda_plus = [0.15, 0.20, 0.25]
//! lambda_minus = [0.30, 0.40, 0.66]
//! ```
//!
//! Without any `[[strategy]]` table the five default strategies run.

use std::path::{Path, PathBuf};

use hfhe::backtest::{BacktestOptions, HfheSolver, Holding, StrategySpec};
use hfhe::exec::Execution;
use hfhe::metrics::MetricsConfig;
use hfhe::objectives::PtParams;
use serde::Deserialize;

use crate::failure::{Category, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Multistart,
    Milp,
}

impl SolverChoice {
    /// The MILP covers only `λ₊ ≤ 1/2 ≤ λ₋`; elsewhere multistart is used.
    pub fn resolve(self, lambda_plus: f64, lambda_minus: f64) -> (HfheSolver, bool) {
        match self {
            SolverChoice::Multistart => (HfheSolver::Multistart, false),
            SolverChoice::Milp if lambda_plus <= 0.5 && lambda_minus >= 0.5 => {
                (HfheSolver::Milp, false)
            }
            SolverChoice::Milp => (HfheSolver::Multistart, true),
        }
    }
}

fn default_lambda_plus() -> f64 {
    0.30
}

fn default_lambda_minus() -> f64 {
    0.69
}

fn default_alpha() -> f64 {
    PtParams::default().alpha
}

fn default_beta() -> f64 {
    PtParams::default().beta
}

fn default_solver() -> SolverChoice {
    SolverChoice::Multistart
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StrategyEntry {
    Ew,
    Minv,
    Minmad,
    Pt {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    Hfhe {
        #[serde(default = "default_lambda_plus")]
        lambda_plus: f64,
        #[serde(default = "default_lambda_minus")]
        lambda_minus: f64,
        #[serde(default = "default_solver")]
        solver: SolverChoice,
    },
}

impl StrategyEntry {
    /// Core strategy plus a note when the solver choice was rerouted.
    pub fn to_spec(&self) -> (StrategySpec, Option<String>) {
        match *self {
            StrategyEntry::Ew => (StrategySpec::Ew, None),
            StrategyEntry::Minv => (StrategySpec::MinV, None),
            StrategyEntry::Minmad => (StrategySpec::MinMad, None),
            StrategyEntry::Pt { alpha, beta } => (
                StrategySpec::Pt {
                    params: PtParams { alpha, beta },
                },
                None,
            ),
            StrategyEntry::Hfhe {
                lambda_plus,
                lambda_minus,
                solver,
            } => hfhe_spec(lambda_plus, lambda_minus, solver),
        }
    }
}

pub fn hfhe_spec(
    lambda_plus: f64,
    lambda_minus: f64,
    solver: SolverChoice,
) -> (StrategySpec, Option<String>) {
    let (solver, rerouted) = solver.resolve(lambda_plus, lambda_minus);
    let note = rerouted.then(|| {
        format!(
            "HF/HE {lambda_plus:.2}-{lambda_minus:.2} is outside the MILP regime; using multistart"
        )
    });
    (
        StrategySpec::Hfhe {
            lambda_plus,
            lambda_minus,
            solver,
        },
        note,
    )
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub in_len: usize,
    pub step: usize,
    pub holding: Holding,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            in_len: 500,
            step: 20,
            holding: Holding::Rebalance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda_plus: Vec<f64>,
    pub lambda_minus: Vec<f64>,
    #[serde(default = "default_solver")]
    pub solver: SolverChoice,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Multistart starts per solve; `n + 33` when absent.
    #[serde(default)]
    pub starts: Option<usize>,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default, rename = "strategy")]
    pub strategies: Option<Vec<StrategyEntry>>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::new(Category::Config, msg)
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, Failure> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        if cfg.dataset.is_relative() {
            cfg.dataset = base.join(&cfg.dataset);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    fn validate(&self) -> Result<(), Failure> {
        if matches!(&self.strategies, Some(s) if s.is_empty()) {
            return Err(invalid("at least one [[strategy]] is required"));
        }
        if self.starts == Some(0) {
            return Err(invalid("starts must be at least 1"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.lambda_plus.is_empty() || sweep.lambda_minus.is_empty() {
                return Err(invalid("sweep grids must be nonempty"));
            }
        }
        let mut slugs = Vec::new();
        for (spec, _) in self.strategy_specs() {
            spec.validate().map_err(|e| invalid(e.to_string()))?;
            if slugs.contains(&spec.slug()) {
                return Err(invalid(format!("strategy {spec} is listed twice")));
            }
            slugs.push(spec.slug());
        }
        Ok(())
    }

    /// Configured strategies, or the five defaults.
    pub fn strategy_specs(&self) -> Vec<(StrategySpec, Option<String>)> {
        match &self.strategies {
            Some(list) => list.iter().map(StrategyEntry::to_spec).collect(),
            None => StrategySpec::all_default()
                .into_iter()
                .map(|s| (s, None))
                .collect(),
        }
    }

    pub fn backtest_options(&self) -> BacktestOptions {
        BacktestOptions {
            in_len: self.window.in_len,
            step: self.window.step,
            seed: self.seed,
            starts: self.starts,
            holding: self.window.holding,
            execution: self.execution,
            log_path: None,
        }
    }
}
