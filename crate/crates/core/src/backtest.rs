//! Rolling-window out-of-sample backtest.
//!
//! Each window optimizes on its in-sample rows only and then applies the
//! resulting weights to the following out-of-sample rows. Windows are
//! independent and may run in parallel; results are merged in window order.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data_io::{rolling_windows, ScenarioMatrix, WindowSpec};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::objectives::{covariance, ew, returns_unchecked, PortfolioWeights, PtParams};
use crate::solvers::{
    build_hfhe_milp, choose_big_m, default_starts, multistart_with, solve_milp, solve_min_mad,
    solve_min_variance, HfheModel, MultistartOptions, PtModel, SolveReport, SolveStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HfheSolver {
    Milp,
    Multistart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrategySpec {
    Ew,
    MinV,
    MinMad,
    Pt {
        #[serde(default)]
        params: PtParams,
    },
    Hfhe {
        lambda_plus: f64,
        lambda_minus: f64,
        solver: HfheSolver,
    },
}

impl StrategySpec {
    /// HF/HE with the default (0.30, 0.69) parameters, solved by multistart.
    pub fn hfhe_default() -> Self {
        StrategySpec::Hfhe {
            lambda_plus: 0.30,
            lambda_minus: 0.69,
            solver: HfheSolver::Multistart,
        }
    }

    pub fn pt_default() -> Self {
        StrategySpec::Pt {
            params: PtParams::default(),
        }
    }

    /// The five strategies in table order.
    pub fn all_default() -> Vec<Self> {
        vec![
            StrategySpec::Ew,
            StrategySpec::MinV,
            StrategySpec::MinMad,
            Self::pt_default(),
            Self::hfhe_default(),
        ]
    }

    /// Column label, e.g. `HF/HE 0.30-0.69`.
    pub fn label(&self) -> String {
        match self {
            StrategySpec::Ew => "EW".into(),
            StrategySpec::MinV => "MinV".into(),
            StrategySpec::MinMad => "MinMAD".into(),
            StrategySpec::Pt { .. } => "PT".into(),
            StrategySpec::Hfhe {
                lambda_plus,
                lambda_minus,
                ..
            } => format!("HF/HE {lambda_plus:.2}-{lambda_minus:.2}"),
        }
    }

    /// File-name-safe form of the label.
    pub fn slug(&self) -> String {
        match self {
            StrategySpec::Hfhe {
                lambda_plus,
                lambda_minus,
                ..
            } => format!("hfhe_{lambda_plus:.2}_{lambda_minus:.2}"),
            other => other.label().to_lowercase(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategySpec::Hfhe {
                lambda_plus,
                lambda_minus,
                solver,
            } => {
                for v in [lambda_plus, lambda_minus] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidParameter(format!("λ={v} outside [0, 1]")));
                    }
                }
                if solver == HfheSolver::Milp && !(lambda_plus <= 0.5 && lambda_minus >= 0.5) {
                    return Err(Error::MilpRegime {
                        lambda_plus,
                        lambda_minus,
                    });
                }
                Ok(())
            }
            StrategySpec::Pt { params } => PtParams::new(params.alpha, params.beta).map(|_| ()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// How weights evolve inside an out-of-sample block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Holding {
    /// Rebalanced to the target weights every day: `R_t = x·r_t`.
    #[default]
    Rebalance,
    /// Buy and hold shares; weights drift with relative performance.
    Drift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestOptions {
    pub in_len: usize,
    pub step: usize,
    pub seed: u64,
    /// Multistart starts per solve; `None` uses `n + 1 + 32`.
    pub starts: Option<usize>,
    pub holding: Holding,
    pub execution: Execution,
    /// Per-window JSON-lines diagnostics.
    pub log_path: Option<PathBuf>,
}

impl Default for BacktestOptions {
    fn default() -> Self {
        Self {
            in_len: 500,
            step: 20,
            seed: 0,
            starts: None,
            holding: Holding::Rebalance,
            execution: Execution::default(),
            log_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOutcome {
    pub window: usize,
    pub spec: WindowSpec,
    pub status: SolveStatus,
    pub objective: f64,
    pub nodes: usize,
    pub starts: usize,
    pub weights: PortfolioWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub strategy: StrategySpec,
    pub windows: Vec<WindowOutcome>,
    /// Concatenated out-of-sample portfolio returns.
    pub returns: Vec<f64>,
    /// `W_0 = 1`, `W_τ = W_{τ−1}(1 + R_τ)`.
    pub wealth: Vec<f64>,
}

impl BacktestResult {
    pub fn weights(&self) -> Vec<PortfolioWeights> {
        self.windows.iter().map(|w| w.weights.clone()).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Solver seed of window `index` under global seed `seed`.
pub fn window_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(index as u64))
}

/// Optimizes one strategy on a scenario block.
pub fn optimize(
    sm: &ScenarioMatrix,
    strategy: &StrategySpec,
    seed: u64,
    starts: Option<usize>,
    execution: Execution,
) -> Result<SolveReport> {
    strategy.validate()?;
    let n = sm.n_assets();
    let ms = MultistartOptions {
        starts: starts.unwrap_or_else(|| default_starts(n)),
        seed,
        execution,
    };
    match *strategy {
        StrategySpec::Ew => {
            let weights = ew(n)?;
            let objective = returns_unchecked(sm, weights.as_slice())
                .iter()
                .sum::<f64>()
                / sm.n_scenarios() as f64;
            Ok(SolveReport {
                status: SolveStatus::Optimal,
                weights,
                objective,
                nodes: 0,
                starts: 0,
                iterations: 0,
                elapsed: Default::default(),
            })
        }
        StrategySpec::MinV => solve_min_variance(&covariance(sm)?),
        StrategySpec::MinMad => solve_min_mad(sm),
        StrategySpec::Pt { params } => multistart_with(&PtModel::new(sm, params), &ms),
        StrategySpec::Hfhe {
            lambda_plus,
            lambda_minus,
            solver: HfheSolver::Multistart,
        } => multistart_with(&HfheModel::new(sm, lambda_plus, lambda_minus), &ms),
        StrategySpec::Hfhe {
            lambda_plus,
            lambda_minus,
            solver: HfheSolver::Milp,
        } => {
            let milp = build_hfhe_milp(sm, lambda_plus, lambda_minus, choose_big_m(sm))?;
            solve_milp(&milp)
        }
    }
}

/// Out-of-sample returns of fixed weights over rows `start..=end`.
fn block_returns(
    sm: &ScenarioMatrix,
    x: &[f64],
    start: usize,
    end: usize,
    holding: Holding,
) -> Vec<f64> {
    let uniform = x.iter().all(|&w| w == x[0]);
    match holding {
        // Uniform weights give the row mean, computed as such so that it is exact.
        Holding::Rebalance if uniform => (start..=end)
            .map(|t| sm.row(t).iter().sum::<f64>() / x.len() as f64)
            .collect(),
        Holding::Rebalance => (start..=end)
            .map(|t| sm.row(t).iter().zip(x).map(|(r, w)| r * w).sum())
            .collect(),
        Holding::Drift => {
            let mut holdings = x.to_vec();
            (start..=end)
                .map(|t| {
                    let total: f64 = holdings.iter().sum();
                    let row = sm.row(t);
                    let ret = holdings.iter().zip(row).map(|(h, r)| h * r).sum::<f64>() / total;
                    for (h, r) in holdings.iter_mut().zip(row) {
                        *h *= 1.0 + r;
                    }
                    ret
                })
                .collect()
        }
    }
}

pub fn run_backtest(
    sm: &ScenarioMatrix,
    strategy: &StrategySpec,
    opts: &BacktestOptions,
) -> Result<BacktestResult> {
    strategy.validate()?;
    let windows = rolling_windows(sm.n_scenarios(), opts.in_len, opts.step)?;
    // Parallelism goes to the windows; each solve runs sequentially inside.
    let outcomes = map_indexed(
        opts.execution,
        windows.len(),
        |w| -> Result<WindowOutcome> {
            let spec = windows[w];
            let block = sm.slice_rows(spec.in_start, spec.in_end)?;
            let report = optimize(
                &block,
                strategy,
                window_seed(opts.seed, w),
                opts.starts,
                Execution::Sequential,
            )
            .map_err(|e| Error::Window {
                window: w,
                source: Box::new(e),
            })?;
            Ok(WindowOutcome {
                window: w,
                spec,
                status: report.status,
                objective: report.objective,
                nodes: report.nodes,
                starts: report.starts,
                weights: report.weights,
            })
        },
    );
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut returns = Vec::with_capacity(sm.n_scenarios() - opts.in_len);
    for o in &outcomes {
        returns.extend(block_returns(
            sm,
            o.weights.as_slice(),
            o.spec.out_start,
            o.spec.out_end,
            opts.holding,
        ));
    }
    let wealth = wealth_path(&returns)?;

    if let Some(path) = &opts.log_path {
        write_window_log(path, &outcomes)?;
    }
    Ok(BacktestResult {
        strategy: *strategy,
        windows: outcomes,
        returns,
        wealth,
    })
}

#[derive(Serialize)]
struct WindowLogLine<'a> {
    window: usize,
    in_start: usize,
    in_end: usize,
    out_start: usize,
    out_end: usize,
    status: SolveStatus,
    objective: f64,
    weights: &'a [f64],
}

/// One JSON object per line, in window order.
pub fn write_window_log(path: &std::path::Path, outcomes: &[WindowOutcome]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for o in outcomes {
        let line = WindowLogLine {
            window: o.window,
            in_start: o.spec.in_start,
            in_end: o.spec.in_end,
            out_start: o.spec.out_start,
            out_end: o.spec.out_end,
            status: o.status,
            objective: o.objective,
            weights: o.weights.as_slice(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Compounded wealth starting from 1.
pub fn wealth_path(returns: &[f64]) -> Result<Vec<f64>> {
    let mut wealth = Vec::with_capacity(returns.len() + 1);
    wealth.push(1.0);
    let mut w = 1.0;
    for (i, &r) in returns.iter().enumerate() {
        if !(r > -1.0) {
            return Err(Error::WealthAnnihilated {
                period: i + 1,
                value: r,
            });
        }
        w *= 1.0 + r;
        wealth.push(w);
    }
    Ok(wealth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(t_len: usize, n: usize) -> ScenarioMatrix {
        let data: Vec<f64> = (0..t_len * n)
            .map(|i| ((i * 7919 % 101) as f64 - 50.0) / 2000.0)
            .collect();
        ScenarioMatrix::from_flat(t_len, n, data).unwrap()
    }

    #[test]
    fn wealth_examples() {
        let w = wealth_path(&[0.1, -0.2, 0.05]).unwrap();
        let expected = [1.0, 1.1, 0.88, 0.924];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(wealth_path(&[0.0, 0.0]).unwrap(), vec![1.0; 3]);
        assert_eq!(wealth_path(&[1.0]).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(
            wealth_path(&[0.1, -1.0]),
            Err(Error::WealthAnnihilated { period: 2, .. })
        ));
    }

    #[test]
    fn labels() {
        assert_eq!(StrategySpec::hfhe_default().label(), "HF/HE 0.30-0.69");
        assert_eq!(StrategySpec::MinMad.slug(), "minmad");
        assert_eq!(StrategySpec::hfhe_default().slug(), "hfhe_0.30_0.69");
    }

    #[test]
    fn milp_choice_checks_regime() {
        let s = StrategySpec::Hfhe {
            lambda_plus: 0.2,
            lambda_minus: 0.3,
            solver: HfheSolver::Milp,
        };
        assert!(matches!(s.validate(), Err(Error::MilpRegime { .. })));
    }

    #[test]
    fn ew_backtest_is_row_mean() {
        let sm = toy(60, 3);
        let opts = BacktestOptions {
            in_len: 30,
            step: 7,
            ..Default::default()
        };
        let res = run_backtest(&sm, &StrategySpec::Ew, &opts).unwrap();
        assert_eq!(res.returns.len(), 30);
        for (i, r) in res.returns.iter().enumerate() {
            let row = sm.row(30 + i);
            assert_eq!(*r, row.iter().sum::<f64>() / 3.0);
        }
        assert_eq!(res.wealth.len(), 31);
    }

    #[test]
    fn single_asset_passes_returns_through() {
        let sm = toy(40, 1);
        let opts = BacktestOptions {
            in_len: 20,
            step: 5,
            ..Default::default()
        };
        for s in StrategySpec::all_default() {
            let res = run_backtest(&sm, &s, &opts).unwrap();
            assert_eq!(res.returns, sm.as_slice()[20..].to_vec(), "{s}");
        }
    }

    #[test]
    fn drift_mode_tracks_shares() {
        let sm = ScenarioMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, -0.5],
        ])
        .unwrap();
        let opts = BacktestOptions {
            in_len: 2,
            step: 2,
            holding: Holding::Drift,
            ..Default::default()
        };
        let res = run_backtest(&sm, &StrategySpec::Ew, &opts).unwrap();
        // After day 1 holdings are (1.0, 0.5): weights (2/3, 1/3).
        assert!((res.returns[0] - 0.5).abs() < 1e-15);
        assert!((res.returns[1] - (2.0 / 3.0 * 0.5 - 1.0 / 3.0 * 0.5)).abs() < 1e-15);
        // Final wealth equals the value of the held shares.
        let w = res.wealth.last().unwrap();
        assert!((w - (0.5 * 2.0 * 1.5 + 0.5 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn log_lines_per_window() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("windows.jsonl");
        let sm = toy(50, 2);
        let opts = BacktestOptions {
            in_len: 30,
            step: 10,
            log_path: Some(path.clone()),
            ..Default::default()
        };
        run_backtest(&sm, &StrategySpec::MinMad, &opts).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<serde_json::Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1]["window"], 1);
        assert_eq!(lines[0]["status"], "Optimal");
        assert_eq!(lines[0]["weights"].as_array().unwrap().len(), 2);
    }
}
