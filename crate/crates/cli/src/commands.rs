//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use hfhe::backtest::{optimize, run_backtest, BacktestResult, HfheSolver, StrategySpec};
use hfhe::data_io::{load_prices, to_returns, PriceTable, ScenarioMatrix};
use hfhe::exec::Execution;
use hfhe::lottery::{classify_attitude, h2, h_lambda, h_q, HfheParams, Lottery};
use hfhe::metrics::{compute_metrics, MetricsReport};
use hfhe::objectives::PtParams;
use hfhe::report::{sweep_grids, ComparisonTable, Metric};
use serde::Serialize;

use crate::config::{hfhe_spec, RunConfig, SolverChoice};
use crate::failure::{Category, Failure};

fn load(path: &Path) -> Result<(PriceTable, ScenarioMatrix), Failure> {
    let prices = load_prices(path).map_err(|e| Failure::from_core("dataset", e))?;
    let sm = to_returns(&prices).map_err(|e| Failure::from_core("dataset", e))?;
    Ok((prices, sm))
}

fn write(path: &Path, content: &str) -> Result<(), Failure> {
    fs::write(path, content).map_err(|e| Failure::output(format!("{}: {e}", path.display())))
}

/// `date,return,wealth`; the first row is the starting wealth on the last
/// in-sample date.
fn wealth_csv(prices: &PriceTable, first_return_row: usize, result: &BacktestResult) -> String {
    let mut out = String::from("date,return,wealth\n");
    let dates = prices.dates();
    // Return row `s` ends on price date `s + 1`.
    let _ = writeln!(out, "{},,{}", dates[first_return_row], result.wealth[0]);
    for (i, (r, w)) in result.returns.iter().zip(&result.wealth[1..]).enumerate() {
        let _ = writeln!(out, "{},{r},{w}", dates[first_return_row + i + 1]);
    }
    out
}

fn run_strategy(
    cfg: &RunConfig,
    sm: &ScenarioMatrix,
    spec: &StrategySpec,
    log: Option<&Path>,
) -> Result<(BacktestResult, MetricsReport), Failure> {
    let mut opts = cfg.backtest_options();
    opts.log_path = log.map(Path::to_path_buf);
    let label = spec.label();
    let started = Instant::now();
    let result = run_backtest(sm, spec, &opts).map_err(|e| Failure::from_core(&label, e))?;
    let metrics =
        compute_metrics(&result, &cfg.metrics).map_err(|e| Failure::from_core(&label, e))?;
    eprintln!(
        "{label}: {} windows in {:.1}s",
        result.windows.len(),
        started.elapsed().as_secs_f64()
    );
    Ok((result, metrics))
}

pub fn backtest(cfg: &RunConfig) -> Result<ComparisonTable, Failure> {
    let (prices, sm) = load(&cfg.dataset)?;
    fs::create_dir_all(&cfg.output_dir).map_err(Failure::output)?;
    let mut columns = Vec::new();
    for (spec, note) in cfg.strategy_specs() {
        if let Some(note) = note {
            eprintln!("note: {note}");
        }
        let slug = spec.slug();
        let log = cfg.output_dir.join(format!("windows_{slug}.jsonl"));
        let (result, metrics) = run_strategy(cfg, &sm, &spec, Some(&log))?;
        write(
            &cfg.output_dir.join(format!("wealth_{slug}.csv")),
            &wealth_csv(&prices, cfg.window.in_len, &result),
        )?;
        columns.push((spec.label(), metrics));
    }
    let table =
        ComparisonTable::from_reports(&columns).map_err(|e| Failure::from_core("report", e))?;
    let csv = table
        .to_csv()
        .map_err(|e| Failure::from_core("report", e))?;
    write(&cfg.output_dir.join("report.csv"), &csv)?;
    let md = format!(
        "# Out-of-sample performance\n\nDataset `{}`: {} assets, {} returns, in-sample {} / step {}.\n\n{}",
        cfg.dataset.display(),
        sm.n_assets(),
        sm.n_scenarios(),
        cfg.window.in_len,
        cfg.window.step,
        table.to_markdown()
    );
    write(&cfg.output_dir.join("report.md"), &md)?;
    Ok(table)
}

fn grid_file_stem(metric: Metric) -> String {
    match metric {
        Metric::AveCount => "sweep_avecount".into(),
        other => format!("sweep_{}", other.name().to_lowercase()),
    }
}

pub fn sweep(cfg: &RunConfig) -> Result<String, Failure> {
    let grid = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::new(Category::Config, "sweep needs a [sweep] table"))?;
    let (_, sm) = load(&cfg.dataset)?;
    fs::create_dir_all(&cfg.output_dir).map_err(Failure::output)?;
    let mut reports = Vec::with_capacity(grid.lambda_plus.len());
    for &lp in &grid.lambda_plus {
        let mut row = Vec::with_capacity(grid.lambda_minus.len());
        for &lm in &grid.lambda_minus {
            let (spec, note) = hfhe_spec(lp, lm, grid.solver);
            if let Some(note) = note {
                eprintln!("note: {note}");
            }
            spec.validate()
                .map_err(|e| Failure::from_core(&spec.label(), e))?;
            row.push(run_strategy(cfg, &sm, &spec, None)?.1);
        }
        reports.push(row);
    }
    let grids = sweep_grids(&grid.lambda_plus, &grid.lambda_minus, &reports)
        .map_err(|e| Failure::from_core("sweep", e))?;
    let mut md = String::from("# HF/HE parameter sweep\n\n");
    for g in &grids {
        let csv = g.to_csv().map_err(|e| Failure::from_core("sweep", e))?;
        write(
            &cfg.output_dir
                .join(format!("{}.csv", grid_file_stem(g.metric))),
            &csv,
        )?;
        md.push_str(&g.to_markdown());
        md.push('\n');
    }
    write(&cfg.output_dir.join("sweep.md"), &md)?;
    Ok(md)
}

pub struct OptimizeArgs<'a> {
    pub dataset: &'a Path,
    pub strategy: &'a str,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub solver: SolverChoice,
    pub seed: u64,
    pub starts: Option<usize>,
    /// Use only the most recent `last` returns.
    pub last: Option<usize>,
}

#[derive(Serialize)]
pub struct OptimizeOutput {
    pub strategy: String,
    pub status: String,
    /// Model value at the solution: mean return (EW), variance (MinV),
    /// MAD (MinMAD), prospect value (PT) or HF/HE value.
    pub value: f64,
    pub scenarios: usize,
    pub weights: Vec<(String, f64)>,
}

pub fn parse_strategy(
    name: &str,
    lp: f64,
    lm: f64,
    solver: SolverChoice,
) -> Result<(StrategySpec, Option<String>), Failure> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "ew" => (StrategySpec::Ew, None),
        "minv" => (StrategySpec::MinV, None),
        "minmad" => (StrategySpec::MinMad, None),
        "pt" => (
            StrategySpec::Pt {
                params: PtParams::default(),
            },
            None,
        ),
        "hfhe" | "hf/he" => hfhe_spec(lp, lm, solver),
        other => {
            return Err(Failure::new(
                Category::Config,
                format!("unknown strategy {other:?}; expected ew, minv, minmad, pt or hfhe"),
            ))
        }
    })
}

pub fn optimize_cmd(args: &OptimizeArgs) -> Result<OptimizeOutput, Failure> {
    let (spec, note) = parse_strategy(
        args.strategy,
        args.lambda_plus,
        args.lambda_minus,
        args.solver,
    )?;
    if let Some(note) = note {
        eprintln!("note: {note}");
    }
    let (prices, mut sm) = load(args.dataset)?;
    if let Some(last) = args.last {
        if last == 0 || last > sm.n_scenarios() {
            return Err(Failure::new(
                Category::Parameter,
                format!("--last {last} outside 1..={}", sm.n_scenarios()),
            ));
        }
        let t = sm.n_scenarios();
        sm = sm
            .slice_rows(t - last, t - 1)
            .map_err(|e| Failure::from_core("dataset", e))?;
    }
    let label = spec.label();
    let report = optimize(&sm, &spec, args.seed, args.starts, Execution::default())
        .map_err(|e| Failure::from_core(&label, e))?;
    let value = match spec {
        StrategySpec::Hfhe {
            solver: HfheSolver::Milp,
            ..
        } => -report.objective,
        _ => report.objective,
    };
    Ok(OptimizeOutput {
        strategy: label,
        status: format!("{:?}", report.status),
        value,
        scenarios: sm.n_scenarios(),
        weights: prices
            .tickers()
            .iter()
            .cloned()
            .zip(report.weights.as_slice().iter().copied())
            .collect(),
    })
}

impl OptimizeOutput {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "strategy: {}", self.strategy);
        let _ = writeln!(out, "status: {}", self.status);
        let _ = writeln!(out, "value: {}", self.value);
        let _ = writeln!(out, "scenarios: {}", self.scenarios);
        let _ = writeln!(out, "weights:");
        for (ticker, w) in &self.weights {
            let _ = writeln!(out, "  {ticker}: {w:.6}");
        }
        out
    }
}

/// Functional values and attitude of a lottery, one `key: value` per line.
pub fn evaluate_lottery(
    text: &str,
    lambda_plus: f64,
    lambda_minus: f64,
    q: f64,
) -> Result<String, Failure> {
    let lottery = Lottery::from_json(text).map_err(|e| Failure::from_core("lottery", e))?;
    let params = HfheParams::new(lambda_plus, lambda_minus, q)
        .map_err(|e| Failure::from_core("lottery", e))?;
    let mut out = String::new();
    let _ = writeln!(out, "mean: {}", lottery.mean());
    if lottery.is_nonnegative() {
        let v = h_lambda(&lottery, lambda_plus).map_err(|e| Failure::from_core("lottery", e))?;
        let _ = writeln!(out, "h_lambda: {v}");
    }
    let _ = writeln!(out, "h2: {}", h2(&lottery, &params));
    let hq = h_q(&lottery, &params).map_err(|e| Failure::from_core("lottery", e))?;
    let _ = writeln!(out, "h_q: {hq}");
    let att = classify_attitude(&lottery, lambda_plus, lambda_minus);
    let _ = writeln!(out, "attitude: {:?}", att.attitude);
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| v.to_string());
    let _ = writeln!(out, "m: {}", show(att.m));
    let _ = writeln!(out, "k: {}", show(att.k));
    let _ = writeln!(out, "threshold: {}", show(att.threshold));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line<'a>(out: &'a str, key: &str) -> Option<&'a str> {
        out.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}: ")))
    }

    #[test]
    fn lottery_example() {
        let out = evaluate_lottery("[[60, 0.5], [-40, 0.5]]", 0.30, 0.69, 1.0).unwrap();
        let h: f64 = line(&out, "h2").unwrap().parse().unwrap();
        assert!((h - 5.6).abs() < 1e-12);
        assert_eq!(line(&out, "attitude"), Some("Averse"));
        assert_eq!(line(&out, "h_q"), line(&out, "h2"));
        assert!(line(&out, "h_lambda").is_none());
    }

    #[test]
    fn nonnegative_lottery_reports_h_lambda() {
        let out = evaluate_lottery("[[100, 0.5], [0, 0.5]]", 0.7, 0.2, 1.0).unwrap();
        assert!(line(&out, "h_lambda").is_some());
        assert_eq!(line(&out, "attitude"), Some("Seeking"));
    }

    #[test]
    fn malformed_lottery_is_a_data_error() {
        let err = evaluate_lottery("{not json", 0.3, 0.69, 1.0).unwrap_err();
        assert_eq!(err.category, Category::Data);
        let err = evaluate_lottery("[[1, 0.5]]", 0.3, 0.69, 1.0).unwrap_err();
        assert_eq!(err.category, Category::Data);
        let err = evaluate_lottery("[[1, 1.0]]", 0.3, 0.69, -1.0).unwrap_err();
        assert_eq!(err.category, Category::Parameter);
    }

    #[test]
    fn strategy_names() {
        assert_eq!(
            parse_strategy("EW", 0.3, 0.69, SolverChoice::Milp)
                .unwrap()
                .0,
            StrategySpec::Ew
        );
        assert!(parse_strategy("hfhe", 0.7, 0.69, SolverChoice::Milp)
            .unwrap()
            .1
            .is_some());
        assert_eq!(
            parse_strategy("xyz", 0.3, 0.69, SolverChoice::Milp)
                .unwrap_err()
                .category,
            Category::Config
        );
    }
}
