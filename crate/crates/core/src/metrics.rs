//! Out-of-sample performance measures.
//!
//! Ratios whose denominator vanishes are reported as signed infinity (or
//! NaN for `0/0`) rather than as errors; [`is_flagged`] detects them.

use serde::{Deserialize, Serialize};

use crate::backtest::{wealth_path, BacktestResult};
use crate::error::{Error, Result};
use crate::objectives::PortfolioWeights;

/// Weight above which an asset counts as selected.
pub const SELECTION_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub risk_free: f64,
    /// Upper-tail fraction of the Rachev ratio.
    pub rachev_alpha: f64,
    /// Lower-tail fraction of the Rachev ratio.
    pub rachev_beta: f64,
    /// ROI horizon `Δτ` in periods.
    pub roi_horizon: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            risk_free: 0.0,
            rachev_alpha: 0.05,
            rachev_beta: 0.05,
            roi_horizon: 250,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicStats {
    pub exp_ret: f64,
    pub vol: f64,
    pub sharpe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub exp_ret: f64,
    pub vol: f64,
    pub sharpe: f64,
    pub max_dd: f64,
    pub sortino: f64,
    pub rachev: f64,
    pub ave_roi: f64,
    pub nhi: f64,
    pub ave_count: f64,
    pub config: MetricsConfig,
}

/// `num / den` with a zero denominator mapped to ±∞ (or NaN for `0/0`).
fn flagged_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else if num < 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::NAN
    }
}

/// True for values produced by a degenerate denominator.
pub fn is_flagged(v: f64) -> bool {
    !v.is_finite()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample mean, population standard deviation and Sharpe ratio.
pub fn basic_stats(returns: &[f64], risk_free: f64) -> Result<BasicStats> {
    if returns.len() < 2 {
        return Err(Error::SeriesTooShort(format!(
            "need at least 2 returns, have {}",
            returns.len()
        )));
    }
    let exp_ret = mean(returns);
    let vol =
        (returns.iter().map(|r| (r - exp_ret).powi(2)).sum::<f64>() / returns.len() as f64).sqrt();
    Ok(BasicStats {
        exp_ret,
        vol,
        sharpe: flagged_ratio(exp_ret - risk_free, vol),
    })
}

/// Most negative relative drop of wealth below its running peak.
pub fn max_drawdown(returns: &[f64]) -> Result<f64> {
    let wealth = wealth_path(returns)?;
    let mut peak = f64::MIN;
    let mut worst = 0.0_f64;
    for w in wealth {
        peak = peak.max(w);
        worst = worst.min((w - peak) / peak);
    }
    Ok(worst)
}

/// `(mean − r_f) / sqrt(E[min(R − r_f, 0)²])`.
pub fn sortino(returns: &[f64], risk_free: f64) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::SeriesTooShort("empty return series".into()));
    }
    let excess = mean(returns) - risk_free;
    let downside = (returns
        .iter()
        .map(|r| (r - risk_free).min(0.0).powi(2))
        .sum::<f64>()
        / returns.len() as f64)
        .sqrt();
    Ok(flagged_ratio(excess, downside))
}

/// Number of order statistics in a tail of fraction `frac` of `len`.
fn tail_count(frac: f64, len: usize) -> usize {
    ((frac * len as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Mean of the best `⌈αT⌉` excess returns over minus the mean of the worst
/// `⌈βT⌉`. A series with no losses in the lower tail is flagged (+∞ or NaN).
/// When every return is a loss the numerator is the mean of the least-bad
/// tail, so the ratio is negative.
pub fn rachev(returns: &[f64], alpha: f64, beta: f64, risk_free: f64) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::SeriesTooShort("empty return series".into()));
    }
    for (name, v) in [("α", alpha), ("β", beta)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "{name}={v} outside (0, 1]"
            )));
        }
    }
    let mut excess: Vec<f64> = returns.iter().map(|r| r - risk_free).collect();
    excess.sort_by(f64::total_cmp);
    let len = excess.len();
    let upper = tail_count(alpha, len);
    let lower = tail_count(beta, len);
    let gain = mean(&excess[len - upper..]);
    let loss = -mean(&excess[..lower]);
    Ok(flagged_ratio(gain, loss))
}

/// Mean of `W_τ / W_{τ−Δτ} − 1` over every horizon that fits in the
/// compounded wealth path `W_0 = 1, …, W_T`.
pub fn ave_roi(returns: &[f64], horizon: usize) -> Result<f64> {
    if horizon == 0 || returns.len() < horizon {
        return Err(Error::SeriesTooShort(format!(
            "{} returns for horizon {horizon}",
            returns.len()
        )));
    }
    let wealth = wealth_path(returns)?;
    let rois: Vec<f64> = (horizon..wealth.len())
        .map(|tau| wealth[tau] / wealth[tau - horizon] - 1.0)
        .collect();
    Ok(mean(&rois))
}

/// `(NHI, ave#)` averaged over rebalancing windows. NHI is NaN when `n = 1`.
pub fn diversification(weights: &[PortfolioWeights], n: usize) -> Result<(f64, f64)> {
    if weights.is_empty() {
        return Err(Error::SeriesTooShort("no portfolios".into()));
    }
    if let Some(w) = weights.iter().find(|w| w.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.len(),
        });
    }
    let count = weights.len() as f64;
    let nhi = if n < 2 {
        f64::NAN
    } else {
        let norm = 1.0 - 1.0 / n as f64;
        weights
            .iter()
            .map(|w| {
                let hi: f64 = w.as_slice().iter().map(|x| x * x).sum();
                ((1.0 - hi) / norm).clamp(0.0, 1.0)
            })
            .sum::<f64>()
            / count
    };
    let ave_count = weights
        .iter()
        .map(|w| {
            w.as_slice()
                .iter()
                .filter(|&&x| x > SELECTION_THRESHOLD)
                .count() as f64
        })
        .sum::<f64>()
        / count;
    Ok((nhi, ave_count))
}

/// All nine measures for one backtest. `ave_roi` is NaN when the series is
/// shorter than the ROI horizon.
pub fn compute_metrics(result: &BacktestResult, config: &MetricsConfig) -> Result<MetricsReport> {
    let r = &result.returns;
    let stats = basic_stats(r, config.risk_free)?;
    let n = result
        .windows
        .first()
        .map(|w| w.weights.len())
        .ok_or_else(|| Error::SeriesTooShort("backtest has no windows".into()))?;
    let (nhi, ave_count) = diversification(&result.weights(), n)?;
    let ave_roi = if r.len() >= config.roi_horizon {
        ave_roi(r, config.roi_horizon)?
    } else {
        f64::NAN
    };
    Ok(MetricsReport {
        exp_ret: stats.exp_ret,
        vol: stats.vol,
        sharpe: stats.sharpe,
        max_dd: max_drawdown(r)?,
        sortino: sortino(r, config.risk_free)?,
        rachev: rachev(r, config.rachev_alpha, config.rachev_beta, config.risk_free)?,
        ave_roi,
        nhi,
        ave_count,
        config: *config,
    })
}
