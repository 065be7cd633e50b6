//! Price ingestion, simple-return scenarios and rolling-window index sets.
//!
//! Prices are expected to be already adjusted for dividends and splits; no
//! corporate-action handling happens here. Rows are numbered from 1 in error
//! messages, counting data rows only (the header is row 0).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daily price table as read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    dates: Vec<String>,
    tickers: Vec<String>,
    /// Row-major, `dates.len() x tickers.len()`.
    prices: Vec<f64>,
}

impl PriceTable {
    /// Builds a table, enforcing positivity and strictly increasing dates.
    pub fn new(dates: Vec<String>, tickers: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = tickers.len();
        if n == 0 {
            return Err(Error::Header("no asset columns".into()));
        }
        if dates.len() != rows.len() {
            return Err(Error::Header(format!(
                "{} dates for {} price rows",
                dates.len(),
                rows.len()
            )));
        }
        let mut prices = Vec::with_capacity(rows.len() * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: n + 1,
                    found: row.len() + 1,
                });
            }
            for (k, &p) in row.iter().enumerate() {
                if !(p > 0.0) || !p.is_finite() {
                    return Err(Error::NonPositivePrice {
                        row: i + 1,
                        column: tickers[k].clone(),
                    });
                }
            }
            prices.extend_from_slice(row);
        }
        for i in 1..dates.len() {
            if dates[i] <= dates[i - 1] {
                return Err(Error::DatesNotIncreasing { row: i + 1 });
            }
        }
        Ok(Self {
            dates,
            tickers,
            prices,
        })
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_obs(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let n = self.n_assets();
        &self.prices[t * n..(t + 1) * n]
    }

    pub fn price(&self, t: usize, k: usize) -> f64 {
        self.prices[t * self.n_assets() + k]
    }
}

/// `T x n` matrix of asset returns; every row is an equally likely scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMatrix {
    n_scenarios: usize,
    n_assets: usize,
    /// Row-major.
    returns: Vec<f64>,
}

impl ScenarioMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        if t == 0 {
            return Err(Error::InsufficientObservations { needed: 1, have: 0 });
        }
        let n = rows[0].len();
        let mut returns = Vec::with_capacity(t * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: n,
                    found: row.len(),
                });
            }
            returns.extend_from_slice(row);
        }
        Self::from_flat(t, n, returns)
    }

    pub fn from_flat(n_scenarios: usize, n_assets: usize, returns: Vec<f64>) -> Result<Self> {
        if n_assets == 0 || n_scenarios == 0 {
            return Err(Error::InvalidParameter(
                "scenario matrix needs at least one row and one column".into(),
            ));
        }
        if returns.len() != n_scenarios * n_assets {
            return Err(Error::DimensionMismatch {
                expected: n_scenarios * n_assets,
                found: returns.len(),
            });
        }
        if let Some(pos) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite return at row {}, column {}",
                pos / n_assets + 1,
                pos % n_assets + 1
            )));
        }
        Ok(Self {
            n_scenarios,
            n_assets,
            returns,
        })
    }

    /// Single-asset matrix from a return column.
    pub fn from_column(column: &[f64]) -> Result<Self> {
        Self::from_flat(column.len(), 1, column.to_vec())
    }

    pub fn n_scenarios(&self) -> usize {
        self.n_scenarios
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn scenario_prob(&self) -> f64 {
        1.0 / self.n_scenarios as f64
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.returns[t * self.n_assets..(t + 1) * self.n_assets]
    }

    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.returns[t * self.n_assets + k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.returns.chunks_exact(self.n_assets)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.returns
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    /// Column-major copy: entry `k * T + t` is asset `k` in scenario `t`.
    pub fn columns_flat(&self) -> Vec<f64> {
        let (t_len, n) = (self.n_scenarios, self.n_assets);
        let mut out = vec![0.0; t_len * n];
        for t in 0..t_len {
            for k in 0..n {
                out[k * t_len + t] = self.returns[t * n + k];
            }
        }
        out
    }

    /// Per-asset scenario means.
    pub fn mean_returns(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.n_assets];
        for row in self.rows() {
            for (m, r) in mu.iter_mut().zip(row) {
                *m += r;
            }
        }
        let inv = 1.0 / self.n_scenarios as f64;
        mu.iter_mut().for_each(|m| *m *= inv);
        mu
    }

    pub fn max_abs(&self) -> f64 {
        self.returns.iter().fold(0.0_f64, |acc, r| acc.max(r.abs()))
    }

    /// Rows `start..=end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.n_scenarios {
            return Err(Error::InvalidWindow(format!(
                "rows {start}..={end} outside 0..{}",
                self.n_scenarios
            )));
        }
        let n = self.n_assets;
        Self::from_flat(
            end - start + 1,
            n,
            self.returns[start * n..(end + 1) * n].to_vec(),
        )
    }
}

/// Index set of one rolling window. All bounds are inclusive 0-based row
/// indices into the scenario matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub in_start: usize,
    pub in_end: usize,
    pub out_start: usize,
    pub out_end: usize,
}

impl WindowSpec {
    pub fn in_len(&self) -> usize {
        self.in_end - self.in_start + 1
    }

    pub fn out_len(&self) -> usize {
        self.out_end - self.out_start + 1
    }
}

/// Reads a `date,TICKER1,...,TICKERn` CSV file.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceTable> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    read_prices(file)
}

/// Parses price CSV content from any reader.
pub fn read_prices<R: std::io::Read>(reader: R) -> Result<PriceTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Header(
            "expected `date,<ticker1>,...,<tickerN>`".into(),
        ));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row: row_no,
                expected: header.len(),
                found: record.len(),
            });
        }
        let date = record[0].to_owned();
        let mut prices = Vec::with_capacity(tickers.len());
        for (k, cell) in record.iter().skip(1).enumerate() {
            let p: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: row_no,
                column: tickers[k].clone(),
                value: cell.to_owned(),
            })?;
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::NonPositivePrice {
                    row: row_no,
                    column: tickers[k].clone(),
                });
            }
            prices.push(p);
        }
        if let Some(prev) = dates.last() {
            if &date <= prev {
                return Err(Error::DatesNotIncreasing { row: row_no });
            }
        }
        dates.push(date);
        rows.push(prices);
    }
    PriceTable::new(dates, tickers, rows)
}

/// Simple returns `(p_t - p_{t-1}) / p_{t-1}`, one row per consecutive pair.
pub fn to_returns(prices: &PriceTable) -> Result<ScenarioMatrix> {
    let t0 = prices.n_obs();
    if t0 < 2 {
        return Err(Error::InsufficientObservations {
            needed: 2,
            have: t0,
        });
    }
    let n = prices.n_assets();
    let mut out = Vec::with_capacity((t0 - 1) * n);
    for t in 1..t0 {
        let prev = prices.row(t - 1);
        let cur = prices.row(t);
        out.extend(cur.iter().zip(prev).map(|(c, p)| (c - p) / p));
    }
    ScenarioMatrix::from_flat(t0 - 1, n, out)
}

/// Rolling windows over `total` rows: `in_len` in-sample rows, then up to
/// `step` out-of-sample rows. The last window keeps a shorter tail.
pub fn rolling_windows(total: usize, in_len: usize, step: usize) -> Result<Vec<WindowSpec>> {
    if in_len == 0 || step == 0 {
        return Err(Error::InvalidWindow(format!(
            "in_len={in_len} and step={step} must both be >= 1"
        )));
    }
    if total <= in_len {
        return Err(Error::NoOutOfSample { total, in_len });
    }
    let count = (total - in_len).div_ceil(step);
    Ok((0..count)
        .map(|w| {
            let in_start = w * step;
            let in_end = in_start + in_len - 1;
            let out_start = in_end + 1;
            let out_end = (out_start + step - 1).min(total - 1);
            WindowSpec {
                in_start,
                in_end,
                out_start,
                out_end,
            }
        })
        .collect())
}
