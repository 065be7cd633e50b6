//! Rank-annotated comparison tables and λ-sweep grids.
//!
//! CSV cells use Rust's shortest round-trip float formatting, so parsing a
//! written table reproduces every value exactly (including `inf` and `NaN`).

use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    HigherBetter,
    LowerBetter,
    Unranked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    ExpRet,
    Vol,
    Sharpe,
    MaxDd,
    Sortino,
    Rachev,
    AveRoi,
    Nhi,
    AveCount,
}

impl Metric {
    /// Row order of the comparison table.
    pub const ALL: [Metric; 9] = [
        Metric::ExpRet,
        Metric::Vol,
        Metric::Sharpe,
        Metric::MaxDd,
        Metric::Sortino,
        Metric::Rachev,
        Metric::AveRoi,
        Metric::Nhi,
        Metric::AveCount,
    ];

    /// Metrics reported on the λ₊ × λ₋ sweep grid.
    pub const SWEEP: [Metric; 4] = [
        Metric::ExpRet,
        Metric::Vol,
        Metric::Sharpe,
        Metric::AveCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ExpRet => "ExpRet",
            Metric::Vol => "Vol",
            Metric::Sharpe => "Sharpe",
            Metric::MaxDd => "MaxDD",
            Metric::Sortino => "Sortino",
            Metric::Rachev => "Rachev",
            Metric::AveRoi => "AveROI",
            Metric::Nhi => "NHI",
            Metric::AveCount => "ave#",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn direction(self) -> Direction {
        match self {
            Metric::Vol => Direction::LowerBetter,
            Metric::AveCount => Direction::Unranked,
            _ => Direction::HigherBetter,
        }
    }

    /// Printed as a percentage in Markdown.
    pub fn is_percent(self) -> bool {
        matches!(
            self,
            Metric::ExpRet | Metric::Vol | Metric::MaxDd | Metric::AveRoi
        )
    }

    pub fn value(self, r: &MetricsReport) -> f64 {
        match self {
            Metric::ExpRet => r.exp_ret,
            Metric::Vol => r.vol,
            Metric::Sharpe => r.sharpe,
            Metric::MaxDd => r.max_dd,
            Metric::Sortino => r.sortino,
            Metric::Rachev => r.rachev,
            Metric::AveRoi => r.ave_roi,
            Metric::Nhi => r.nhi,
            Metric::AveCount => r.ave_count,
        }
    }
}

/// Ranks `1..=len` for one row. NaN ranks last; ties go to the earlier column.
pub fn rank_row(values: &[f64], direction: Direction) -> Option<Vec<usize>> {
    let sign = match direction {
        Direction::HigherBetter => -1.0,
        Direction::LowerBetter => 1.0,
        Direction::Unranked => return None,
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (values[a], values[b]);
        match (va.is_nan(), vb.is_nan()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => (sign * va).total_cmp(&(sign * vb)),
        }
        .then(a.cmp(&b))
    });
    let mut ranks = vec![0; values.len()];
    for (position, &col) in order.iter().enumerate() {
        ranks[col] = position + 1;
    }
    Some(ranks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub columns: Vec<String>,
    /// `values[row][col]`, rows in [`Metric::ALL`] order.
    pub values: Vec<Vec<f64>>,
    pub ranks: Vec<Option<Vec<usize>>>,
}

fn number(v: f64) -> String {
    format!("{v}")
}

fn parse_number(s: &str, row: usize, column: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::NonNumeric {
        row,
        column: column.to_string(),
        value: s.to_string(),
    })
}

impl ComparisonTable {
    pub fn from_reports(columns: &[(String, MetricsReport)]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Table("no strategies to compare".into()));
        }
        let values: Vec<Vec<f64>> = Metric::ALL
            .iter()
            .map(|m| columns.iter().map(|(_, r)| m.value(r)).collect())
            .collect();
        let ranks = Metric::ALL
            .iter()
            .zip(&values)
            .map(|(m, row)| rank_row(row, m.direction()))
            .collect();
        Ok(Self {
            columns: columns.iter().map(|(c, _)| c.clone()).collect(),
            values,
            ranks,
        })
    }

    pub fn value(&self, metric: Metric, column: usize) -> f64 {
        self.values[row_index(metric)][column]
    }

    pub fn rank(&self, metric: Metric, column: usize) -> Option<usize> {
        self.ranks[row_index(metric)].as_ref().map(|r| r[column])
    }

    /// `metric,<col>…,rank:<col>…`; unranked rows leave the rank cells empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["metric".to_string()];
        header.extend(self.columns.iter().cloned());
        header.extend(self.columns.iter().map(|c| format!("rank:{c}")));
        w.write_record(&header)?;
        for ((metric, row), ranks) in Metric::ALL.iter().zip(&self.values).zip(&self.ranks) {
            let mut record = vec![metric.name().to_string()];
            record.extend(row.iter().map(|&v| number(v)));
            match ranks {
                Some(r) => record.extend(r.iter().map(|k| k.to_string())),
                None => record.extend(std::iter::repeat_n(String::new(), row.len())),
            }
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Table(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Table(e.to_string()))
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 3 || (header.len() - 1) % 2 != 0 || &header[0] != "metric" {
            return Err(Error::Header(
                "expected metric, value columns and rank columns".into(),
            ));
        }
        let k = (header.len() - 1) / 2;
        let columns: Vec<String> = header.iter().skip(1).take(k).map(String::from).collect();
        let mut values = Vec::new();
        let mut ranks = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row = i + 1;
            let expected = Metric::ALL
                .get(i)
                .ok_or_else(|| Error::Table(format!("unexpected extra row {row}")))?;
            if &record[0] != expected.name() {
                return Err(Error::Table(format!(
                    "row {row}: expected {}, found {}",
                    expected.name(),
                    &record[0]
                )));
            }
            let vals = (0..k)
                .map(|c| parse_number(&record[1 + c], row, &columns[c]))
                .collect::<Result<Vec<f64>>>()?;
            let rank_cells: Vec<&str> = (0..k).map(|c| record[1 + k + c].trim()).collect();
            let rank = if rank_cells.iter().all(|s| s.is_empty()) {
                None
            } else {
                Some(
                    rank_cells
                        .iter()
                        .map(|s| {
                            s.parse::<usize>()
                                .map_err(|_| Error::Table(format!("row {row}: bad rank {s:?}")))
                        })
                        .collect::<Result<Vec<usize>>>()?,
                )
            };
            values.push(vals);
            ranks.push(rank);
        }
        if values.len() != Metric::ALL.len() {
            return Err(Error::Table(format!(
                "expected {} metric rows, found {}",
                Metric::ALL.len(),
                values.len()
            )));
        }
        Ok(Self {
            columns,
            values,
            ranks,
        })
    }

    /// Rank in parentheses; 🟢 marks the best cell of a row and 🔴 the worst.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| Metric | {} |", self.columns.join(" | "));
        let _ = writeln!(out, "|---|{}", "---:|".repeat(self.columns.len()));
        let k = self.columns.len();
        for ((metric, row), ranks) in Metric::ALL.iter().zip(&self.values).zip(&self.ranks) {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    let mut cell = format_cell(*metric, v);
                    if let Some(r) = ranks {
                        let _ = write!(cell, " ({})", r[c]);
                        if k > 1 && r[c] == 1 {
                            cell.push_str(" 🟢");
                        } else if k > 1 && r[c] == k {
                            cell.push_str(" 🔴");
                        }
                    }
                    cell
                })
                .collect();
            let _ = writeln!(out, "| {} | {} |", metric.name(), cells.join(" | "));
        }
        out
    }
}

fn row_index(metric: Metric) -> usize {
    Metric::ALL.iter().position(|&m| m == metric).unwrap_or(0)
}

fn format_cell(metric: Metric, v: f64) -> String {
    if v.is_nan() {
        "n/a".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "+inf".into()
        } else {
            "-inf".into()
        }
    } else if metric.is_percent() {
        format!("{:.3}%", v * 100.0)
    } else if metric == Metric::AveCount {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    }
}

/// One metric over a λ₊ × λ₋ grid; `values[i][j]` belongs to
/// `(lambda_plus[i], lambda_minus[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub metric: Metric,
    pub lambda_plus: Vec<f64>,
    pub lambda_minus: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Builds one grid per sweep metric from `reports[i][j]`.
pub fn sweep_grids(
    lambda_plus: &[f64],
    lambda_minus: &[f64],
    reports: &[Vec<MetricsReport>],
) -> Result<Vec<SweepGrid>> {
    if reports.len() != lambda_plus.len() {
        return Err(Error::DimensionMismatch {
            expected: lambda_plus.len(),
            found: reports.len(),
        });
    }
    if let Some(row) = reports.iter().find(|r| r.len() != lambda_minus.len()) {
        return Err(Error::DimensionMismatch {
            expected: lambda_minus.len(),
            found: row.len(),
        });
    }
    Ok(Metric::SWEEP
        .iter()
        .map(|&metric| SweepGrid {
            metric,
            lambda_plus: lambda_plus.to_vec(),
            lambda_minus: lambda_minus.to_vec(),
            values: reports
                .iter()
                .map(|row| row.iter().map(|r| metric.value(r)).collect())
                .collect(),
        })
        .collect())
}

impl SweepGrid {
    /// Header `lambda_plus\lambda_minus,<λ₋>…`, one row per λ₊.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![format!("{}:lambda_plus\\lambda_minus", self.metric.name())];
        header.extend(self.lambda_minus.iter().map(|&v| number(v)));
        w.write_record(&header)?;
        for (lp, row) in self.lambda_plus.iter().zip(&self.values) {
            let mut record = vec![number(*lp)];
            record.extend(row.iter().map(|&v| number(v)));
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Table(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Table(e.to_string()))
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "**{}**\n", self.metric.name());
        let heads: Vec<String> = self
            .lambda_minus
            .iter()
            .map(|v| format!("λ₋={v:.2}"))
            .collect();
        let _ = writeln!(out, "| λ₊ \\ λ₋ | {} |", heads.join(" | "));
        let _ = writeln!(out, "|---|{}", "---:|".repeat(self.lambda_minus.len()));
        for (lp, row) in self.lambda_plus.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|&v| format_cell(self.metric, v)).collect();
            let _ = writeln!(out, "| {lp:.2} | {} |", cells.join(" | "));
        }
        out
    }
}
