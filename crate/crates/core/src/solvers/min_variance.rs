use std::time::Instant;

use crate::error::{Error, Result};
use crate::objectives::{quadratic_form, PortfolioWeights};

use super::{SolveReport, SolveStatus};

const MAX_ITERATIONS: usize = 100_000;
const GRADIENT_MAPPING_TOL: f64 = 1e-9;

/// Euclidean projection onto `{x ≥ 0, Σx = 1}` (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Long-only minimum-variance portfolio by projected gradient with fixed
/// step `1 / (2·max_i Σ_j |σ_ij|)`.
pub fn solve_min_variance(cov: &[Vec<f64>]) -> Result<SolveReport> {
    let start = Instant::now();
    let n = cov.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty covariance matrix".into()));
    }
    if let Some(row) = cov.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: row.len(),
        });
    }
    let scale = cov
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        for j in (i + 1)..n {
            if (cov[i][j] - cov[j][i]).abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }

    let row_sum = cov
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let mut x = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut status = SolveStatus::IterationLimit;
    if n == 1 || row_sum == 0.0 {
        status = SolveStatus::Optimal;
    } else {
        let step = 1.0 / (2.0 * row_sum);
        let mut grad = vec![0.0; n];
        let mut trial = vec![0.0; n];
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            for (g, row) in grad.iter_mut().zip(cov) {
                *g = 2.0 * row.iter().zip(&x).map(|(s, w)| s * w).sum::<f64>();
            }
            for k in 0..n {
                trial[k] = x[k] - step * grad[k];
            }
            let next = project_to_simplex(&trial);
            let mapping = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                / step;
            x = next;
            if mapping <= GRADIENT_MAPPING_TOL {
                status = SolveStatus::Optimal;
                break;
            }
        }
        // The iterate after the cap is still feasible; report it as is.
    }
    let weights = PortfolioWeights::from_solver(x)?;
    let objective = quadratic_form(cov, weights.as_slice());
    Ok(SolveReport {
        status,
        weights,
        objective,
        nodes: 0,
        starts: 0,
        iterations,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_properties() {
        let p = project_to_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_to_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_to_simplex(&[0.3, 0.3, 0.3]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn inverse_variance_for_uncorrelated_pair() {
        let r = solve_min_variance(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.weights.as_slice()[0] - 0.8).abs() < 1e-9);
        assert!((r.weights.as_slice()[1] - 0.2).abs() < 1e-9);
        assert!((r.objective - 0.8).abs() < 1e-12);
    }

    #[test]
    fn identity_gives_equal_weights() {
        let n = 5;
        let cov: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let r = solve_min_variance(&cov).unwrap();
        assert!(r.weights.as_slice().iter().all(|w| (w - 0.2).abs() < 1e-12));
    }

    #[test]
    fn single_asset_and_errors() {
        let r = solve_min_variance(&[vec![0.3]]).unwrap();
        assert_eq!(r.weights.as_slice(), &[1.0]);
        assert!(matches!(
            solve_min_variance(&[vec![1.0, 0.5], vec![0.4, 1.0]]),
            Err(Error::NotSymmetric { .. })
        ));
    }
}
