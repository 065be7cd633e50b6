use std::time::Instant;

use crate::data_io::ScenarioMatrix;
use crate::error::{Error, Result};
use crate::objectives::PortfolioWeights;

use super::lp::{solve_lp, LpProblem, LpStatus};
use super::{SolveReport, SolveStatus};

/// Linearized `min −mean_weight·μ(x) + mad_weight·MAD(x)` over the simplex.
///
/// Variables are `[x (n), d (T)]` with `d_t ≥ ±(r_t − μ)·x`; there are `2T`
/// inequality rows and the budget equality.
pub fn build_mean_mad_lp(sm: &ScenarioMatrix, mean_weight: f64, mad_weight: f64) -> LpProblem {
    let n = sm.n_assets();
    let t_len = sm.n_scenarios();
    let mu = sm.mean_returns();
    let mut lp = LpProblem::new(n + t_len);
    lp.add_block("x", 0..n);
    lp.add_block("d", n..n + t_len);
    let inv_t = 1.0 / t_len as f64;
    for (c, m) in lp.objective.iter_mut().zip(&mu) {
        *c = -mean_weight * m;
    }
    for t in 0..t_len {
        lp.objective[n + t] = mad_weight * inv_t;
    }
    for (t, row) in sm.rows().enumerate() {
        let mut up = vec![0.0; n + t_len];
        let mut down = vec![0.0; n + t_len];
        for k in 0..n {
            let centered = row[k] - mu[k];
            up[k] = centered;
            down[k] = -centered;
        }
        up[n + t] = -1.0;
        down[n + t] = -1.0;
        lp.add_le(up, 0.0);
        lp.add_le(down, 0.0);
    }
    let mut budget = vec![0.0; n + t_len];
    budget[..n].iter_mut().for_each(|v| *v = 1.0);
    lp.add_eq(budget, 1.0);
    lp
}

/// Minimum-MAD linear program.
pub fn build_min_mad_lp(sm: &ScenarioMatrix) -> LpProblem {
    build_mean_mad_lp(sm, 0.0, 1.0)
}

/// Dual of the Mean-MAD program in its negative-part form
/// `min aᵀx + (2w/T)·Σ v_t` with `v_t ≥ −(r_t − μ)·x`, `v ≥ 0`, `Σx = 1`:
///
/// `min −z` subject to `z + Σ_t (r_tk − μ_k)·y_t ≤ a_k` for every asset and
/// `0 ≤ y_t ≤ 2w/T`, with `z` free. It has `n` rows instead of `2T + 1`, and
/// the optimal weights are the negated row multipliers.
pub fn build_mean_mad_dual_lp(sm: &ScenarioMatrix, mean_weight: f64, mad_weight: f64) -> LpProblem {
    let n = sm.n_assets();
    let t_len = sm.n_scenarios();
    let mu = sm.mean_returns();
    let mut lp = LpProblem::new(t_len + 1);
    lp.add_block("y", 0..t_len);
    lp.add_block("z", t_len..t_len + 1);
    let cap = 2.0 * mad_weight / t_len as f64;
    for t in 0..t_len {
        lp.upper[t] = Some(cap);
    }
    lp.lower[t_len] = None;
    lp.objective[t_len] = -1.0;
    for k in 0..n {
        let mut row: Vec<f64> = sm.rows().map(|r| r[k] - mu[k]).collect();
        row.push(1.0);
        lp.add_le(row, -mean_weight * mu[k]);
    }
    lp
}

/// Solves the Mean-MAD program through [`build_mean_mad_dual_lp`]; the
/// reported objective is the common optimal value of both programs.
pub fn solve_mean_mad(
    sm: &ScenarioMatrix,
    mean_weight: f64,
    mad_weight: f64,
) -> Result<SolveReport> {
    let start = Instant::now();
    let lp = build_mean_mad_dual_lp(sm, mean_weight, mad_weight);
    let sol = solve_lp(&lp)?;
    let status = match sol.status {
        LpStatus::Optimal => SolveStatus::Optimal,
        LpStatus::IterationLimit => {
            return Err(Error::SolverFailed("MAD LP hit the pivot limit".into()))
        }
        other => {
            return Err(Error::SolverFailed(format!(
                "MAD LP finished with status {other:?}"
            )))
        }
    };
    let x: Vec<f64> = sol.duals.iter().map(|p| -p).collect();
    let weights = PortfolioWeights::from_solver(x)?;
    Ok(SolveReport {
        status,
        weights,
        objective: -sol.objective,
        nodes: 0,
        starts: 0,
        iterations: sol.iterations,
        elapsed: start.elapsed(),
    })
}

pub fn solve_min_mad(sm: &ScenarioMatrix) -> Result<SolveReport> {
    solve_mean_mad(sm, 0.0, 1.0)
}
