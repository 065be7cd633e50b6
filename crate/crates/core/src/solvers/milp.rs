//! Mixed-integer linear reformulation of the HF/HE portfolio problem and a
//! best-first branch-and-bound solver for it.
//!
//! The portfolio return of scenario `t` is split into a gain `d⁺_t` and a
//! loss `d⁻_t` with `d⁺_t − d⁻_t = R_t(x)` and `d⁺_t·d⁻_t = 0`; the
//! complementarity is gated by a binary `w_t`. The convex gain-deviation
//! term takes the usual epigraph `z⁺_t ≥ |d⁺_t − mean(d⁺)|`. The concave
//! loss-deviation term needs `z⁻_t = −|d⁻_t − mean(d⁻)|`, which is the
//! disjunction of two branches selected by `ȳ_t + ỹ_t = 1`:
//!
//! ```text
//! ȳ_t = 1:   z⁻_t ≤ 0,  z⁻_t ≥ −(d⁻_t − mean(d⁻))
//! ỹ_t = 1:   z⁻_t ≤ 0,  z⁻_t ≥   d⁻_t − mean(d⁻)
//! ```
//!
//! Each branch is feasible only when the deviation has the matching sign,
//! and then pins `z⁻_t` to `−|dev|` at the optimum. The inactive branch is
//! relaxed by `M`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data_io::ScenarioMatrix;
use crate::error::{Error, Result};
use crate::objectives::{ew, returns_unchecked, PortfolioWeights};

use super::lp::{solve_lp, LpProblem, LpStatus};
use super::{SolveReport, SolveStatus};

const INTEGRALITY_TOL: f64 = 1e-6;
const PRUNE_TOL: f64 = 1e-9;

/// Index ranges of each variable block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MilpLayout {
    pub x: Range<usize>,
    pub d_plus: Range<usize>,
    pub d_minus: Range<usize>,
    pub z_plus: Range<usize>,
    pub z_minus: Range<usize>,
    pub y_bar: Range<usize>,
    pub y_tilde: Range<usize>,
    pub w: Range<usize>,
}

impl MilpLayout {
    fn new(n: usize, t_len: usize) -> Self {
        let block = |i: usize| n + i * t_len..n + (i + 1) * t_len;
        Self {
            x: 0..n,
            d_plus: block(0),
            d_minus: block(1),
            z_plus: block(2),
            z_minus: block(3),
            y_bar: block(4),
            y_tilde: block(5),
            w: block(6),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.w.end
    }

    pub fn n_continuous(&self) -> usize {
        self.z_minus.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub lp: LpProblem,
    /// All binary variable indices (`ȳ`, `ỹ`, `w`).
    pub binaries: Vec<usize>,
    /// Branching priority groups, searched in order.
    pub branch_groups: Vec<Range<usize>>,
    pub layout: MilpLayout,
    pub big_m: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub scenarios: ScenarioMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilpOptions {
    pub node_limit: usize,
    /// Seed the incumbent with the best vertex or equal-weight portfolio.
    pub seed_incumbent: bool,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
            seed_incumbent: true,
        }
    }
}

/// `2·max|r| + 1`: strictly above every admissible `|d^±|`, `|z^±|` and
/// deviation gap on the simplex, since `|R_t(x)| ≤ max_k |r_kt|`.
pub fn choose_big_m(sm: &ScenarioMatrix) -> f64 {
    2.0 * sm.max_abs() + 1.0
}

/// Emits the HF/HE mixed-integer program for the risk-averse-gains,
/// risk-seeking-losses regime `λ₊ ≤ 1/2 ≤ λ₋`.
pub fn build_hfhe_milp(
    sm: &ScenarioMatrix,
    lambda_plus: f64,
    lambda_minus: f64,
    big_m: f64,
) -> Result<MilpProblem> {
    if !(lambda_plus <= 0.5 && lambda_minus >= 0.5)
        || !(0.0..=1.0).contains(&lambda_plus)
        || !(0.0..=1.0).contains(&lambda_minus)
    {
        return Err(Error::MilpRegime {
            lambda_plus,
            lambda_minus,
        });
    }
    if !(big_m > 0.0) || !big_m.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "big-M must be positive, got {big_m}"
        )));
    }
    let n = sm.n_assets();
    let t_len = sm.n_scenarios();
    let layout = MilpLayout::new(n, t_len);
    let nv = layout.n_vars();
    let inv_t = 1.0 / t_len as f64;
    let mu = sm.mean_returns();
    let m = big_m;

    let mut lp = LpProblem::new(nv);
    for (name, r) in [
        ("x", &layout.x),
        ("d_plus", &layout.d_plus),
        ("d_minus", &layout.d_minus),
        ("z_plus", &layout.z_plus),
        ("z_minus", &layout.z_minus),
        ("y_bar", &layout.y_bar),
        ("y_tilde", &layout.y_tilde),
        ("w", &layout.w),
    ] {
        lp.add_block(name, r.clone());
    }
    for k in layout.x.clone() {
        lp.objective[k] = -mu[k];
    }
    for j in layout.z_plus.clone() {
        lp.objective[j] = (1.0 - 2.0 * lambda_plus) * inv_t;
        lp.lower[j] = None;
    }
    for j in layout.z_minus.clone() {
        lp.objective[j] = (2.0 * lambda_minus - 1.0) * inv_t;
        lp.lower[j] = None;
    }
    for j in layout.y_bar.start..layout.w.end {
        lp.upper[j] = Some(1.0);
    }

    // `coef·(d_t − mean(d))` added into `row` for the block starting at `base`.
    let add_dev = |row: &mut [f64], base: usize, t: usize, coef: f64| {
        for s in 0..t_len {
            row[base + s] -= coef * inv_t;
        }
        row[base + t] += coef;
    };

    for t in 0..t_len {
        let dp = layout.d_plus.start;
        let dm = layout.d_minus.start;
        let zp = layout.z_plus.start + t;
        let zm = layout.z_minus.start + t;
        let yb = layout.y_bar.start + t;
        let yt = layout.y_tilde.start + t;
        let w = layout.w.start + t;

        // −z⁺ − (d⁺_t − mean d⁺) ≤ 0 and −z⁺ + (d⁺_t − mean d⁺) ≤ 0.
        for sign in [-1.0, 1.0] {
            let mut row = vec![0.0; nv];
            row[zp] = -1.0;
            add_dev(&mut row, dp, t, sign);
            lp.add_le(row, 0.0);
        }

        // Loss branch ȳ: z⁻ ≤ M(1−ȳ), −z⁻ − dev ≤ M(1−ȳ).
        let mut row = vec![0.0; nv];
        row[zm] = 1.0;
        row[yb] = m;
        lp.add_le(row, m);
        let mut row = vec![0.0; nv];
        row[zm] = -1.0;
        add_dev(&mut row, dm, t, -1.0);
        row[yb] = m;
        lp.add_le(row, m);

        // Loss branch ỹ: z⁻ ≤ M(1−ỹ), −z⁻ + dev ≤ M(1−ỹ).
        let mut row = vec![0.0; nv];
        row[zm] = 1.0;
        row[yt] = m;
        lp.add_le(row, m);
        let mut row = vec![0.0; nv];
        row[zm] = -1.0;
        add_dev(&mut row, dm, t, 1.0);
        row[yt] = m;
        lp.add_le(row, m);

        // ȳ + ỹ = 1.
        let mut row = vec![0.0; nv];
        row[yb] = 1.0;
        row[yt] = 1.0;
        lp.add_eq(row, 1.0);

        // d⁺ − d⁻ − Σ x_k r_kt = 0.
        let mut row = vec![0.0; nv];
        row[dp + t] = 1.0;
        row[dm + t] = -1.0;
        for (k, r) in sm.row(t).iter().enumerate() {
            row[layout.x.start + k] = -r;
        }
        lp.add_eq(row, 0.0);

        // d⁺ ≤ M w, d⁻ ≤ M (1 − w).
        let mut row = vec![0.0; nv];
        row[dp + t] = 1.0;
        row[w] = -m;
        lp.add_le(row, 0.0);
        let mut row = vec![0.0; nv];
        row[dm + t] = 1.0;
        row[w] = m;
        lp.add_le(row, m);
    }

    let mut budget = vec![0.0; nv];
    for k in layout.x.clone() {
        budget[k] = 1.0;
    }
    lp.add_eq(budget, 1.0);

    let binaries = (layout.y_bar.start..layout.w.end).collect();
    let branch_groups = vec![
        layout.w.clone(),
        layout.y_bar.clone(),
        layout.y_tilde.clone(),
    ];
    Ok(MilpProblem {
        lp,
        binaries,
        branch_groups,
        layout,
        big_m,
        lambda_plus,
        lambda_minus,
        scenarios: sm.clone(),
    })
}

/// Gain/loss split `d⁺_t = max(R_t, 0)`, `d⁻_t = max(−R_t, 0)` of a portfolio.
pub fn split_returns(sm: &ScenarioMatrix, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let r = returns_unchecked(sm, x);
    let d_plus = r.iter().map(|v| v.max(0.0)).collect();
    let d_minus = r.iter().map(|v| (-v).max(0.0)).collect();
    (d_plus, d_minus)
}

/// Largest violation of the split constraints: balance
/// `d⁺ − d⁻ = R(x)`, complementarity `d⁺·d⁻ = 0` and `d^± ≥ 0`.
pub fn split_violation(sm: &ScenarioMatrix, x: &[f64], d_plus: &[f64], d_minus: &[f64]) -> f64 {
    let r = returns_unchecked(sm, x);
    let mut worst = 0.0_f64;
    for t in 0..r.len() {
        worst = worst
            .max((d_plus[t] - d_minus[t] - r[t]).abs())
            .max((d_plus[t] * d_minus[t]).abs())
            .max(-d_plus[t])
            .max(-d_minus[t]);
    }
    worst
}

/// HF/HE value written in terms of the split variables.
pub fn hfhe_of_split(
    sm: &ScenarioMatrix,
    x: &[f64],
    d_plus: &[f64],
    d_minus: &[f64],
    lambda_plus: f64,
    lambda_minus: f64,
) -> f64 {
    let inv_t = 1.0 / d_plus.len() as f64;
    let mu: f64 = sm.mean_returns().iter().zip(x).map(|(m, w)| m * w).sum();
    let mean_plus = d_plus.iter().sum::<f64>() * inv_t;
    let mean_minus = d_minus.iter().sum::<f64>() * inv_t;
    let dev_plus: f64 = d_plus.iter().map(|d| (d - mean_plus).abs()).sum::<f64>() * inv_t;
    let dev_minus: f64 = d_minus.iter().map(|d| (d - mean_minus).abs()).sum::<f64>() * inv_t;
    // Y₋ = −d⁻, so E|Y₋ − μ₋| is the same deviation.
    mu + (2.0 * lambda_plus - 1.0) * dev_plus + (2.0 * lambda_minus - 1.0) * dev_minus
}

/// Integer-feasible point of `milp` whose `x`-block is `x`; its objective is
/// `−H(x)`.
pub fn milp_point_from_weights(milp: &MilpProblem, x: &[f64]) -> Vec<f64> {
    let l = &milp.layout;
    let t_len = l.d_plus.len();
    let inv_t = 1.0 / t_len as f64;
    let (d_plus, d_minus) = split_returns(&milp.scenarios, x);
    let mean_plus = d_plus.iter().sum::<f64>() * inv_t;
    let mean_minus = d_minus.iter().sum::<f64>() * inv_t;
    let mut v = vec![0.0; l.n_vars()];
    v[l.x.clone()].copy_from_slice(x);
    for t in 0..t_len {
        let dev_plus = d_plus[t] - mean_plus;
        let dev_minus = d_minus[t] - mean_minus;
        v[l.d_plus.start + t] = d_plus[t];
        v[l.d_minus.start + t] = d_minus[t];
        v[l.z_plus.start + t] = dev_plus.abs();
        v[l.z_minus.start + t] = -dev_minus.abs();
        let bar = if dev_minus >= 0.0 { 1.0 } else { 0.0 };
        v[l.y_bar.start + t] = bar;
        v[l.y_tilde.start + t] = 1.0 - bar;
        v[l.w.start + t] = if d_minus[t] > 0.0 { 0.0 } else { 1.0 };
    }
    v
}

#[derive(Debug)]
struct Node {
    bound: f64,
    id: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: the lowest bound pops first, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
    key: Vec<u8>,
}

fn binary_key(milp: &MilpProblem, values: &[f64]) -> Vec<u8> {
    milp.binaries
        .iter()
        .map(|&j| u8::from(values[j] > 0.5))
        .collect()
}

fn pick_branch(milp: &MilpProblem, values: &[f64]) -> Option<usize> {
    for group in &milp.branch_groups {
        let mut best: Option<(usize, f64)> = None;
        for j in group.clone() {
            let frac = (values[j] - values[j].round()).abs();
            if frac > INTEGRALITY_TOL && best.is_none_or(|(_, b)| frac > b + 1e-12) {
                best = Some((j, frac));
            }
        }
        if let Some((j, _)) = best {
            return Some(j);
        }
    }
    None
}

fn offer(incumbent: &mut Option<Incumbent>, milp: &MilpProblem, objective: f64, values: Vec<f64>) {
    let key = binary_key(milp, &values);
    let better = match incumbent {
        None => true,
        Some(inc) => {
            objective < inc.objective - 1e-12
                || (objective <= inc.objective + 1e-12 && key < inc.key)
        }
    };
    if better {
        *incumbent = Some(Incumbent {
            objective,
            values,
            key,
        });
    }
}

/// Best-first branch-and-bound over the binaries of `milp`.
pub fn solve_milp(milp: &MilpProblem) -> Result<SolveReport> {
    solve_milp_with(milp, &MilpOptions::default())
}

pub fn solve_milp_with(milp: &MilpProblem, opts: &MilpOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let n = milp.layout.x.len();
    let mut incumbent: Option<Incumbent> = None;

    if opts.seed_incumbent {
        let mut candidates: Vec<Vec<f64>> = (0..n)
            .map(|k| PortfolioWeights::vertex(n, k).into_inner())
            .collect();
        candidates.push(ew(n)?.into_inner());
        for x in candidates {
            let v = milp_point_from_weights(milp, &x);
            let obj = milp.lp.objective_at(&v);
            offer(&mut incumbent, milp, obj, v);
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut iterations = 0;
    let mut hit_limit = false;
    let mut node_lp = milp.lp.clone();

    while let Some(node) = heap.pop() {
        if let Some(inc) = &incumbent {
            if node.bound >= inc.objective - PRUNE_TOL {
                continue;
            }
        }
        if nodes >= opts.node_limit {
            hit_limit = true;
            break;
        }
        nodes += 1;

        node_lp.lower.clone_from(&milp.lp.lower);
        node_lp.upper.clone_from(&milp.lp.upper);
        for &(j, v) in &node.fixings {
            node_lp.lower[j] = Some(v);
            node_lp.upper[j] = Some(v);
        }
        let sol = solve_lp(&node_lp)?;
        iterations += sol.iterations;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(Error::SolverFailed("unbounded MILP relaxation".into()))
            }
            LpStatus::IterationLimit => {
                return Err(Error::SolverFailed("relaxation hit the pivot limit".into()))
            }
        }
        if let Some(inc) = &incumbent {
            if sol.objective >= inc.objective - PRUNE_TOL {
                continue;
            }
        }
        match pick_branch(milp, &sol.values) {
            None => {
                let mut values = sol.values;
                for &j in &milp.binaries {
                    values[j] = values[j].round();
                }
                offer(&mut incumbent, milp, sol.objective, values);
            }
            Some(j) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node {
                        bound: sol.objective,
                        id: next_id,
                        fixings,
                    });
                    next_id += 1;
                }
            }
        }
    }

    let Some(inc) = incumbent else {
        return Ok(SolveReport {
            status: SolveStatus::Infeasible,
            weights: ew(n)?,
            objective: f64::INFINITY,
            nodes,
            starts: 0,
            iterations,
            elapsed: start.elapsed(),
        });
    };
    let weights = PortfolioWeights::from_solver(inc.values[milp.layout.x.clone()].to_vec())?;
    Ok(SolveReport {
        status: if hit_limit {
            SolveStatus::IterationLimit
        } else {
            SolveStatus::Optimal
        },
        weights,
        objective: inc.objective,
        nodes,
        starts: 0,
        iterations,
        elapsed: start.elapsed(),
    })
}

/// Builds and solves the HF/HE MILP with the default big-M.
pub fn solve_hfhe_milp(
    sm: &ScenarioMatrix,
    lambda_plus: f64,
    lambda_minus: f64,
) -> Result<SolveReport> {
    let milp = build_hfhe_milp(sm, lambda_plus, lambda_minus, choose_big_m(sm))?;
    solve_milp(&milp)
}
