//! Multi-start pairwise-exchange local search over the simplex (maximization).
//!
//! Starting points are the `n` vertices, the equal-weight portfolio and
//! Dirichlet-uniform draws from a seeded ChaCha stream. From each start the
//! search moves `min(δ, x_i)` of weight from asset `i` to asset `j` whenever
//! that strictly improves the objective until no move helps, then halves `δ`
//! from 0.25 down to 1e-6. The best local optimum wins; ties go to the lower
//! start index.
//!
//! Up to [`FULL_SWEEP_MAX_N`] assets every ordered pair is tried in index
//! order. Beyond that a full sweep costs `O(n²T)` per pass, so a model with
//! a gradient ranks pairs by the predicted gain `g_j − g_i` and tries only
//! the best [`SCREENED_PAIRS`]`·n` of them per pass. Every start then stops
//! after [`COARSE_LEVELS`] step sizes and only the [`REFINE_TOP`] best are
//! refined to the smallest step.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::data_io::ScenarioMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::objectives::{
    hfhe_of_returns, hfhe_return_gradient, mean_mad_of_returns, mean_mad_return_gradient,
    pt_of_returns, pt_return_gradient, PortfolioWeights, PtParams,
};

use super::{SolveReport, SolveStatus};

const DELTA_START: f64 = 0.25;
const DELTA_MIN: f64 = 1e-6;
const IMPROVE_TOL: f64 = 1e-13;
const RANDOM_STARTS: usize = 32;
/// Largest universe searched with exhaustive pair sweeps.
pub const FULL_SWEEP_MAX_N: usize = 12;
/// Screened candidates per asset for larger universes.
pub const SCREENED_PAIRS: usize = 1;
/// Step sizes every screened start descends through.
pub const COARSE_LEVELS: i32 = 4;
/// Screened starts refined down to the smallest step.
pub const REFINE_TOP: usize = 4;
/// Ranked passes per step size in screened mode.
pub const LEVEL_PASSES: usize = 16;

/// Objective with cheap evaluation of a single weight transfer.
pub trait LocalModel: Sync {
    type State: Clone + Send;

    fn dim(&self) -> usize;

    fn init(&self, x: &[f64]) -> Self::State;

    fn value(&self, state: &Self::State) -> f64;

    /// Objective after moving `amount` from `from` to `to`, using `scratch`
    /// as workspace; `state` is left untouched.
    fn trial(
        &self,
        state: &Self::State,
        from: usize,
        to: usize,
        amount: f64,
        scratch: &mut Self::State,
    ) -> f64;

    fn commit(&self, state: &mut Self::State, from: usize, to: usize, amount: f64);

    /// Writes `∂f/∂x_k` into `out`; returns false when unavailable.
    fn gradient(&self, _state: &Self::State, _out: &mut [f64]) -> bool {
        false
    }
}

type ReturnsFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type ReturnsGradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Objective that depends on `x` only through the portfolio return vector;
/// a transfer updates that vector in `O(T)`.
pub struct ReturnsModel {
    n_assets: usize,
    n_scenarios: usize,
    columns: Vec<f64>,
    eval: Box<ReturnsFn>,
    grad: Option<Box<ReturnsGradFn>>,
}

impl ReturnsModel {
    pub fn new(sm: &ScenarioMatrix, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            n_assets: sm.n_assets(),
            n_scenarios: sm.n_scenarios(),
            columns: sm.columns_flat(),
            eval: Box::new(eval),
            grad: None,
        }
    }

    /// Adds the gradient of the objective with respect to the scenario
    /// returns, which enables pair screening.
    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Box::new(grad));
        self
    }

    fn column(&self, k: usize) -> &[f64] {
        &self.columns[k * self.n_scenarios..(k + 1) * self.n_scenarios]
    }
}

/// HF/HE functional of the portfolio return.
pub struct HfheModel;

impl HfheModel {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(sm: &ScenarioMatrix, lambda_plus: f64, lambda_minus: f64) -> ReturnsModel {
        ReturnsModel::new(sm, move |r| hfhe_of_returns(r, lambda_plus, lambda_minus))
            .with_gradient(move |r, g| hfhe_return_gradient(r, lambda_plus, lambda_minus, g))
    }
}

/// Prospect-theory value of the portfolio return.
pub struct PtModel;

impl PtModel {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(sm: &ScenarioMatrix, pt: PtParams) -> ReturnsModel {
        ReturnsModel::new(sm, move |r| pt_of_returns(r, &pt))
            .with_gradient(move |r, g| pt_return_gradient(r, &pt, g))
    }

    /// `μ(x) − c·MAD(x)`, the negated Mean-MAD scalarization.
    pub fn mean_mad(sm: &ScenarioMatrix, mad_weight: f64) -> ReturnsModel {
        ReturnsModel::new(sm, move |r| -mean_mad_of_returns(r, mad_weight)).with_gradient(
            move |r, g| {
                mean_mad_return_gradient(r, mad_weight, g);
                g.iter_mut().for_each(|v| *v = -*v);
            },
        )
    }
}

impl LocalModel for ReturnsModel {
    type State = Vec<f64>;

    fn dim(&self) -> usize {
        self.n_assets
    }

    fn init(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n_scenarios];
        for (k, &w) in x.iter().enumerate() {
            if w != 0.0 {
                for (rt, c) in r.iter_mut().zip(self.column(k)) {
                    *rt += w * c;
                }
            }
        }
        r
    }

    fn value(&self, state: &Vec<f64>) -> f64 {
        (self.eval)(state)
    }

    fn trial(
        &self,
        state: &Vec<f64>,
        from: usize,
        to: usize,
        amount: f64,
        scratch: &mut Vec<f64>,
    ) -> f64 {
        scratch.clear();
        scratch.extend(
            state
                .iter()
                .zip(self.column(from).iter().zip(self.column(to)))
                .map(|(r, (cf, ct))| r + amount * (ct - cf)),
        );
        (self.eval)(scratch)
    }

    fn commit(&self, state: &mut Vec<f64>, from: usize, to: usize, amount: f64) {
        let (n_s, cols) = (self.n_scenarios, &self.columns);
        for t in 0..n_s {
            state[t] += amount * (cols[to * n_s + t] - cols[from * n_s + t]);
        }
    }

    fn gradient(&self, state: &Vec<f64>, out: &mut [f64]) -> bool {
        let Some(grad) = &self.grad else {
            return false;
        };
        let mut by_return = vec![0.0; self.n_scenarios];
        grad(state, &mut by_return);
        for (k, g) in out.iter_mut().enumerate() {
            *g = self
                .column(k)
                .iter()
                .zip(&by_return)
                .map(|(c, d)| c * d)
                .sum();
        }
        true
    }
}

/// Arbitrary objective evaluated directly on the weight vector.
pub struct PointModel<F> {
    n: usize,
    eval: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> PointModel<F> {
    pub fn new(n: usize, eval: F) -> Self {
        Self { n, eval }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> LocalModel for PointModel<F> {
    type State = Vec<f64>;

    fn dim(&self) -> usize {
        self.n
    }

    fn init(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn value(&self, state: &Vec<f64>) -> f64 {
        (self.eval)(state)
    }

    fn trial(
        &self,
        state: &Vec<f64>,
        from: usize,
        to: usize,
        amount: f64,
        scratch: &mut Vec<f64>,
    ) -> f64 {
        scratch.clone_from(state);
        scratch[from] -= amount;
        scratch[to] += amount;
        (self.eval)(scratch)
    }

    fn commit(&self, state: &mut Vec<f64>, from: usize, to: usize, amount: f64) {
        state[from] -= amount;
        state[to] += amount;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultistartOptions {
    pub starts: usize,
    pub seed: u64,
    pub execution: Execution,
}

/// `n + 1 + 32`: every vertex, the equal-weight portfolio and 32 random draws.
pub fn default_starts(n: usize) -> usize {
    n + 1 + RANDOM_STARTS
}

/// The first `starts` points of the sequence vertices, EW, random draws.
pub fn start_points(n: usize, starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..starts)
        .map(|s| {
            if s < n {
                PortfolioWeights::vertex(n, s).into_inner()
            } else if s == n {
                vec![1.0 / n as f64; n]
            } else {
                let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = draws.iter().sum();
                draws.into_iter().map(|e: f64| e / total).collect()
            }
        })
        .collect()
}

struct LocalOptimum {
    x: Vec<f64>,
    value: f64,
}

fn apply_move<M: LocalModel>(
    model: &M,
    x: &mut [f64],
    state: &mut M::State,
    from: usize,
    to: usize,
    amount: f64,
) {
    model.commit(state, from, to, amount);
    if amount >= x[from] {
        x[from] = 0.0;
    } else {
        x[from] -= amount;
    }
    x[to] += amount;
}

/// Every ordered pair at each step size, until no pair improves.
fn sweep_search<M: LocalModel>(model: &M, start: Vec<f64>) -> LocalOptimum {
    let n = model.dim();
    let mut x = start;
    let mut state = model.init(&x);
    let mut scratch = state.clone();
    let mut value = model.value(&state);
    let mut delta = DELTA_START;
    while delta >= DELTA_MIN {
        loop {
            let mut improved = false;
            for from in 0..n {
                for to in 0..n {
                    if to == from || x[from] <= 0.0 {
                        continue;
                    }
                    let amount = delta.min(x[from]);
                    let v = model.trial(&state, from, to, amount, &mut scratch);
                    if v > value + IMPROVE_TOL {
                        apply_move(model, &mut x, &mut state, from, to, amount);
                        value = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        // Resynchronize the incremental state with x.
        state = model.init(&x);
        value = model.value(&state);
        delta *= 0.5;
    }
    LocalOptimum { x, value }
}

/// Gradient-ranked pairs at each step size from `delta_from` down to
/// `delta_to`, with at most [`LEVEL_PASSES`] ranked passes per step size.
fn screened_search<M: LocalModel>(
    model: &M,
    mut x: Vec<f64>,
    delta_from: f64,
    delta_to: f64,
) -> LocalOptimum {
    let n = model.dim();
    let mut state = model.init(&x);
    let mut scratch = state.clone();
    let mut value = model.value(&state);
    let mut grad = vec![0.0; n];
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    let keep_max = SCREENED_PAIRS * n;
    let mut delta = delta_from;
    while delta >= delta_to {
        for _ in 0..LEVEL_PASSES {
            model.gradient(&state, &mut grad);
            candidates.clear();
            for from in (0..n).filter(|&i| x[i] > 0.0) {
                for to in (0..n).filter(|&j| j != from) {
                    let gain = grad[to] - grad[from];
                    if gain > 0.0 {
                        candidates.push((gain, from, to));
                    }
                }
            }
            let keep = keep_max.min(candidates.len());
            let order = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
                b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2)))
            };
            if keep > 0 && keep < candidates.len() {
                candidates.select_nth_unstable_by(keep - 1, order);
            }
            candidates.truncate(keep);
            candidates.sort_unstable_by(order);
            let mut moved = false;
            for &(_, from, to) in &candidates {
                while x[from] > 0.0 {
                    let amount = delta.min(x[from]);
                    let v = model.trial(&state, from, to, amount, &mut scratch);
                    if v > value + IMPROVE_TOL {
                        apply_move(model, &mut x, &mut state, from, to, amount);
                        value = v;
                        moved = true;
                    } else {
                        break;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        state = model.init(&x);
        value = model.value(&state);
        delta *= 0.5;
    }
    LocalOptimum { x, value }
}

/// Every start descends through the coarse step sizes; the best
/// [`REFINE_TOP`] continue down to the smallest step.
fn screened_multistart<M: LocalModel>(
    model: &M,
    points: &[Vec<f64>],
    execution: Execution,
) -> Vec<LocalOptimum> {
    let cut = DELTA_START * 0.5f64.powi(COARSE_LEVELS - 1);
    let mut optima = map_indexed(execution, points.len(), |s| {
        screened_search(model, points[s].clone(), DELTA_START, cut)
    });
    let mut order: Vec<usize> = (0..optima.len()).collect();
    order.sort_by(|&a, &b| optima[b].value.total_cmp(&optima[a].value).then(a.cmp(&b)));
    order.truncate(REFINE_TOP);
    let refined = map_indexed(execution, order.len(), |i| {
        screened_search(model, optima[order[i]].x.clone(), cut * 0.5, DELTA_MIN)
    });
    for (i, opt) in refined.into_iter().enumerate() {
        optima[order[i]] = opt;
    }
    optima
}

/// Runs `starts` local searches with the given seed and default execution.
pub fn multistart<M: LocalModel>(model: &M, starts: usize, seed: u64) -> Result<SolveReport> {
    multistart_with(
        model,
        &MultistartOptions {
            starts,
            seed,
            execution: Execution::default(),
        },
    )
}

pub fn multistart_with<M: LocalModel>(model: &M, opts: &MultistartOptions) -> Result<SolveReport> {
    let start_time = Instant::now();
    let n = model.dim();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "multistart needs at least one asset".into(),
        ));
    }
    if opts.starts == 0 {
        return Err(Error::InvalidParameter(
            "multistart needs at least one start".into(),
        ));
    }
    let points = start_points(n, opts.starts, opts.seed);
    let mut grad = vec![0.0; n];
    let screened = n > FULL_SWEEP_MAX_N && model.gradient(&model.init(&points[0]), &mut grad);
    let optima = if screened {
        screened_multistart(model, &points, opts.execution)
    } else {
        map_indexed(opts.execution, points.len(), |s| {
            sweep_search(model, points[s].clone())
        })
    };
    let mut best = 0;
    for (s, opt) in optima.iter().enumerate() {
        if opt.value > optima[best].value {
            best = s;
        }
    }
    let LocalOptimum { x, value } = optima.into_iter().nth(best).expect("at least one start");
    Ok(SolveReport {
        status: SolveStatus::Optimal,
        weights: PortfolioWeights::from_solver(x)?,
        objective: value,
        nodes: 0,
        starts: opts.starts,
        iterations: 0,
        elapsed: start_time.elapsed(),
    })
}
