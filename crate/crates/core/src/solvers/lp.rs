//! Dense two-phase primal simplex with native upper bounds.
//!
//! Nonbasic columns sit at their lower (zero) or upper bound; an entering
//! column that reaches its own bound first just flips. Pricing is Dantzig's
//! largest reduced-cost violation with lowest-index ties, and ratio ties go to
//! the largest pivot element. After a run of degenerate steps the solver
//! switches to Bland's rule (lowest-index entering column, lowest-index
//! leaving variable among ties) until the objective strictly improves again,
//! which rules out cycling.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const DEGENERATE_RUN: usize = 25;

/// Linear program `min cᵀv` subject to `A_eq v = b_eq`, `A_le v ≤ b_le` and
/// per-variable bounds (`None` meaning unbounded on that side).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_le: Vec<Vec<f64>>,
    pub b_le: Vec<f64>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    /// Named index ranges, e.g. `("x", 0..n)`.
    pub blocks: Vec<(String, Range<usize>)>,
}

impl LpProblem {
    /// `n_vars` nonnegative variables with zero cost and no rows.
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            a_le: Vec::new(),
            b_le: Vec::new(),
            lower: vec![Some(0.0); n_vars],
            upper: vec![None; n_vars],
            blocks: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_block(&mut self, name: &str, range: Range<usize>) {
        self.blocks.push((name.to_owned(), range));
    }

    pub fn block(&self, name: &str) -> Option<Range<usize>> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r.clone())
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_le.push(row);
        self.b_le.push(rhs);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::MalformedLp("bound vectors differ in length".into()));
        }
        if self.a_eq.len() != self.b_eq.len() || self.a_le.len() != self.b_le.len() {
            return Err(Error::MalformedLp(
                "row count differs from rhs count".into(),
            ));
        }
        if let Some(row) = self.a_eq.iter().chain(&self.a_le).find(|r| r.len() != n) {
            return Err(Error::MalformedLp(format!(
                "row of length {} for {n} variables",
                row.len()
            )));
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (self.lower[j], self.upper[j]) {
                if l > u {
                    return Err(Error::MalformedLp(format!(
                        "variable {j}: lower {l} > upper {u}"
                    )));
                }
            }
            let finite = |b: Option<f64>| b.is_none_or(f64::is_finite);
            if !finite(self.lower[j]) || !finite(self.upper[j]) {
                return Err(Error::MalformedLp(format!(
                    "variable {j}: non-finite bound"
                )));
            }
        }
        let all_finite = self
            .objective
            .iter()
            .chain(self.b_eq.iter())
            .chain(self.b_le.iter())
            .chain(self.a_eq.iter().flatten())
            .chain(self.a_le.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::MalformedLp("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Maximum violation of rows and bounds at `v`.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let mut worst = 0.0_f64;
        for (row, b) in self.a_eq.iter().zip(&self.b_eq) {
            worst = worst.max((dot(row) - b).abs());
        }
        for (row, b) in self.a_le.iter().zip(&self.b_le) {
            worst = worst.max(dot(row) - b);
        }
        for (j, &x) in v.iter().enumerate() {
            if let Some(l) = self.lower[j] {
                worst = worst.max(l - x);
            }
            if let Some(u) = self.upper[j] {
                worst = worst.max(x - u);
            }
        }
        worst
    }

    pub fn objective_at(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; meaningful only when `status` is `Optimal`.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Row multipliers, equality rows first, then inequality rows, such that
    /// `c − Aᵀπ` are the reduced costs. Inequality rows have `π ≤ 0` at an
    /// optimum. Empty unless `status` is `Optimal`.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// How an original variable maps onto nonnegative tableau columns:
/// `v = offset + Σ coef·y_col`.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    terms: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Le,
    Eq,
}

/// The problem over nonnegative, possibly upper-bounded columns.
struct Standard {
    maps: Vec<VarMap>,
    n_cols: usize,
    col_cost: Vec<f64>,
    col_upper: Vec<f64>,
    /// `(coefs, kind, rhs, original row index)`.
    rows: Vec<(Vec<f64>, RowKind, f64, usize)>,
}

impl Standard {
    /// `None` when a row left empty by fixed variables is violated.
    fn build(lp: &LpProblem) -> Option<Self> {
        let mut maps = Vec::with_capacity(lp.n_vars());
        let mut n_cols = 0;
        let mut col_upper = Vec::new();
        for j in 0..lp.n_vars() {
            let map = match (lp.lower[j], lp.upper[j]) {
                (Some(l), Some(u)) if u - l <= 0.0 => VarMap {
                    offset: l,
                    terms: vec![],
                },
                (Some(l), upper) => {
                    col_upper.push(upper.map_or(f64::INFINITY, |u| u - l));
                    VarMap {
                        offset: l,
                        terms: vec![(n_cols, 1.0)],
                    }
                }
                (None, Some(u)) => {
                    col_upper.push(f64::INFINITY);
                    VarMap {
                        offset: u,
                        terms: vec![(n_cols, -1.0)],
                    }
                }
                (None, None) => {
                    col_upper.extend([f64::INFINITY; 2]);
                    VarMap {
                        offset: 0.0,
                        terms: vec![(n_cols, 1.0), (n_cols + 1, -1.0)],
                    }
                }
            };
            n_cols += map.terms.len();
            maps.push(map);
        }

        let mut col_cost = vec![0.0; n_cols];
        for (j, map) in maps.iter().enumerate() {
            for &(c, s) in &map.terms {
                col_cost[c] += lp.objective[j] * s;
            }
        }

        let mut rows = Vec::new();
        let originals = lp
            .a_eq
            .iter()
            .zip(&lp.b_eq)
            .map(|r| (r, RowKind::Eq))
            .chain(lp.a_le.iter().zip(&lp.b_le).map(|r| (r, RowKind::Le)));
        for (origin, ((row, &b), kind)) in originals.enumerate() {
            let mut coefs = vec![0.0; n_cols];
            let mut rhs = b;
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                rhs -= a * maps[j].offset;
                for &(c, s) in &maps[j].terms {
                    coefs[c] += a * s;
                }
            }
            if coefs.iter().all(|&a| a == 0.0) {
                let violated = match kind {
                    RowKind::Eq => rhs.abs() > FEAS_EPS,
                    RowKind::Le => rhs < -FEAS_EPS,
                };
                if violated {
                    return None;
                }
                continue;
            }
            rows.push((coefs, kind, rhs, origin));
        }
        Some(Self {
            maps,
            n_cols,
            col_cost,
            col_upper,
            rows,
        })
    }

    /// Column-space image of a feasible point.
    fn image(&self, v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        for (j, map) in self.maps.iter().enumerate() {
            match map.terms.as_slice() {
                [(c, s)] => y[*c] = (s * (v[j] - map.offset)).max(0.0),
                [(c, _), (c2, _)] => {
                    y[*c] = v[j].max(0.0);
                    y[*c2] = (-v[j]).max(0.0);
                }
                _ => {}
            }
        }
        y
    }
}

struct Tableau {
    /// `m x (cols + 1)`; the last column holds the basic variable values.
    rows: Vec<Vec<f64>>,
    /// Reduced costs; the last entry is unused.
    cost: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    cols: usize,
    art_start: usize,
    /// Per row: the slack or artificial column that starts as its identity,
    /// and the row's sign normalization.
    identity: Vec<(usize, f64)>,
    iterations: usize,
    max_iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn new(std: &Standard) -> Self {
        let n_cols = std.n_cols;
        let m = std.rows.len();
        let n_slack = std.rows.iter().filter(|r| r.1 == RowKind::Le).count();
        let n_art = std
            .rows
            .iter()
            .filter(|(_, kind, rhs, _)| *kind == RowKind::Eq || *rhs < 0.0)
            .count();
        let art_start = n_cols + n_slack;
        let cols = art_start + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut identity = Vec::with_capacity(m);
        let mut next_slack = n_cols;
        let mut next_art = art_start;
        for (coefs, kind, rhs, _) in &std.rows {
            let mut row = vec![0.0; cols + 1];
            let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
            for (c, a) in coefs.iter().enumerate() {
                row[c] = sign * a;
            }
            row[cols] = sign * rhs;
            match kind {
                RowKind::Le => {
                    row[next_slack] = sign;
                    identity.push((next_slack, sign));
                    if sign > 0.0 {
                        basis.push(next_slack);
                    } else {
                        row[next_art] = 1.0;
                        basis.push(next_art);
                        next_art += 1;
                    }
                    next_slack += 1;
                }
                RowKind::Eq => {
                    row[next_art] = 1.0;
                    identity.push((next_art, sign));
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        let mut in_basis = vec![false; cols];
        for &b in &basis {
            in_basis[b] = true;
        }
        let mut upper = vec![f64::INFINITY; cols];
        upper[..n_cols].copy_from_slice(&std.col_upper);
        Self {
            rows,
            cost: vec![0.0; cols + 1],
            basis,
            in_basis,
            upper,
            at_upper: vec![false; cols],
            cols,
            art_start,
            identity,
            iterations: 0,
            max_iterations: 50 * (m + cols).max(100),
        }
    }

    /// Gauss-Jordan pivot on `(r, c)` over every column including values.
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let inv = 1.0 / self.rows[r][c];
        {
            let prow = &mut self.rows[r];
            for v in prow.iter_mut() {
                *v *= inv;
            }
            prow[c] = 1.0;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        let support: Vec<usize> = (0..width).filter(|&j| prow[j] != 0.0).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for &j in &support {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for &j in &support {
                self.cost[j] -= f * prow[j];
            }
            self.cost[c] = 0.0;
        }
        self.rows[r] = prow;
        let leaving = self.basis[r];
        self.in_basis[leaving] = false;
        self.in_basis[c] = true;
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Moves column `c` by `theta` in direction `dir` and makes it basic in
    /// row `r`; the leaving variable rests at its upper bound if `to_upper`.
    fn step(&mut self, r: usize, c: usize, dir: f64, theta: f64, to_upper: bool) {
        let rhs = self.cols;
        let entering_value = if self.at_upper[c] {
            self.upper[c] - theta
        } else {
            theta
        };
        let values: Vec<f64> = self
            .rows
            .iter()
            .map(|row| row[rhs] - dir * theta * row[c])
            .collect();
        let leaving = self.basis[r];
        self.pivot(r, c);
        for (row, v) in self.rows.iter_mut().zip(values) {
            row[rhs] = v;
        }
        self.rows[r][rhs] = entering_value;
        self.at_upper[c] = false;
        self.at_upper[leaving] = to_upper;
    }

    /// Pivots every column of `wanted` into the basis, each replacing a basic
    /// variable outside `wanted`. Succeeds when the resulting basic solution
    /// is within bounds with all artificials at zero.
    fn crash(&mut self, wanted: &[usize]) -> bool {
        let rhs = self.cols;
        let mut is_wanted = vec![false; self.cols];
        for &c in wanted {
            is_wanted[c] = true;
        }
        for &c in wanted {
            if self.in_basis[c] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c].abs();
                if !is_wanted[self.basis[i]] && a > best.map_or(PIVOT_EPS, |(_, b)| b) {
                    best = Some((i, a));
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            self.pivot(r, c);
        }
        let scale = 1.0
            + self
                .rows
                .iter()
                .map(|r| r[rhs].abs())
                .fold(0.0_f64, f64::max);
        let tol = FEAS_EPS * scale;
        let ok = self.rows.iter().zip(&self.basis).all(|(row, &b)| {
            let v = row[rhs];
            v >= -tol && v <= self.upper[b] + tol && (b < self.art_start || v <= tol)
        });
        if ok {
            for (row, &b) in self.rows.iter_mut().zip(&self.basis) {
                row[rhs] = row[rhs].clamp(0.0, self.upper[b]);
            }
        }
        ok
    }

    /// Runs primal simplex on the current cost row over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> PhaseOutcome {
        let rhs = self.cols;
        let mut bland = false;
        let mut degenerate_run = 0;
        loop {
            if self.iterations >= self.max_iterations {
                return PhaseOutcome::IterationLimit;
            }
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..allowed {
                if self.in_basis[j] {
                    continue;
                }
                let d = self.cost[j];
                let violation = if self.at_upper[j] { d } else { -d };
                if violation > COST_EPS {
                    if bland {
                        entering = Some((j, violation));
                        break;
                    }
                    if entering.is_none_or(|(_, v)| violation > v) {
                        entering = Some((j, violation));
                    }
                }
            }
            let Some((c, _)) = entering else {
                return PhaseOutcome::Optimal;
            };
            let dir = if self.at_upper[c] { -1.0 } else { 1.0 };

            // Step length at which row i blocks, and whether it blocks at
            // the basic variable's upper bound.
            let limit = |row: &Vec<f64>, b: usize| -> Option<(f64, bool)> {
                let g = dir * row[c];
                if g > PIVOT_EPS {
                    Some((row[rhs].max(0.0) / g, false))
                } else if g < -PIVOT_EPS && self.upper[b].is_finite() {
                    Some(((self.upper[b] - row[rhs]).max(0.0) / -g, true))
                } else {
                    None
                }
            };
            let mut min_ratio = f64::INFINITY;
            for (row, &b) in self.rows.iter().zip(&self.basis) {
                if let Some((t, _)) = limit(row, b) {
                    min_ratio = min_ratio.min(t);
                }
            }
            let flip = self.upper[c];
            if flip.is_infinite() && min_ratio.is_infinite() {
                return PhaseOutcome::Unbounded;
            }
            let theta = min_ratio.min(flip);
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            if flip <= min_ratio {
                for row in &mut self.rows {
                    row[rhs] -= dir * flip * row[c];
                }
                self.at_upper[c] = !self.at_upper[c];
                self.iterations += 1;
                continue;
            }

            // Among ratio ties Bland takes the lowest basic index; otherwise
            // the largest pivot element keeps the tableau well conditioned.
            let mut leave: Option<(usize, bool)> = None;
            for (i, (row, &b)) in self.rows.iter().zip(&self.basis).enumerate() {
                let Some((t, to_upper)) = limit(row, b) else {
                    continue;
                };
                if t > min_ratio + RATIO_TIE {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((l, _)) if bland => b < self.basis[l],
                    Some((l, _)) => {
                        let (a, al) = (row[c].abs(), self.rows[l][c].abs());
                        a > al || (a == al && b < self.basis[l])
                    }
                };
                if better {
                    leave = Some((i, to_upper));
                }
            }
            let Some((r, to_upper)) = leave else {
                return PhaseOutcome::Unbounded;
            };
            self.step(r, c, dir, min_ratio, to_upper);
        }
    }

    /// Column values of the current basic solution.
    fn column_values(&self) -> Vec<f64> {
        let mut y: Vec<f64> = (0..self.cols)
            .map(|j| if self.at_upper[j] { self.upper[j] } else { 0.0 })
            .collect();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            y[b] = row[self.cols];
        }
        y
    }
}

/// Solves `lp` to optimality, or reports infeasibility or unboundedness.
pub fn solve_lp(lp: &LpProblem) -> Result<LpSolution> {
    solve_lp_from(lp, None)
}

/// Like [`solve_lp`], but first tries to crash a basis from the feasible
/// point `start`. Highly degenerate problems whose origin is a poor starting
/// vertex skip phase 1 this way. An unusable start is ignored.
pub fn solve_lp_from(lp: &LpProblem, start: Option<&[f64]>) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    let Some(std) = Standard::build(lp) else {
        return Ok(infeasible(n));
    };
    let start = start.filter(|v| v.len() == n && lp.max_violation(v) <= FEAS_EPS);
    if let Some(v) = start {
        let y = std.image(v);
        let mut tab = Tableau::new(&std);
        // Positive structural columns plus the slacks of inactive rows.
        let mut wanted: Vec<usize> = (0..std.n_cols).filter(|&c| y[c] > FEAS_EPS).collect();
        for ((coefs, kind, rhs, _), &(id, _)) in std.rows.iter().zip(&tab.identity) {
            if *kind == RowKind::Le {
                let used: f64 = coefs.iter().zip(&y).map(|(a, v)| a * v).sum();
                if rhs - used > FEAS_EPS {
                    wanted.push(id);
                }
            }
        }
        if !wanted.is_empty() && tab.crash(&wanted) {
            return finish(lp, &std, tab);
        }
    }

    let mut tab = Tableau::new(&std);
    let cols = tab.cols;
    let art_start = tab.art_start;
    if cols > art_start {
        // Phase 1: minimize the sum of artificials.
        for i in 0..tab.rows.len() {
            if tab.basis[i] >= art_start {
                for j in 0..=cols {
                    tab.cost[j] -= tab.rows[i][j];
                }
            }
        }
        for j in art_start..cols {
            tab.cost[j] = 0.0;
        }
        match tab.optimize(cols) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::IterationLimit => return Ok(limit(n, tab.iterations)),
            PhaseOutcome::Unbounded => {
                return Err(Error::SolverFailed("phase 1 reported unbounded".into()))
            }
        }
        let infeasibility: f64 = tab
            .rows
            .iter()
            .zip(&tab.basis)
            .filter(|(_, &b)| b >= art_start)
            .map(|(row, _)| row[cols].max(0.0))
            .sum();
        let scale = 1.0 + std.rows.iter().map(|r| r.2.abs()).fold(0.0_f64, f64::max);
        if infeasibility > FEAS_EPS * scale {
            return Ok(LpSolution {
                iterations: tab.iterations,
                ..infeasible(n)
            });
        }
    }
    finish(lp, &std, tab)
}

/// Phase 2 from a feasible basis, then maps the result back.
fn finish(lp: &LpProblem, std: &Standard, mut tab: Tableau) -> Result<LpSolution> {
    let n = lp.n_vars();
    let cols = tab.cols;
    let art_start = tab.art_start;
    // Drive zero-valued artificials out of the basis where possible.
    for r in 0..tab.rows.len() {
        if tab.basis[r] >= art_start {
            let pick = (0..art_start).find(|&j| !tab.in_basis[j] && tab.rows[r][j].abs() > 1e-9);
            if let Some(c) = pick {
                let dir = if tab.at_upper[c] { -1.0 } else { 1.0 };
                tab.step(r, c, dir, 0.0, false);
            }
        }
    }

    tab.cost = vec![0.0; cols + 1];
    tab.cost[..std.n_cols].copy_from_slice(&std.col_cost);
    for r in 0..tab.rows.len() {
        let b = tab.basis[r];
        let cb = if b < std.n_cols { std.col_cost[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..cols {
                tab.cost[j] -= cb * tab.rows[r][j];
            }
        }
    }
    let outcome = tab.optimize(art_start);
    let iterations = tab.iterations;
    match outcome {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                values: vec![0.0; n],
                objective: f64::NEG_INFINITY,
                duals: Vec::new(),
                iterations,
            })
        }
        PhaseOutcome::IterationLimit => return Ok(limit(n, iterations)),
    }

    let y = tab.column_values();
    let values: Vec<f64> = std
        .maps
        .iter()
        .map(|map| map.offset + map.terms.iter().map(|&(c, s)| s * y[c]).sum::<f64>())
        .collect();
    let mut duals = vec![0.0; lp.a_eq.len() + lp.a_le.len()];
    for ((_, kind, _, origin), &(id, sign)) in std.rows.iter().zip(&tab.identity) {
        duals[*origin] = match kind {
            RowKind::Le => -tab.cost[id],
            RowKind::Eq => -sign * tab.cost[id],
        };
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_at(&values),
        values,
        duals,
        iterations,
    })
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        values: vec![0.0; n],
        objective: f64::INFINITY,
        duals: Vec::new(),
        iterations: 0,
    }
}

fn limit(n: usize, iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::IterationLimit,
        values: vec![0.0; n],
        objective: f64::NAN,
        duals: Vec::new(),
        iterations,
    }
}
