//! Two-phase bounded-variable primal simplex on a condensed tableau.
//!
//! Every row `i` gets a logical variable `r_i = b_i − a_i·x` with bounds
//! `[0, ∞)` for inequalities and `[0, 0]` for equalities, so all variables are
//! bounded uniformly. The tableau keeps only the nonbasic columns: entry
//! `(i, j)` is `∂ x_B(i) / ∂ x_N(j)`. Phase 1 minimises the sum of bound
//! violations of the basic variables, phase 2 the true objective. Pricing is
//! Dantzig's rule, switching to Bland's rule after a run of degenerate pivots.

use super::presolve::{presolve, Presolve};
use super::{LinearProgram, LpSolution, LpSolver, LpStatus, SolverLimits};

/// Consecutive degenerate pivots tolerated before Bland's rule kicks in.
const DEGENERATE_RUN: usize = 50;
/// Smallest tableau entry accepted as a pivot.
const PIVOT_TOL: f64 = 1e-9;
/// Pivots must reach this fraction of the largest eligible entry in their column.
const REL_PIVOT_TOL: f64 = 1e-5;
/// Entries below this magnitude are flushed to zero after an update.
const DROP_TOL: f64 = 1e-13;
/// Basic values are recomputed from scratch this often.
const REFRESH_EVERY: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct SimplexSolver {
    limits: SolverLimits,
    presolve: bool,
}

impl Default for SimplexSolver {
    fn default() -> Self {
        Self::new(SolverLimits::default())
    }
}

impl SimplexSolver {
    /// Solver with presolve enabled.
    pub fn new(limits: SolverLimits) -> Self {
        Self { limits, presolve: true }
    }

    /// Runs the simplex on the problem exactly as given.
    pub fn without_presolve(mut self) -> Self {
        self.presolve = false;
        self
    }
}

impl LpSolver for SimplexSolver {
    fn solve(&self, lp: &LinearProgram) -> LpSolution {
        if !self.presolve {
            return Tableau::build(lp, self.limits).run(lp);
        }
        match presolve(lp) {
            Presolve::Infeasible => {
                let x = lp.lower().iter().map(|l| if l.is_finite() { *l } else { 0.0 }).collect::<Vec<_>>();
                LpSolution { status: LpStatus::Infeasible, value: lp.objective_value(&x), x, iterations: 0 }
            }
            Presolve::Reduced(red) => {
                let inner = Tableau::build(&red.lp, self.limits).run(&red.lp);
                let x = red.restore(&inner.x);
                LpSolution { status: inner.status, value: lp.objective_value(&x), x, iterations: inner.iterations }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Feasibility,
    Optimality,
}

struct Tableau {
    limits: SolverLimits,
    rows: usize,
    cols: usize,
    /// Row-major `rows × cols`.
    tab: Vec<f64>,
    /// Constant part of each basic variable's expression.
    rhs: Vec<f64>,
    basis: Vec<usize>,
    nonbasic: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    /// Reduced cost of each nonbasic column for the true objective.
    reduced: Vec<f64>,
    /// Scratch: phase-1 reduced costs.
    scratch: Vec<f64>,
}

struct Step {
    col: usize,
    /// `+1.0` when the entering variable increases.
    dir: f64,
    /// Row leaving the basis, or `None` for a bound flip.
    row: Option<usize>,
    theta: f64,
    /// Value the leaving variable lands on.
    target: f64,
}

enum Ratio {
    Unbounded,
    Step(Step),
}

impl Tableau {
    fn build(lp: &LinearProgram, limits: SolverLimits) -> Self {
        let n = lp.num_vars();
        let ineq = lp.inequalities();
        let eq = lp.equalities();
        let rows = ineq.len() + eq.len();
        let total = n + rows;

        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        lower.extend_from_slice(lp.lower());
        upper.extend_from_slice(lp.upper());
        lower.extend(std::iter::repeat_n(0.0, rows));
        upper.extend(std::iter::repeat_n(f64::INFINITY, ineq.len()));
        upper.extend(std::iter::repeat_n(0.0, eq.len()));

        // Nonbasic structurals start at their finite bound closest to zero.
        let mut value = vec![0.0; total];
        for j in 0..n {
            let (l, u) = (lower[j], upper[j]);
            value[j] = match (l.is_finite(), u.is_finite()) {
                (true, true) => {
                    if l.abs() <= u.abs() {
                        l
                    } else {
                        u
                    }
                }
                (true, false) => l,
                (false, true) => u,
                (false, false) => 0.0,
            };
        }

        let mut tab = vec![0.0; rows * n];
        let mut rhs = Vec::with_capacity(rows);
        for (i, c) in ineq.iter().chain(eq).enumerate() {
            let row = &mut tab[i * n..(i + 1) * n];
            for &(j, a) in &c.terms {
                row[j] -= a;
            }
            rhs.push(c.rhs);
        }

        let mut t = Self {
            limits,
            rows,
            cols: n,
            tab,
            rhs,
            basis: (n..total).collect(),
            nonbasic: (0..n).collect(),
            lower,
            upper,
            reduced: lp.objective().to_vec(),
            value,
            scratch: vec![0.0; n],
        };
        t.refresh_values();
        t
    }

    fn run(mut self, lp: &LinearProgram) -> LpSolution {
        let max_iters = self.limits.max_iters.unwrap_or(50 * (self.rows + self.cols)).max(1);
        let mut iterations = 0;
        let mut degenerate_run = 0;
        let mut phase = Phase::Feasibility;

        let status = loop {
            if iterations > 0 && iterations % REFRESH_EVERY == 0 {
                self.refresh_values();
            }
            if phase == Phase::Feasibility && !self.load_phase1_costs() {
                phase = Phase::Optimality;
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let Some((col, dir)) = self.price(phase, bland) else {
                if phase == Phase::Feasibility {
                    break LpStatus::Infeasible;
                }
                // Confirm optimality on freshly computed values.
                self.refresh_values();
                if self.max_basic_violation() > self.limits.tol_feas {
                    phase = Phase::Feasibility;
                    continue;
                }
                break LpStatus::Optimal;
            };
            if iterations >= max_iters {
                break LpStatus::IterationLimit;
            }
            match self.ratio_test(col, dir, phase, bland) {
                Ratio::Unbounded => {
                    if phase == Phase::Optimality {
                        break LpStatus::Unbounded;
                    }
                    // A phase-1 direction can never be unbounded below zero
                    // infeasibility; treat it as numerical trouble.
                    break LpStatus::Infeasible;
                }
                Ratio::Step(step) => {
                    if step.theta <= 1e-12 {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    self.apply(&step);
                }
            }
            iterations += 1;
        };

        let n = lp.num_vars();
        let x = self.value[..n].to_vec();
        let value = lp.objective_value(&x);
        LpSolution { status, x, value, iterations }
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.tab[i * self.cols + j]
    }

    fn refresh_values(&mut self) {
        for i in 0..self.rows {
            let row = &self.tab[i * self.cols..(i + 1) * self.cols];
            let mut v = self.rhs[i];
            for (a, &var) in row.iter().zip(&self.nonbasic) {
                if *a != 0.0 {
                    v += a * self.value[var];
                }
            }
            self.value[self.basis[i]] = v;
        }
    }

    fn max_basic_violation(&self) -> f64 {
        self.basis
            .iter()
            .map(|&v| (self.lower[v] - self.value[v]).max(self.value[v] - self.upper[v]))
            .fold(0.0, f64::max)
    }

    /// Fills `scratch` with the gradient of the total infeasibility with
    /// respect to each nonbasic column. Returns `false` when the basis is
    /// feasible.
    fn load_phase1_costs(&mut self) -> bool {
        let tol = self.limits.tol_feas;
        self.scratch.iter_mut().for_each(|d| *d = 0.0);
        let mut any = false;
        for i in 0..self.rows {
            let var = self.basis[i];
            let v = self.value[var];
            let sign = if v < self.lower[var] - tol {
                -1.0
            } else if v > self.upper[var] + tol {
                1.0
            } else {
                continue;
            };
            any = true;
            let row = &self.tab[i * self.cols..(i + 1) * self.cols];
            for (d, &a) in self.scratch.iter_mut().zip(row) {
                *d += sign * a;
            }
        }
        any
    }

    /// Picks the entering column and the direction it moves in.
    fn price(&self, phase: Phase, bland: bool) -> Option<(usize, f64)> {
        let tol = self.limits.tol_opt;
        let costs = match phase {
            Phase::Feasibility => &self.scratch,
            Phase::Optimality => &self.reduced,
        };
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, &d) in costs.iter().enumerate() {
            let var = self.nonbasic[j];
            let (l, u, v) = (self.lower[var], self.upper[var], self.value[var]);
            if l == u {
                continue;
            }
            let dir = if d < -tol && v < u {
                1.0
            } else if d > tol && v > l {
                -1.0
            } else {
                continue;
            };
            let score = d.abs();
            let better = match best {
                None => true,
                Some((bj, _, bs)) => {
                    if bland {
                        var < self.nonbasic[bj]
                    } else {
                        score > bs
                    }
                }
            };
            if better {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Harris two-pass ratio test. The first pass finds the longest step that
    /// keeps every basic variable within half the feasibility tolerance of
    /// its bound; the second picks, among rows blocking within that step, the
    /// one with the largest pivot.
    fn ratio_test(&self, col: usize, dir: f64, phase: Phase, bland: bool) -> Ratio {
        let tol = self.limits.tol_feas;
        let slack = 0.5 * tol;
        let entering = self.nonbasic[col];
        let span = self.upper[entering] - self.lower[entering];

        // (row, exact ratio, relaxed ratio, |alpha|, target)
        let mut cands: Vec<(usize, f64, f64, f64, f64)> = Vec::new();
        let mut max_alpha = 0.0f64;
        for i in 0..self.rows {
            let alpha = self.entry(i, col) * dir;
            if alpha.abs() < PIVOT_TOL {
                continue;
            }
            max_alpha = max_alpha.max(alpha.abs());
            let var = self.basis[i];
            let (l, u, v) = (self.lower[var], self.upper[var], self.value[var]);
            let below = v < l - tol;
            let above = v > u + tol;
            let limit = if phase == Phase::Feasibility && below {
                (alpha > 0.0).then(|| ((l - v) / alpha, (l + slack - v) / alpha, l))
            } else if phase == Phase::Feasibility && above {
                (alpha < 0.0).then(|| ((u - v) / alpha, (u - slack - v) / alpha, u))
            } else if alpha > 0.0 {
                u.is_finite().then(|| (((u - v) / alpha).max(0.0), ((u + slack - v) / alpha).max(0.0), u))
            } else {
                l.is_finite().then(|| (((l - v) / alpha).max(0.0), ((l - slack - v) / alpha).max(0.0), l))
            };
            if let Some((theta, relaxed, target)) = limit {
                cands.push((i, theta, relaxed, alpha.abs(), target));
            }
        }
        // Pivots far smaller than the column's largest entry are rejected.
        let floor = max_alpha * REL_PIVOT_TOL;
        cands.retain(|c| c.3 >= floor);

        let bound = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64, f64, f64)> = None; // (row, theta, |alpha|, target)
        for &(i, theta, _, a, target) in cands.iter().filter(|c| c.1 <= bound) {
            let replace = match best {
                None => true,
                Some((bi, _, ba, _)) => {
                    if bland && (a - ba).abs() <= 1e-12 * ba.max(1.0) {
                        self.basis[i] < self.basis[bi]
                    } else {
                        a > ba
                    }
                }
            };
            if replace {
                best = Some((i, theta, a, target));
            }
        }

        match best {
            Some((_, theta, _, _)) if span <= theta => {
                Ratio::Step(Step { col, dir, row: None, theta: span, target: 0.0 })
            }
            Some((row, theta, _, target)) => Ratio::Step(Step { col, dir, row: Some(row), theta, target }),
            None if span.is_finite() => Ratio::Step(Step { col, dir, row: None, theta: span, target: 0.0 }),
            None => Ratio::Unbounded,
        }
    }

    fn apply(&mut self, step: &Step) {
        let entering = self.nonbasic[step.col];
        let delta = step.dir * step.theta;
        if delta != 0.0 {
            for i in 0..self.rows {
                let a = self.entry(i, step.col);
                if a != 0.0 {
                    self.value[self.basis[i]] += a * delta;
                }
            }
        }
        match step.row {
            None => {
                // Bound flip: snap exactly onto the opposite bound.
                self.value[entering] = if step.dir > 0.0 { self.upper[entering] } else { self.lower[entering] };
            }
            Some(r) => {
                self.value[entering] += delta;
                let leaving = self.basis[r];
                self.value[leaving] = step.target;
                self.pivot(r, step.col);
            }
        }
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let cols = self.cols;
        let p = self.tab[r * cols + s];

        let pivot_row: Vec<(usize, f64)> = self.tab[r * cols..(r + 1) * cols]
            .iter()
            .enumerate()
            .filter(|&(j, &a)| j != s && a != 0.0)
            .map(|(j, &a)| (j, a))
            .collect();
        let rhs_r = self.rhs[r];

        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let ais = self.tab[i * cols + s];
            if ais == 0.0 {
                continue;
            }
            let f = ais / p;
            let row = &mut self.tab[i * cols..(i + 1) * cols];
            for &(j, arj) in &pivot_row {
                let v = row[j] - f * arj;
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[s] = f;
            self.rhs[i] -= f * rhs_r;
        }

        let ds = self.reduced[s];
        if ds != 0.0 {
            let f = ds / p;
            for &(j, arj) in &pivot_row {
                let v = self.reduced[j] - f * arj;
                self.reduced[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            self.reduced[s] = f;
        }
        let leaving = self.basis[r];
        let entering = self.nonbasic[s];

        let row = &mut self.tab[r * cols..(r + 1) * cols];
        for a in row.iter_mut() {
            *a = -*a / p;
        }
        row[s] = 1.0 / p;
        self.rhs[r] = -rhs_r / p;

        self.basis[r] = entering;
        self.nonbasic[s] = leaving;
    }
}
