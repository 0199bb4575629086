//! Dense linear programming.
//!
//! [`LinearProgram`] stores `min cᵀx` subject to `A x ≤ b`, `A_eq x = b_eq`
//! and per-variable bounds. Constraint rows are kept sparse for assembly;
//! the [`SimplexSolver`] densifies them into its working tableau.

mod presolve;
mod simplex;

use std::fmt::Write as _;

pub use simplex::SimplexSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    ineq: Vec<LinearConstraint>,
    eq: Vec<LinearConstraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with objective coefficient `cost` and bounds
    /// `[lower, upper]`; infinite bounds are allowed. Returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// `Σ terms ≤ rhs`
    pub fn add_le(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.ineq.push(LinearConstraint { terms, rhs });
    }

    /// `Σ terms ≥ rhs`, stored negated as a `≤` row.
    pub fn add_ge(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        let terms = terms.into_iter().map(|(j, a)| (j, -a)).collect();
        self.ineq.push(LinearConstraint { terms, rhs: -rhs });
    }

    /// `Σ terms = rhs`
    pub fn add_eq(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.eq.push(LinearConstraint { terms, rhs });
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn inequalities(&self) -> &[LinearConstraint] {
        &self.ineq
    }

    pub fn equalities(&self) -> &[LinearConstraint] {
        &self.eq
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let ineq = self.ineq.iter().map(|c| c.lhs(x) - c.rhs);
        let eq = self.eq.iter().map(|c| (c.lhs(x) - c.rhs).abs());
        let lo = self.lower.iter().zip(x).map(|(l, v)| l - v);
        let hi = self.upper.iter().zip(x).map(|(u, v)| v - u);
        ineq.chain(eq).chain(lo).chain(hi).fold(0.0, f64::max)
    }

    /// Checks that indices are in range, coefficients finite and bounds
    /// ordered.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(format!("variable {j} has bounds [{l}, {u}]"));
            }
            if !self.objective[j].is_finite() {
                return Err(format!("variable {j} has a non-finite cost"));
            }
        }
        for (kind, rows) in [("inequality", &self.ineq), ("equality", &self.eq)] {
            for (r, c) in rows.iter().enumerate() {
                if !c.rhs.is_finite() {
                    return Err(format!("{kind} {r} has a non-finite right-hand side"));
                }
                if let Some(&(j, a)) = c.terms.iter().find(|&&(j, a)| j >= n || !a.is_finite()) {
                    return Err(format!("{kind} {r} has term ({j}, {a})"));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump for cross-checking against other solvers: objective
    /// first, then one constraint per line, then the bounds.
    pub fn to_lp_text(&self) -> String {
        fn expr(terms: &[(usize, f64)]) -> String {
            if terms.is_empty() {
                return "0".into();
            }
            terms
                .iter()
                .enumerate()
                .map(|(k, &(j, a))| {
                    let sign = if a < 0.0 {
                        "-"
                    } else if k > 0 {
                        "+"
                    } else {
                        ""
                    };
                    format!("{sign}{} x{j}", a.abs())
                })
                .collect::<Vec<_>>()
                .join(" ")
        }
        let mut out = String::new();
        let obj: Vec<(usize, f64)> =
            self.objective.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, &c)| (j, c)).collect();
        let _ = writeln!(out, "minimize {}", expr(&obj));
        for c in &self.ineq {
            let _ = writeln!(out, "{} <= {}", expr(&c.terms), c.rhs);
        }
        for c in &self.eq {
            let _ = writeln!(out, "{} = {}", expr(&c.terms), c.rhs);
        }
        for (j, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            let _ = writeln!(out, "{l} <= x{j} <= {u}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverLimits {
    /// Pivot budget; `None` means `50 · (rows + cols)`.
    pub max_iters: Option<usize>,
    pub tol_feas: f64,
    pub tol_opt: f64,
}

impl Default for SolverLimits {
    fn default() -> Self {
        Self { max_iters: None, tol_feas: 1e-8, tol_opt: 1e-9 }
    }
}

/// Anything that can solve a [`LinearProgram`].
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> LpSolution;
}

/// Solves with the built-in simplex and the given limits.
pub fn solve(lp: &LinearProgram, limits: SolverLimits) -> LpSolution {
    SimplexSolver::new(limits).solve(lp)
}
