//! Joint LP detection: MIMO residual fitting and polar code constraints in a
//! single linear program.
//!
//! The LP minimises the l1 norm of the residual `y − H x` over symbol
//! coordinates tied affinely to the codeword layer of the relaxed polar
//! factor graph. Its optimum gives fractional bits `b̂` for a soft decoder and
//! the fractional metric `f` used by blind detection.

use crate::error::{Error, Result};
use crate::lp_solver::{LinearProgram, LpSolver, LpStatus, SimplexSolver, SolverLimits};
use crate::modem_channel::{BitMap, Observation, QPSK_AMPLITUDE};
use crate::polar_code::{CheckKind, FactorGraph, PolarCodeSpec};

/// LLR magnitude cap, about `ln(10⁶)`.
pub const LLR_MAX: f64 = 13.8;
/// Clamp applied to relaxed bits before taking log-odds.
pub const LLR_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Relaxed value of every factor-graph variable.
    pub s_star: Vec<f64>,
    /// Codeword-layer slice of `s_star`.
    pub b_hat: Vec<f64>,
    /// Fractional metric `Σ |s − round(s)|`; `+∞` when the LP was not solved.
    pub f: f64,
    pub llr: Vec<f64>,
    /// Total absolute residual at the optimum.
    pub objective: f64,
    pub status: LpStatus,
    pub iterations: usize,
}

impl DetectionResult {
    pub fn is_integral(&self, tol: f64) -> bool {
        self.status == LpStatus::Optimal && self.s_star.iter().all(|&s| (s - s.round()).abs() <= tol)
    }

    /// Hard decision on the codeword layer.
    pub fn hard_bits(&self) -> Vec<u8> {
        self.b_hat.iter().map(|&b| u8::from(b > 0.5)).collect()
    }
}

/// Where each family of variables sits in the assembled LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpLayout {
    pub graph_vars: usize,
    pub coords: usize,
    pub slacks: usize,
}

impl LpLayout {
    pub fn coord_offset(&self) -> usize {
        self.graph_vars
    }

    pub fn slack_offset(&self) -> usize {
        self.graph_vars + self.coords
    }

    pub fn total(&self) -> usize {
        self.graph_vars + self.coords + self.slacks
    }
}

/// Builds the joint LP.
///
/// Variables are the graph variables (in `[0, 1]`), then the real symbol
/// coordinates use by use (in `[−1/√2, 1/√2]`), then one residual slack per
/// received real coordinate. Variables listed in `frozen` (source positions)
/// are fixed to zero through their bounds.
pub fn assemble(
    obs: &Observation,
    map: &BitMap,
    graph: &FactorGraph,
    frozen: &[usize],
) -> Result<(LinearProgram, LpLayout)> {
    obs.validate(map)?;
    if map.n_bits() != graph.block_len() {
        return Err(Error::Dimension(format!(
            "bit map covers {} bits, code length is {}",
            map.n_bits(),
            graph.block_len()
        )));
    }
    let dim = map.dim();
    let layout =
        LpLayout { graph_vars: graph.num_vars(), coords: map.k0() * dim, slacks: obs.y.iter().map(|y| y.len()).sum() };

    let mut lp = LinearProgram::new();
    for _ in 0..layout.graph_vars {
        lp.add_var(0.0, 0.0, 1.0);
    }
    for _ in 0..layout.coords {
        lp.add_var(0.0, -QPSK_AMPLITUDE, QPSK_AMPLITUDE);
    }
    for _ in 0..layout.slacks {
        lp.add_var(1.0, 0.0, f64::INFINITY);
    }
    for &i in frozen {
        if i >= graph.block_len() {
            return Err(Error::Dimension(format!("frozen index {i} out of range")));
        }
        lp.set_bounds(graph.source_var(i), 0.0, 0.0);
    }

    // |y − H x| ≤ e, row by row.
    let mut slack = layout.slack_offset();
    for (k, (y, h)) in obs.y.iter().zip(&obs.h).enumerate() {
        let base = layout.coord_offset() + k * dim;
        for i in 0..y.len() {
            let mut terms: Vec<(usize, f64)> =
                (0..dim).filter(|&j| h[(i, j)] != 0.0).map(|j| (base + j, h[(i, j)])).collect();
            terms.push((slack, -1.0));
            lp.add_le(terms.clone(), y[i]);
            for t in terms.iter_mut().take_while(|t| t.0 != slack) {
                t.1 = -t.1;
            }
            lp.add_le(terms, -y[i]);
            slack += 1;
        }
    }

    // x = (1 − 2b)/√2 for every codeword bit.
    for (j, &(k, c)) in map.slots().iter().enumerate() {
        let x = layout.coord_offset() + k * dim + c;
        lp.add_eq(vec![(x, 1.0), (graph.codeword_var(j), 2.0 * QPSK_AMPLITUDE)], QPSK_AMPLITUDE);
    }

    for check in graph.checks() {
        let m = &check.members;
        match check.kind {
            CheckKind::Xor => {
                let (a, b, c) = (m[0], m[1], m[2]);
                lp.add_le(vec![(a, 1.0), (b, -1.0), (c, -1.0)], 0.0);
                lp.add_le(vec![(b, 1.0), (c, -1.0), (a, -1.0)], 0.0);
                lp.add_le(vec![(c, 1.0), (a, -1.0), (b, -1.0)], 0.0);
                lp.add_le(vec![(a, 1.0), (b, 1.0), (c, 1.0)], 2.0);
            }
            CheckKind::Equality => lp.add_eq(vec![(m[0], 1.0), (m[1], -1.0)], 0.0),
        }
    }
    Ok((lp, layout))
}

/// `Σ |s − round(s)|` with halves rounded down.
pub fn fractional_metric(s: &[f64]) -> f64 {
    s.iter()
        .map(|&v| {
            let r = if v - v.floor() <= 0.5 { v.floor() } else { v.ceil() };
            (v - r).abs()
        })
        .sum()
}

/// `ln((1 − b)/b)` after clamping `b` into `[ε, 1 − ε]`, clipped at
/// `±LLR_MAX`. Positive values favour bit 0.
pub fn to_llr(b_hat: &[f64]) -> Vec<f64> {
    b_hat
        .iter()
        .map(|&b| {
            let b = b.clamp(LLR_CLAMP, 1.0 - LLR_CLAMP);
            ((1.0 - b) / b).ln().clamp(-LLR_MAX, LLR_MAX)
        })
        .collect()
}

/// Joint LP detector for one polar code.
#[derive(Debug, Clone)]
pub struct JlpDetector {
    spec: PolarCodeSpec,
    graph: FactorGraph,
    solver: SimplexSolver,
}

impl JlpDetector {
    pub fn new(spec: &PolarCodeSpec) -> Self {
        Self::with_limits(spec, SolverLimits::default())
    }

    pub fn with_limits(spec: &PolarCodeSpec, limits: SolverLimits) -> Self {
        Self { spec: spec.clone(), graph: FactorGraph::new(spec), solver: SimplexSolver::new(limits) }
    }

    pub fn spec(&self) -> &PolarCodeSpec {
        &self.spec
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn assemble(&self, obs: &Observation, map: &BitMap) -> Result<(LinearProgram, LpLayout)> {
        assemble(obs, map, &self.graph, self.spec.frozen_set())
    }

    /// Solves the joint LP. A solver failure is not an error: the result
    /// then carries `f = +∞` and all-zero LLRs.
    pub fn detect(&self, obs: &Observation, map: &BitMap) -> Result<DetectionResult> {
        let (lp, layout) = self.assemble(obs, map)?;
        let sol = self.solver.solve(&lp);
        let n = self.graph.block_len();
        let s_star = sol.x[..layout.graph_vars].to_vec();
        let b_hat: Vec<f64> = (0..n).map(|j| s_star[self.graph.codeword_var(j)]).collect();
        if sol.status != LpStatus::Optimal {
            return Ok(DetectionResult {
                s_star,
                b_hat,
                f: f64::INFINITY,
                llr: vec![0.0; n],
                objective: sol.value,
                status: sol.status,
                iterations: sol.iterations,
            });
        }
        Ok(DetectionResult {
            f: fractional_metric(&s_star),
            llr: to_llr(&b_hat),
            s_star,
            b_hat,
            objective: sol.value,
            status: sol.status,
            iterations: sol.iterations,
        })
    }
}

/// One-shot convenience wrapper around [`JlpDetector::detect`].
pub fn detect(obs: &Observation, map: &BitMap, spec: &PolarCodeSpec) -> Result<DetectionResult> {
    JlpDetector::new(spec).detect(obs, map)
}
