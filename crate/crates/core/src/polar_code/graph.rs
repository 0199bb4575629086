use std::fmt;

use super::{bit_reverse, PolarCodeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// `a1 ⊕ a2 ⊕ a3 = 0`
    Xor,
    /// `a1 = a2`
    Equality,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckNode {
    pub kind: CheckKind,
    pub members: Vec<usize>,
}

impl CheckNode {
    pub fn degree(&self) -> usize {
        self.members.len()
    }

    pub fn is_satisfied(&self, assignment: &[u8]) -> bool {
        match self.kind {
            CheckKind::Xor => self.members.iter().fold(0u8, |acc, &v| acc ^ assignment[v]) == 0,
            CheckKind::Equality => assignment[self.members[0]] == assignment[self.members[1]],
        }
    }
}

/// Factor graph of the polar encoding circuit.
///
/// Layer 0 holds the source vector `u` in natural order, layer `n` the
/// codeword `b` in codeword order. Every butterfly contributes one XOR check
/// (upper output = upper input ⊕ lower input) and one equality check (lower
/// output = lower input).
#[derive(Debug, Clone)]
pub struct FactorGraph {
    n: usize,
    n_stages: usize,
    checks: Vec<CheckNode>,
}

impl FactorGraph {
    pub fn new(spec: &PolarCodeSpec) -> Self {
        Self::with_stages(spec.n_stages())
    }

    pub fn with_stages(n_stages: usize) -> Self {
        let n = 1usize << n_stages;
        let mut graph = Self { n, n_stages, checks: Vec::with_capacity(n * n_stages) };
        for t in 0..n_stages {
            let h = 1 << t;
            for i in (0..n).filter(|i| i & h == 0) {
                let in_upper = graph.var_index(t, i);
                let in_lower = graph.var_index(t, i + h);
                let out_upper = graph.circuit_var(t + 1, i);
                let out_lower = graph.circuit_var(t + 1, i + h);
                graph.checks.push(CheckNode { kind: CheckKind::Xor, members: vec![in_upper, in_lower, out_upper] });
                graph.checks.push(CheckNode { kind: CheckKind::Equality, members: vec![in_lower, out_lower] });
            }
        }
        graph
    }

    /// Variable at butterfly position `p` of layer `stage`; on the codeword
    /// layer the position is translated to codeword order.
    fn circuit_var(&self, stage: usize, p: usize) -> usize {
        if stage == self.n_stages {
            self.var_index(stage, bit_reverse(p, self.n_stages))
        } else {
            self.var_index(stage, p)
        }
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    pub fn num_vars(&self) -> usize {
        self.n * (self.n_stages + 1)
    }

    /// Index of the variable at `position` of layer `stage`.
    pub fn var_index(&self, stage: usize, position: usize) -> usize {
        debug_assert!(stage <= self.n_stages && position < self.n);
        stage * self.n + position
    }

    /// Index of codeword bit `j`.
    pub fn codeword_var(&self, j: usize) -> usize {
        self.var_index(self.n_stages, j)
    }

    /// Index of source bit `i`.
    pub fn source_var(&self, i: usize) -> usize {
        self.var_index(0, i)
    }

    pub fn checks(&self) -> &[CheckNode] {
        &self.checks
    }

    /// Flattens encoder layers (see [`super::encode_trace`]) into one assignment.
    pub fn assignment_from_trace(&self, layers: &[Vec<u8>]) -> Vec<u8> {
        layers.iter().flatten().copied().collect()
    }

    pub fn is_satisfied(&self, assignment: &[u8]) -> bool {
        self.checks.iter().all(|c| c.is_satisfied(assignment))
    }
}

impl fmt::Display for FactorGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            match check.kind {
                CheckKind::Xor => writeln!(f, "X {} {} {}", check.members[0], check.members[1], check.members[2])?,
                CheckKind::Equality => writeln!(f, "E {} {}", check.members[0], check.members[1])?,
            }
        }
        Ok(())
    }
}
