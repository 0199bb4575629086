//! Reductions applied before the simplex sees a problem.
//!
//! Fixed variables are folded into right-hand sides, singleton rows become
//! bounds, two-variable equalities are eliminated by substitution, pairs of
//! opposite inequalities are merged into equalities, and rows that cannot
//! bind under the current bounds are dropped. [`Reduction::restore`] maps a
//! solution of the reduced problem back to the original variables.

use std::collections::HashMap;

use super::LinearProgram;

/// Feasibility slack used when judging rows and bounds during reduction.
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
enum Fate {
    Kept(usize),
    Fixed(f64),
    /// `x = offset + scale · x_target`
    Substituted {
        target: usize,
        scale: f64,
        offset: f64,
    },
}

#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    rhs: f64,
    equality: bool,
    live: bool,
}

#[derive(Debug)]
pub(super) struct Reduction {
    fate: Vec<Fate>,
    /// Substitution order, replayed backwards on restore.
    eliminated: Vec<usize>,
    pub lp: LinearProgram,
}

pub(super) enum Presolve {
    Reduced(Reduction),
    Infeasible,
}

impl Reduction {
    /// Expands a solution of the reduced problem to the original variables.
    pub fn restore(&self, reduced_x: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self
            .fate
            .iter()
            .map(|f| match *f {
                Fate::Kept(j) => reduced_x[j],
                Fate::Fixed(v) => v,
                Fate::Substituted { .. } => f64::NAN,
            })
            .collect();
        for &i in self.eliminated.iter().rev() {
            if let Fate::Substituted { target, scale, offset } = self.fate[i] {
                x[i] = offset + scale * x[target];
            }
        }
        x
    }
}

struct Work {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    fate: Vec<Fate>,
    eliminated: Vec<usize>,
    rows: Vec<Row>,
}

pub(super) fn presolve(lp: &LinearProgram) -> Presolve {
    let n = lp.num_vars();
    let mut rows: Vec<Row> = lp
        .inequalities()
        .iter()
        .map(|c| Row { terms: c.terms.clone(), rhs: c.rhs, equality: false, live: true })
        .collect();
    rows.extend(lp.equalities().iter().map(|c| Row { terms: c.terms.clone(), rhs: c.rhs, equality: true, live: true }));
    let mut w = Work {
        lower: lp.lower().to_vec(),
        upper: lp.upper().to_vec(),
        cost: lp.objective().to_vec(),
        fate: (0..n).map(Fate::Kept).collect(),
        eliminated: Vec::new(),
        rows,
    };
    for j in 0..n {
        if w.lower[j] > w.upper[j] + TOL {
            return Presolve::Infeasible;
        }
        if w.lower[j] == w.upper[j] {
            w.fate[j] = Fate::Fixed(w.lower[j]);
        }
    }
    if w.reduce().is_err() {
        return Presolve::Infeasible;
    }
    Presolve::Reduced(w.finish())
}

impl Work {
    fn reduce(&mut self) -> Result<(), ()> {
        loop {
            let mut changed = false;
            for r in 0..self.rows.len() {
                if !self.rows[r].live {
                    continue;
                }
                self.normalise(r);
                changed |= self.simplify_row(r)?;
            }
            if !changed {
                changed = self.merge_opposite_pairs();
            }
            if !changed {
                return Ok(());
            }
        }
    }

    /// Rewrites a row in terms of kept variables only.
    fn normalise(&mut self, r: usize) {
        let mut rhs = self.rows[r].rhs;
        let mut acc: Vec<(usize, f64)> = Vec::with_capacity(self.rows[r].terms.len());
        for &(j, a) in &self.rows[r].terms {
            let (var, coef, shift) = self.resolve(j, a);
            rhs -= shift;
            if let Some(var) = var {
                match acc.iter_mut().find(|t| t.0 == var) {
                    Some(t) => t.1 += coef,
                    None => acc.push((var, coef)),
                }
            }
        }
        acc.retain(|t| t.1.abs() > 1e-12);
        acc.sort_by_key(|t| t.0);
        let row = &mut self.rows[r];
        row.terms = acc;
        row.rhs = rhs;
    }

    /// Follows substitutions: `a · x_j = coef · x_var + shift`.
    fn resolve(&self, mut j: usize, mut a: f64) -> (Option<usize>, f64, f64) {
        let mut shift = 0.0;
        loop {
            match self.fate[j] {
                Fate::Kept(_) => return (Some(j), a, shift),
                Fate::Fixed(v) => return (None, 0.0, shift + a * v),
                Fate::Substituted { target, scale, offset } => {
                    shift += a * offset;
                    a *= scale;
                    j = target;
                }
            }
        }
    }

    fn fix(&mut self, j: usize, v: f64) -> Result<(), ()> {
        if v < self.lower[j] - TOL || v > self.upper[j] + TOL {
            return Err(());
        }
        let v = v.clamp(self.lower[j], self.upper[j]);
        self.lower[j] = v;
        self.upper[j] = v;
        self.fate[j] = Fate::Fixed(v);
        Ok(())
    }

    fn tighten(&mut self, j: usize, lo: f64, hi: f64) -> Result<(), ()> {
        let lo = lo.max(self.lower[j]);
        let hi = hi.min(self.upper[j]);
        if lo > hi + TOL {
            return Err(());
        }
        if hi - lo <= TOL {
            let v = if lo.is_finite() { lo } else { hi };
            return self.fix(j, v.clamp(self.lower[j], self.upper[j]));
        }
        self.lower[j] = lo;
        self.upper[j] = hi;
        Ok(())
    }

    /// Returns whether anything changed.
    fn simplify_row(&mut self, r: usize) -> Result<bool, ()> {
        let (rhs, equality) = (self.rows[r].rhs, self.rows[r].equality);
        let terms = std::mem::take(&mut self.rows[r].terms);
        let out = self.simplify_terms(r, &terms, rhs, equality);
        self.rows[r].terms = terms;
        out
    }

    fn simplify_terms(&mut self, r: usize, terms: &[(usize, f64)], rhs: f64, equality: bool) -> Result<bool, ()> {
        match terms.len() {
            0 => {
                let ok = if equality { rhs.abs() <= TOL } else { rhs >= -TOL };
                if !ok {
                    return Err(());
                }
                self.rows[r].live = false;
                Ok(true)
            }
            1 => {
                let (j, a) = terms[0];
                let v = rhs / a;
                self.rows[r].live = false;
                if equality {
                    self.fix(j, v)?;
                } else if a > 0.0 {
                    self.tighten(j, f64::NEG_INFINITY, v)?;
                } else {
                    self.tighten(j, v, f64::INFINITY)?;
                }
                Ok(true)
            }
            2 if equality => {
                // Eliminate the later variable in favour of the earlier one.
                let (keep, ak) = terms[0];
                let (drop, ad) = terms[1];
                let scale = -ak / ad;
                let offset = rhs / ad;
                // Bounds of `drop` restated on `keep`.
                let (l, u) = (self.lower[drop], self.upper[drop]);
                let a = (l - offset) / scale;
                let b = (u - offset) / scale;
                let (lo, hi) = if scale > 0.0 { (a, b) } else { (b, a) };
                self.rows[r].live = false;
                self.cost[keep] += self.cost[drop] * scale;
                self.fate[drop] = Fate::Substituted { target: keep, scale, offset };
                self.eliminated.push(drop);
                self.tighten(keep, lo, hi)?;
                Ok(true)
            }
            _ if !equality => {
                let max_activity: f64 =
                    terms.iter().map(|&(j, a)| if a > 0.0 { a * self.upper[j] } else { a * self.lower[j] }).sum();
                if max_activity <= rhs + TOL {
                    self.rows[r].live = false;
                    return Ok(true);
                }
                Ok(false)
            }
            _ => Ok(false),
        }
    }

    /// `a·x ≤ b` together with `−a·x ≤ −b` is the equality `a·x = b`.
    fn merge_opposite_pairs(&mut self) -> bool {
        type Key = Vec<(usize, u64)>;
        let key = |terms: &[(usize, f64)], sign: f64| -> Key {
            terms.iter().map(|&(j, a)| (j, (sign * a).to_bits())).collect()
        };
        let mut seen: HashMap<Key, usize> = HashMap::new();
        let mut changed = false;
        for r in 0..self.rows.len() {
            let row = &self.rows[r];
            if !row.live || row.equality {
                continue;
            }
            if let Some(&q) = seen.get(&key(&row.terms, -1.0)) {
                if self.rows[q].live && (row.rhs + self.rows[q].rhs).abs() <= TOL {
                    self.rows[q].live = false;
                    self.rows[r].equality = true;
                    changed = true;
                    continue;
                }
            }
            seen.insert(key(&row.terms, 1.0), r);
        }
        changed
    }

    fn finish(mut self) -> Reduction {
        let mut lp = LinearProgram::new();
        for j in 0..self.fate.len() {
            if let Fate::Kept(_) = self.fate[j] {
                let idx = lp.add_var(self.cost[j], self.lower[j], self.upper[j]);
                self.fate[j] = Fate::Kept(idx);
            }
        }
        for row in self.rows.iter().filter(|r| r.live) {
            let terms = row
                .terms
                .iter()
                .map(|&(j, a)| match self.fate[j] {
                    Fate::Kept(idx) => (idx, a),
                    _ => unreachable!("live rows only reference kept variables"),
                })
                .collect();
            if row.equality {
                lp.add_eq(terms, row.rhs);
            } else {
                lp.add_le(terms, row.rhs);
            }
        }
        Reduction { fate: self.fate, eliminated: self.eliminated, lp }
    }
}
