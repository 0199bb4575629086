//! Simplex results checked against exhaustive vertex enumeration.

use pdcch_jlp::lp_solver::{solve, LinearProgram, LpSolver, LpStatus, SimplexSolver, SolverLimits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Constraint `a·x (≤ | =) b` in dense form.
struct Row {
    a: Vec<f64>,
    b: f64,
    equality: bool,
}

fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
                rhs[r] -= f * rhs[c];
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum of `c·x` over all vertices of a bounded polytope.
fn vertex_minimum(c: &[f64], rows: &[Row]) -> Option<f64> {
    let n = c.len();
    let eqs: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].equality).collect();
    let ineqs: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].equality).collect();
    let mut best: Option<f64> = None;
    for pick in combinations(ineqs.len(), n - eqs.len()) {
        let active: Vec<usize> = eqs.iter().copied().chain(pick.iter().map(|&p| ineqs[p])).collect();
        let m = active.iter().map(|&i| rows[i].a.clone()).collect();
        let rhs = active.iter().map(|&i| rows[i].b).collect();
        let Some(x) = solve_square(m, rhs) else { continue };
        let feasible = rows.iter().all(|r| {
            let lhs: f64 = r.a.iter().zip(&x).map(|(a, v)| a * v).sum();
            if r.equality {
                (lhs - r.b).abs() < 1e-9
            } else {
                lhs <= r.b + 1e-9
            }
        });
        if feasible {
            let v: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..300 {
        let n = rng.random_range(1..=5);
        let n_ineq = rng.random_range(0..=6);
        let with_eq = n >= 2 && rng.random_bool(0.3);
        let upper: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        let x0: Vec<f64> = upper.iter().map(|&u| rng.random_range(0.0..u)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();

        let mut lp = LinearProgram::new();
        let mut rows = Vec::new();
        for j in 0..n {
            lp.add_var(c[j], 0.0, upper[j]);
            let mut lo = vec![0.0; n];
            lo[j] = -1.0;
            rows.push(Row { a: lo, b: 0.0, equality: false });
            let mut hi = vec![0.0; n];
            hi[j] = 1.0;
            rows.push(Row { a: hi, b: upper[j], equality: false });
        }
        for _ in 0..n_ineq {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3i32..=3) as f64).collect();
            let at: f64 = a.iter().zip(&x0).map(|(p, q)| p * q).sum();
            let b = at + rng.random_range(0.0..1.0);
            lp.add_le(a.iter().copied().enumerate().collect(), b);
            rows.push(Row { a, b, equality: false });
        }
        if with_eq {
            let mut a = vec![0.0; n];
            while a.iter().all(|&v| v == 0.0) {
                a = (0..n).map(|_| rng.random_range(-2i32..=2) as f64).collect();
            }
            let b: f64 = a.iter().zip(&x0).map(|(p, q)| p * q).sum();
            lp.add_eq(a.iter().copied().enumerate().collect(), b);
            rows.push(Row { a, b, equality: true });
        }
        if n >= 2 && rng.random_bool(0.2) {
            // The same equality written as two opposite inequalities.
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if i != j {
                let mut a = vec![0.0; n];
                a[i] = 1.0;
                a[j] = -1.0;
                let b = x0[i] - x0[j];
                lp.add_le(vec![(i, 1.0), (j, -1.0)], b);
                lp.add_le(vec![(i, -1.0), (j, 1.0)], -b);
                let neg = a.iter().map(|v| -v).collect();
                rows.push(Row { a, b, equality: false });
                rows.push(Row { a: neg, b: -b, equality: false });
            }
        }
        if rng.random_bool(0.2) {
            let j = rng.random_range(0..n);
            lp.set_bounds(j, x0[j], x0[j]);
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            let neg = a.iter().map(|v| -v).collect();
            rows.push(Row { a, b: x0[j], equality: false });
            rows.push(Row { a: neg, b: -x0[j], equality: false });
        }

        let sol = solve(&lp, SolverLimits::default());
        assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
        assert!(lp.max_violation(&sol.x) <= 1e-8, "case {case} infeasible point");
        let oracle = vertex_minimum(&c, &rows).expect("feasible by construction");
        assert!((sol.value - oracle).abs() <= 1e-8, "case {case}: {} vs {oracle}", sol.value);

        let again = solve(&lp, SolverLimits::default());
        assert_eq!(again.x, sol.x, "case {case} not deterministic");

        let plain = SimplexSolver::new(SolverLimits::default()).without_presolve().solve(&lp);
        assert_eq!(plain.status, LpStatus::Optimal, "case {case} without presolve");
        assert!((plain.value - oracle).abs() <= 1e-8, "case {case} without presolve");
    }
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut lp = LinearProgram::new();
    let x = lp.add_var(0.0, 0.0, f64::INFINITY);
    lp.add_le(vec![(x, 1.0)], -1.0);
    let sol = solve(&lp, SolverLimits::default());
    assert_eq!(sol.status, LpStatus::Infeasible);
}
