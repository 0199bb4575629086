//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DVector;
use pdcch_jlp::modem_channel::{BitMap, Observation};
use pdcch_jlp::polar_code::PolarCodeSpec;

/// `G_N = B_N F^{⊗n}` built by explicit Kronecker products and a
/// bit-reversal row permutation.
pub fn kron_generator(n_stages: usize) -> Vec<Vec<u8>> {
    let mut g = vec![vec![1u8]];
    for _ in 0..n_stages {
        let m = g.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                // F = [[1, 0], [1, 1]]
                next[i][j] = g[i][j];
                next[m + i][j] = g[i][j];
                next[m + i][m + j] = g[i][j];
            }
        }
        g = next;
    }
    let rev = |mut i: usize| {
        let mut r = 0;
        for _ in 0..n_stages {
            r = (r << 1) | (i & 1);
            i >>= 1;
        }
        r
    };
    (0..g.len()).map(|i| g[rev(i)].clone()).collect()
}

pub fn mul_gf2(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
    let n = g[0].len();
    (0..n).map(|j| u.iter().zip(g).fold(0u8, |acc, (&ui, row)| acc ^ (ui & row[j]))).collect()
}

/// Every `(info bits, codeword)` pair of `spec`, via the generator matrix.
pub fn codebook(spec: &PolarCodeSpec) -> Vec<(Vec<u8>, Vec<u8>)> {
    let g = kron_generator(spec.n_stages());
    (0..1u32 << spec.k())
        .map(|m| {
            let info: Vec<u8> = (0..spec.k()).map(|b| ((m >> b) & 1) as u8).collect();
            let mut u = vec![0u8; spec.n()];
            for (&pos, &bit) in spec.info_set().iter().zip(&info) {
                u[pos] = bit;
            }
            let cw = mul_gf2(&u, &g);
            (info, cw)
        })
        .collect()
}

/// Real symbol vectors carrying `codeword` under `map`.
pub fn symbols(codeword: &[u8], map: &BitMap) -> Vec<DVector<f64>> {
    let mut x = vec![DVector::zeros(map.dim()); map.k0()];
    for (j, &(k, c)) in map.slots().iter().enumerate() {
        x[k][c] = (1.0 - 2.0 * f64::from(codeword[j])) * std::f64::consts::FRAC_1_SQRT_2;
    }
    x
}

/// `Σ_k ‖y_k − H_k x_k‖²`.
pub fn l2_cost(obs: &Observation, map: &BitMap, codeword: &[u8]) -> f64 {
    let x = symbols(codeword, map);
    obs.y.iter().zip(&obs.h).zip(&x).map(|((y, h), x)| (y - h * x).norm_squared()).sum()
}

/// `Σ_k ‖y_k − H_k x_k‖₁`, the cost the joint LP minimises.
pub fn l1_cost(obs: &Observation, map: &BitMap, codeword: &[u8]) -> f64 {
    let x = symbols(codeword, map);
    obs.y.iter().zip(&obs.h).zip(&x).map(|((y, h), x)| (y - h * x).abs().sum()).sum()
}

/// Index of the smallest value, lowest index on ties.
pub fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b))).unwrap()
}

/// Hard-decision discrepancy `Σ |L_j| [c_j ≠ hard(L_j)]`.
pub fn discrepancy(llr: &[f64], codeword: &[u8]) -> f64 {
    llr.iter().zip(codeword).filter(|(l, &c)| u8::from(**l < 0.0) != c).map(|(l, _)| l.abs()).sum()
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}
