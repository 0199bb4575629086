//! Decoupled receiver baseline: linear MMSE detection followed by SC or SCL
//! polar decoding. The decoders also serve the joint LP receiver, which hands
//! them its LLRs.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::modem_channel::{BitMap, Observation};
use crate::polar_code::{bit_reverse, check_crc, transform, PolarCodeSpec};

/// Magnitude cap on MMSE LLRs.
pub const MMSE_LLR_MAX: f64 = 100.0;

/// Per-bit LLRs in codeword order; positive favours 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftCodeword {
    pub llr: Vec<f64>,
}

impl SoftCodeword {
    pub fn hard_bits(&self) -> Vec<u8> {
        hard_decisions(&self.llr)
    }
}

/// Sign slicing; zero maps to bit 0.
pub fn hard_decisions(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&l| u8::from(l < 0.0)).collect()
}

/// Linear MMSE detection per channel use with soft QPSK demapping.
///
/// `x̂ = (HᵀH + σ²I)⁻¹ Hᵀ y` in the real model. Each rail gets
/// `LLR = 2√2 · x̂ / (σ² [(HᵀH + σ²I)⁻¹]_cc)`, the log-likelihood ratio of the
/// biased estimate under a Gaussian error model.
pub fn mmse_detect(obs: &Observation, map: &BitMap, sigma2: f64) -> Result<SoftCodeword> {
    obs.validate(map)?;
    let per_use: Vec<Vec<f64>> = obs
        .y
        .iter()
        .zip(&obs.h)
        .map(|(y, h)| {
            let (x_hat, inv_diag) = mmse_estimate(y, h, sigma2);
            x_hat
                .iter()
                .zip(&inv_diag)
                .map(|(&x, &d)| {
                    let err = (sigma2 * d).max(f64::MIN_POSITIVE);
                    (2.0 * std::f64::consts::SQRT_2 * x / err).clamp(-MMSE_LLR_MAX, MMSE_LLR_MAX)
                })
                .collect()
        })
        .collect();
    let llr = map.slots().iter().map(|&(k, c)| per_use[k][c]).collect();
    Ok(SoftCodeword { llr })
}

/// Filter output `x̂` and the diagonal of `(HᵀH + σ²I)⁻¹` for one channel use.
pub fn mmse_estimate(y: &DVector<f64>, h: &DMatrix<f64>, sigma2: f64) -> (Vec<f64>, Vec<f64>) {
    let dim = h.ncols();
    let ht = h.transpose();
    let gram = &ht * h + DMatrix::identity(dim, dim) * sigma2;
    let inv = match gram.clone().cholesky() {
        Some(c) => c.inverse(),
        None => gram.pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::zeros(dim, dim)),
    };
    let x_hat = &inv * (&ht * y);
    (x_hat.iter().copied().collect(), inv.diagonal().iter().copied().collect())
}

/// Min-sum check update.
fn check_update(a: f64, b: f64) -> f64 {
    let mag = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -mag
    } else {
        mag
    }
}

fn bit_update(a: f64, b: f64, upper: u8) -> f64 {
    if upper == 0 {
        b + a
    } else {
        b - a
    }
}

/// LLRs of the butterfly output in natural (pre-reversal) order.
fn natural_order(llr: &[f64], n_stages: usize) -> Vec<f64> {
    (0..llr.len()).map(|p| llr[bit_reverse(p, n_stages)]).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedBlock {
    /// Source vector, frozen positions included.
    pub u: Vec<u8>,
    /// Bits on the information set, CRC included.
    pub info: Vec<u8>,
    /// Re-encoded codeword.
    pub codeword: Vec<u8>,
}

impl DecodedBlock {
    fn from_u(spec: &PolarCodeSpec, u: Vec<u8>) -> Self {
        Self { info: spec.extract_info(&u), codeword: transform(&u), u }
    }
}

/// Successive cancellation decoding with min-sum updates; frozen bits are
/// forced to zero and LLR ties decide 0.
pub fn sc_decode(llr: &[f64], spec: &PolarCodeSpec) -> Result<DecodedBlock> {
    check_len(llr, spec)?;
    let frozen: Vec<bool> = (0..spec.n()).map(|i| spec.is_frozen(i)).collect();
    let mut u = Vec::with_capacity(spec.n());
    sc_node(&natural_order(llr, spec.n_stages()), &frozen, &mut u);
    Ok(DecodedBlock::from_u(spec, u))
}

fn sc_node(llr: &[f64], frozen: &[bool], u: &mut Vec<u8>) -> Vec<u8> {
    if llr.len() == 1 {
        let bit = if frozen[0] { 0 } else { u8::from(llr[0] < 0.0) };
        u.push(bit);
        return vec![bit];
    }
    let half = llr.len() / 2;
    let (top, bot) = llr.split_at(half);
    let left: Vec<f64> = top.iter().zip(bot).map(|(&a, &b)| check_update(a, b)).collect();
    let c1 = sc_node(&left, &frozen[..half], u);
    let right: Vec<f64> = top.iter().zip(bot).zip(&c1).map(|((&a, &b), &c)| bit_update(a, b, c)).collect();
    let c2 = sc_node(&right, &frozen[half..], u);
    let mut out: Vec<u8> = c1.iter().zip(&c2).map(|(a, b)| a ^ b).collect();
    out.extend_from_slice(&c2);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SclConfig {
    pub list_size: usize,
    pub use_crc_selection: bool,
    pub rnti: u16,
}

impl Default for SclConfig {
    fn default() -> Self {
        Self { list_size: 4, use_crc_selection: true, rnti: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SclOutput {
    pub block: DecodedBlock,
    /// Whether any surviving path passed the CRC (always `false` without a CRC).
    pub crc_passed: bool,
    /// Path metric of the returned path.
    pub metric: f64,
}

/// Surviving paths at the current leaf position.
struct ListState {
    metric: Vec<f64>,
    u: Vec<Vec<u8>>,
}

/// Successive cancellation list decoding.
///
/// Paths are ranked by the accumulated penalty `|llr|` of every decision
/// that contradicts the sign of its leaf LLR. Equal metrics keep the order
/// in which paths were spawned, with bit 0 first.
pub fn scl_decode(llr: &[f64], spec: &PolarCodeSpec, cfg: &SclConfig) -> Result<SclOutput> {
    check_len(llr, spec)?;
    if cfg.list_size == 0 {
        return Err(crate::Error::Parameter("list size must be at least 1".into()));
    }
    let frozen: Vec<bool> = (0..spec.n()).map(|i| spec.is_frozen(i)).collect();
    let mut state = ListState { metric: vec![0.0], u: vec![Vec::with_capacity(spec.n())] };
    scl_node(vec![natural_order(llr, spec.n_stages())], &frozen, cfg.list_size, &mut state);

    // Paths are already sorted by metric.
    let use_crc = cfg.use_crc_selection && spec.crc_len() > 0;
    let passing = if use_crc { state.u.iter().position(|u| check_crc(&spec.extract_info(u), cfg.rnti)) } else { None };
    let pick = passing.unwrap_or(0);
    Ok(SclOutput {
        block: DecodedBlock::from_u(spec, state.u[pick].clone()),
        crc_passed: passing.is_some(),
        metric: state.metric[pick],
    })
}

/// Decodes one subtree for every current path. Returns, for each surviving
/// path, the index of the input path it descends from and its subtree code.
fn scl_node(
    llr: Vec<Vec<f64>>,
    frozen: &[bool],
    list_size: usize,
    state: &mut ListState,
) -> (Vec<usize>, Vec<Vec<u8>>) {
    if frozen.len() == 1 {
        let mut children: Vec<(f64, usize, u8)> = Vec::with_capacity(2 * llr.len());
        for (p, l) in llr.iter().enumerate() {
            let l = l[0];
            let bits: &[u8] = if frozen[0] { &[0] } else { &[0, 1] };
            for &bit in bits {
                let contradicts = if bit == 0 { l < 0.0 } else { l > 0.0 };
                let penalty = if contradicts { l.abs() } else { 0.0 };
                children.push((state.metric[p] + penalty, p, bit));
            }
        }
        // Stable sort keeps spawn order among equal metrics.
        children.sort_by(|a, b| a.0.total_cmp(&b.0));
        children.truncate(list_size);
        let origin: Vec<usize> = children.iter().map(|c| c.1).collect();
        state.metric = children.iter().map(|c| c.0).collect();
        state.u = children
            .iter()
            .map(|&(_, p, bit)| {
                let mut u = state.u[p].clone();
                u.push(bit);
                u
            })
            .collect();
        let codes = children.iter().map(|c| vec![c.2]).collect();
        return (origin, codes);
    }

    let half = frozen.len() / 2;
    let left: Vec<Vec<f64>> =
        llr.iter().map(|l| l[..half].iter().zip(&l[half..]).map(|(&a, &b)| check_update(a, b)).collect()).collect();
    let (origin1, c1) = scl_node(left, &frozen[..half], list_size, state);
    let right: Vec<Vec<f64>> = origin1
        .iter()
        .zip(&c1)
        .map(|(&p, code)| {
            let l = &llr[p];
            l[..half].iter().zip(&l[half..]).zip(code).map(|((&a, &b), &c)| bit_update(a, b, c)).collect()
        })
        .collect();
    let (origin2, c2) = scl_node(right, &frozen[half..], list_size, state);
    let origin = origin2.iter().map(|&q| origin1[q]).collect();
    let codes = origin2
        .iter()
        .zip(&c2)
        .map(|(&q, second)| {
            let mut out: Vec<u8> = c1[q].iter().zip(second).map(|(a, b)| a ^ b).collect();
            out.extend_from_slice(second);
            out
        })
        .collect();
    (origin, codes)
}

fn check_len(llr: &[f64], spec: &PolarCodeSpec) -> Result<()> {
    if llr.len() != spec.n() {
        return Err(crate::Error::Length { expected: spec.n(), got: llr.len() });
    }
    Ok(())
}
