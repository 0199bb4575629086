//! Polar code construction and encoding.
//!
//! The code is `b = u G_N` with `G_N = B_N F^{⊗n}`. Internally the encoder
//! runs the `F^{⊗n}` butterfly network on `u` in natural order and applies the
//! bit-reversal permutation on the way out, which is the same thing since
//! `B_N` commutes with `F^{⊗n}`. The factor graph in [`graph`] follows exactly
//! the same wiring, so a codeword position means the same bit everywhere.

mod crc;
mod graph;

pub use crc::{attach_crc, check_crc, crc16, CRC_LEN};
pub use graph::{CheckKind, CheckNode, FactorGraph};

use crate::error::{Error, Result};

/// Largest supported `log2(N)`.
pub const MAX_STAGES: usize = 10;

/// Default erasure probability seeding the Bhattacharyya recursion.
pub const DEFAULT_DESIGN_ERASURE: f64 = 0.5;

/// Reverse the lowest `bits` bits of `i`.
pub fn bit_reverse(i: usize, bits: usize) -> usize {
    if bits == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS as usize - bits)
}

/// Parameters of an `(N, K)` polar code with its information set.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCodeSpec {
    n_stages: usize,
    k: usize,
    crc_len: usize,
    design_erasure: f64,
    info_set: Vec<usize>,
    frozen_set: Vec<usize>,
    frozen_mask: Vec<bool>,
}

impl PolarCodeSpec {
    /// Builds a code whose information set is chosen by [`construct_info_set`].
    ///
    /// `k` counts every non-frozen bit, CRC included. `crc_len` is either 0
    /// (no CRC) or [`CRC_LEN`], and in the latter case at least one payload
    /// bit must remain.
    pub fn new(n_stages: usize, k: usize, crc_len: usize, design_erasure: f64) -> Result<Self> {
        if n_stages > MAX_STAGES {
            return Err(Error::Size(n_stages));
        }
        if crc_len != 0 && crc_len != CRC_LEN {
            return Err(Error::Parameter(format!("unsupported CRC length {crc_len}")));
        }
        if crc_len > 0 && k <= crc_len {
            return Err(Error::Parameter(format!("K = {k} leaves no payload bits next to a {crc_len}-bit CRC")));
        }
        let n = 1usize << n_stages;
        let info_set = construct_info_set(n, k, design_erasure)?;
        Self::with_info_set(n_stages, info_set, crc_len, design_erasure)
    }

    /// Builds a code around an explicit information set.
    pub fn with_info_set(
        n_stages: usize,
        mut info_set: Vec<usize>,
        crc_len: usize,
        design_erasure: f64,
    ) -> Result<Self> {
        if n_stages > MAX_STAGES {
            return Err(Error::Size(n_stages));
        }
        let n = 1usize << n_stages;
        info_set.sort_unstable();
        info_set.dedup();
        if info_set.is_empty() || info_set.iter().any(|&i| i >= n) {
            return Err(Error::Parameter("information set must be a nonempty subset of 0..N".into()));
        }
        let mut frozen_mask = vec![true; n];
        for &i in &info_set {
            frozen_mask[i] = false;
        }
        let frozen_set = (0..n).filter(|&i| frozen_mask[i]).collect();
        Ok(Self { n_stages, k: info_set.len(), crc_len, design_erasure, info_set, frozen_set, frozen_mask })
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    /// Block length `N`.
    pub fn n(&self) -> usize {
        1 << self.n_stages
    }

    /// Number of information positions, CRC bits included.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn crc_len(&self) -> usize {
        self.crc_len
    }

    /// Number of payload bits carried in front of the CRC.
    pub fn payload_len(&self) -> usize {
        self.k - self.crc_len
    }

    pub fn design_erasure(&self) -> f64 {
        self.design_erasure
    }

    /// Information positions in increasing order.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen_mask[i]
    }

    /// Spreads `K` information bits over a length-`N` source vector.
    pub fn place_info(&self, u_info: &[u8]) -> Result<Vec<u8>> {
        if u_info.len() != self.k {
            return Err(Error::Length { expected: self.k, got: u_info.len() });
        }
        let mut u = vec![0u8; self.n()];
        for (&pos, &bit) in self.info_set.iter().zip(u_info) {
            u[pos] = bit & 1;
        }
        Ok(u)
    }

    /// Reads the information positions of a length-`N` source vector.
    pub fn extract_info(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&i| u[i]).collect()
    }
}

/// Generator matrix `G_N = B_N F^{⊗n}` as rows of bits.
pub fn build_generator(n_stages: usize) -> Result<Vec<Vec<u8>>> {
    if n_stages > MAX_STAGES {
        return Err(Error::Size(n_stages));
    }
    let n = 1usize << n_stages;
    // F^{⊗n}[i][j] = 1 iff the bits of j are a subset of the bits of i.
    let kron = |i: usize, j: usize| u8::from(j & !i == 0);
    Ok((0..n)
        .map(|row| {
            let src = bit_reverse(row, n_stages);
            (0..n).map(|col| kron(src, col)).collect()
        })
        .collect())
}

/// Selects the `k` bit-channels with the smallest Bhattacharyya parameter on
/// a BEC with erasure probability `design_erasure`.
///
/// Ties go to the lower index. The result is sorted.
pub fn construct_info_set(n: usize, k: usize, design_erasure: f64) -> Result<Vec<usize>> {
    if !n.is_power_of_two() || n > 1 << MAX_STAGES {
        return Err(Error::Parameter(format!("block length {n} is not a supported power of two")));
    }
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("K = {k} must lie in 1..={n}")));
    }
    if !(design_erasure > 0.0 && design_erasure < 1.0) {
        return Err(Error::Parameter(format!("design erasure {design_erasure} not in (0, 1)")));
    }
    let z = bhattacharyya(n, design_erasure);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Bhattacharyya parameters of the `n` synthesized BEC bit-channels.
pub fn bhattacharyya(n: usize, design_erasure: f64) -> Vec<f64> {
    let mut z = vec![design_erasure];
    while z.len() < n {
        z = z.iter().flat_map(|&zi| [2.0 * zi - zi * zi, zi * zi]).collect();
    }
    z
}

/// Computes `u G_N` for a full length-`N` source vector with the butterfly
/// network. Since `G_N` is an involution over GF(2), this also maps a
/// codeword back to its source vector.
pub fn transform(u: &[u8]) -> Vec<u8> {
    let n = u.len();
    assert!(n.is_power_of_two(), "length {n} is not a power of two");
    let stages = n.trailing_zeros() as usize;
    let mut v = u.to_vec();
    let mut h = 1;
    while h < n {
        for i in 0..n {
            if i & h == 0 {
                v[i] ^= v[i + h];
            }
        }
        h <<= 1;
    }
    let mut b = vec![0u8; n];
    for (p, &bit) in v.iter().enumerate() {
        b[bit_reverse(p, stages)] = bit;
    }
    b
}

/// Encodes `K` information bits into an `N`-bit codeword.
pub fn encode(spec: &PolarCodeSpec, u_info: &[u8]) -> Result<Vec<u8>> {
    Ok(transform(&spec.place_info(u_info)?))
}

/// Values of every factor-graph layer for source vector `u`.
///
/// `layers[0]` is `u`, `layers[n]` is the codeword in codeword order, and the
/// intermediate layers use butterfly position order. Together they are the
/// assignment of [`FactorGraph`] variables produced by the encoder.
pub fn encode_trace(u: &[u8]) -> Vec<Vec<u8>> {
    let n = u.len();
    let stages = n.trailing_zeros() as usize;
    let mut layers = Vec::with_capacity(stages + 1);
    let mut v = u.to_vec();
    layers.push(v.clone());
    for t in 0..stages {
        let h = 1 << t;
        for i in 0..n {
            if i & h == 0 {
                v[i] ^= v[i + h];
            }
        }
        layers.push(v.clone());
    }
    if let Some(last) = layers.last_mut() {
        let mut b = vec![0u8; n];
        for (p, &bit) in last.iter().enumerate() {
            b[bit_reverse(p, stages)] = bit;
        }
        *last = b;
    }
    layers
}
