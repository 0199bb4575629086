//! QPSK mapping, flat Rayleigh MIMO channels and imperfect CSI.
//!
//! Everything downstream works on the real-valued model `y = H x + n` with
//! `x = [Re x̃; Im x̃]` and `H = [Re H̃, −Im H̃; Im H̃, Re H̃]`. Spatial
//! multiplexing sends one QPSK symbol per transmit antenna per channel use.
//! Transmit diversity uses Alamouti pairs over adjacent channel uses,
//! alternating between antennas {1, 2} and {3, 4}; the receiver combines each
//! pair into an equivalent single-stream model so both detectors see the same
//! linear form.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// QPSK coordinate amplitude.
pub const QPSK_AMPLITUDE: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxMode {
    SpatialMultiplexing,
    TransmitDiversity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub snr_db: f64,
    /// Estimation error variance relative to the noise variance.
    pub alpha: f64,
    pub mode: TxMode,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::Parameter("antenna counts must be at least 1".into()));
        }
        if self.mode == TxMode::TransmitDiversity && !self.n_tx.is_multiple_of(2) {
            return Err(Error::Parameter(format!("transmit diversity pairs antennas; {} is odd", self.n_tx)));
        }
        if self.alpha.is_nan() || self.alpha < 0.0 || !self.snr_db.is_finite() {
            return Err(Error::Parameter("alpha must be ≥ 0 and SNR finite".into()));
        }
        Ok(())
    }

    /// Complex noise variance at unit symbol energy.
    pub fn sigma_n2(&self) -> f64 {
        snr_db_to_sigma2(self.snr_db)
    }

    /// QPSK symbols carried by one channel use.
    pub fn symbols_per_use(&self) -> usize {
        match self.mode {
            TxMode::SpatialMultiplexing => self.n_tx,
            TxMode::TransmitDiversity => 1,
        }
    }
}

pub fn snr_db_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn sigma2_to_snr_db(sigma2: f64) -> f64 {
    -10.0 * sigma2.log10()
}

/// Position of every codeword bit in the real symbol stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BitMap {
    k0: usize,
    dim: usize,
    /// `slots[j] = (use, coordinate)` for codeword bit `j`.
    slots: Vec<(usize, usize)>,
}

impl BitMap {
    /// Layout for `n_bits` bits with `symbols` QPSK symbols per channel use:
    /// bits fill I then Q of symbol 1, then symbol 2, and so on, then the
    /// next channel use.
    pub fn new(n_bits: usize, symbols: usize) -> Result<Self> {
        let per_use = 2 * symbols;
        if symbols == 0 || !n_bits.is_multiple_of(per_use) {
            return Err(Error::Mapping { bits: n_bits, per_use });
        }
        let slots = (0..n_bits)
            .map(|j| {
                let (k, r) = (j / per_use, j % per_use);
                let (a, q) = (r / 2, r % 2);
                (k, a + q * symbols)
            })
            .collect();
        Ok(Self { k0: n_bits / per_use, dim: per_use, slots })
    }

    /// Channel uses per codeword.
    pub fn k0(&self) -> usize {
        self.k0
    }

    /// Real coordinates per channel use.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_bits(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, bit: usize) -> (usize, usize) {
        self.slots[bit]
    }

    pub fn slots(&self) -> &[(usize, usize)] {
        &self.slots
    }
}

/// Gray QPSK per rail: bit `b` ↦ `(1 − 2b)/√2`.
pub fn qpsk_coordinate(bit: u8) -> f64 {
    (1.0 - 2.0 * f64::from(bit & 1)) * QPSK_AMPLITUDE
}

/// Maps a codeword onto real transmit vectors, one per channel use.
pub fn map_bits(codeword: &[u8], n_tx: usize, mode: TxMode) -> Result<(Vec<DVector<f64>>, BitMap)> {
    let symbols = match mode {
        TxMode::SpatialMultiplexing => n_tx,
        TxMode::TransmitDiversity => 1,
    };
    let map = BitMap::new(codeword.len(), symbols)?;
    let mut x = vec![DVector::zeros(map.dim()); map.k0()];
    for (&bit, &(k, c)) in codeword.iter().zip(map.slots()) {
        x[k][c] = qpsk_coordinate(bit);
    }
    Ok((x, map))
}

/// Complex symbols of one channel use from its stacked real vector.
pub fn complex_symbols(x: &DVector<f64>) -> Vec<C64> {
    let n = x.len() / 2;
    (0..n).map(|a| C64::new(x[a], x[n + a])).collect()
}

/// `[Re H, −Im H; Im H, Re H]`
pub fn realify(h: &DMatrix<C64>) -> DMatrix<f64> {
    let (m, n) = h.shape();
    DMatrix::from_fn(2 * m, 2 * n, |i, j| {
        let z = h[(i % m, j % n)];
        match (i < m, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `[Re v; Im v]`
pub fn realify_vector(v: &DVector<C64>) -> DVector<f64> {
    let m = v.len();
    DVector::from_fn(2 * m, |i, _| if i < m { v[i].re } else { v[i - m].im })
}

/// Draws a `CN(0, variance)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

fn complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> DMatrix<C64> {
    // Column-major fill, matching nalgebra's storage order.
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, variance))
}

/// True and estimated channel matrices of one codeword transmission.
///
/// With spatial multiplexing there is one `n_rx × n_tx` matrix per channel
/// use. With transmit diversity there is one `n_rx × 2` matrix per Alamouti
/// pair, holding the gains of the two antennas active for that pair.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h_true: Vec<DMatrix<C64>>,
    pub h_est: Vec<DMatrix<C64>>,
}

impl ChannelRealization {
    /// Draws i.i.d. `CN(0, 1)` Rayleigh gains for `blocks` independent
    /// channel blocks, with perfect estimates.
    pub fn draw<R: Rng + ?Sized>(rows: usize, cols: usize, blocks: usize, rng: &mut R) -> Self {
        let h_true: Vec<_> = (0..blocks).map(|_| complex_matrix(rng, rows, cols, 1.0)).collect();
        Self { h_est: h_true.clone(), h_true }
    }

    /// Channel draw matching `cfg` for a codeword of `n_bits`.
    pub fn for_config<R: Rng + ?Sized>(cfg: &ChannelConfig, n_bits: usize, rng: &mut R) -> Result<Self> {
        let map = BitMap::new(n_bits, cfg.symbols_per_use())?;
        Ok(match cfg.mode {
            TxMode::SpatialMultiplexing => Self::draw(cfg.n_rx, cfg.n_tx, map.k0(), rng),
            TxMode::TransmitDiversity => {
                if map.k0() % 2 != 0 {
                    return Err(Error::Mapping { bits: n_bits, per_use: 4 });
                }
                Self::draw(cfg.n_rx, 2, map.k0() / 2, rng)
            }
        })
    }

    /// Replaces the estimates with `H + E`, `E` i.i.d. `CN(0, α σ²)`, which is
    /// `N(0, α σ²/2)` on every entry of the real form.
    pub fn estimate<R: Rng + ?Sized>(&mut self, alpha: f64, sigma2: f64, rng: &mut R) {
        let var = alpha * sigma2;
        self.h_est = self
            .h_true
            .iter()
            .map(|h| if var > 0.0 { h + complex_matrix(rng, h.nrows(), h.ncols(), var) } else { h.clone() })
            .collect();
    }

    pub fn real_true(&self, k: usize) -> DMatrix<f64> {
        realify(&self.h_true[k])
    }

    pub fn real_est(&self, k: usize) -> DMatrix<f64> {
        realify(&self.h_est[k])
    }
}

/// What a receiver gets to work with: received vectors and its channel
/// estimate, per channel use, in the real model.
#[derive(Debug, Clone)]
pub struct Observation {
    pub y: Vec<DVector<f64>>,
    pub h: Vec<DMatrix<f64>>,
}

impl Observation {
    pub fn k0(&self) -> usize {
        self.y.len()
    }

    pub fn validate(&self, map: &BitMap) -> Result<()> {
        if self.y.len() != map.k0() || self.h.len() != map.k0() {
            return Err(Error::Dimension(format!(
                "{} received vectors and {} channel matrices for {} channel uses",
                self.y.len(),
                self.h.len(),
                map.k0()
            )));
        }
        for (y, h) in self.y.iter().zip(&self.h) {
            if h.ncols() != map.dim() || h.nrows() != y.len() {
                return Err(Error::Dimension(format!(
                    "channel {}×{} against {} received and {} transmitted coordinates",
                    h.nrows(),
                    h.ncols(),
                    y.len(),
                    map.dim()
                )));
            }
        }
        Ok(())
    }
}

/// `y[k] = H[k] x[k] + n[k]` with `n` i.i.d. `N(0, σ²/2)` per real component.
pub fn transmit<R: Rng + ?Sized>(
    x: &[DVector<f64>],
    h_real: &[DMatrix<f64>],
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    if x.len() != h_real.len() {
        return Err(Error::Dimension(format!("{} symbol vectors, {} channels", x.len(), h_real.len())));
    }
    let std = (sigma2 / 2.0).sqrt();
    x.iter()
        .zip(h_real)
        .map(|(xk, hk)| {
            if hk.ncols() != xk.len() {
                return Err(Error::Dimension(format!("H has {} columns, x has {}", hk.ncols(), xk.len())));
            }
            let mut y = hk * xk;
            for v in y.iter_mut() {
                let n: f64 = rng.sample(StandardNormal);
                *v += std * n;
            }
            Ok(y)
        })
        .collect()
}

/// Alamouti transmission and receiver combining.
///
/// `x` holds one QPSK symbol per channel use (2 real coordinates); uses
/// `2p` and `2p + 1` form pair `p` over channel block `p`. Each symbol goes
/// out at half power on each of the two antennas so the total transmit energy
/// per resource element stays 1. The combiner uses the estimated gains and
/// normalises so that with perfect CSI the output is `√(g/2)·s + n`,
/// `n ~ CN(0, σ²)`, `g = Σ|h|²`.
pub fn transmit_sfbc<R: Rng + ?Sized>(
    x: &[DVector<f64>],
    realization: &ChannelRealization,
    sigma2: f64,
    rng: &mut R,
) -> Result<Observation> {
    if x.len() != 2 * realization.h_true.len() {
        return Err(Error::Dimension(format!(
            "{} channel uses need {} Alamouti blocks, got {}",
            x.len(),
            x.len() / 2,
            realization.h_true.len()
        )));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut y = Vec::with_capacity(x.len());
    let mut h = Vec::with_capacity(x.len());
    for (p, (ht, he)) in realization.h_true.iter().zip(&realization.h_est).enumerate() {
        let s1 = C64::new(x[2 * p][0], x[2 * p][1]);
        let s2 = C64::new(x[2 * p + 1][0], x[2 * p + 1][1]);
        let mut z1 = C64::new(0.0, 0.0);
        let mut z2 = C64::new(0.0, 0.0);
        let mut gain = 0.0;
        for r in 0..ht.nrows() {
            let (ha, hb) = (ht[(r, 0)], ht[(r, 1)]);
            let r1 = (ha * s1 + hb * s2) * scale + complex_gaussian(rng, sigma2);
            let r2 = (-ha * s2.conj() + hb * s1.conj()) * scale + complex_gaussian(rng, sigma2);
            let (ea, eb) = (he[(r, 0)], he[(r, 1)]);
            z1 += ea.conj() * r1 + eb * r2.conj();
            z2 += eb.conj() * r1 - ea * r2.conj();
            gain += ea.norm_sqr() + eb.norm_sqr();
        }
        let norm = gain.sqrt().max(f64::MIN_POSITIVE);
        let g_eq = (gain / 2.0).sqrt();
        for z in [z1, z2] {
            let z = z / norm;
            y.push(DVector::from_vec(vec![z.re, z.im]));
            h.push(DMatrix::from_row_slice(2, 2, &[g_eq, 0.0, 0.0, g_eq]));
        }
    }
    Ok(Observation { y, h })
}

/// One complete codeword transmission: mapping, channel draw, noise and
/// channel estimation. Returns the receiver's view, the bit layout and the
/// transmitted real vectors.
pub fn transmit_codeword<R: Rng + ?Sized>(
    codeword: &[u8],
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<(Observation, BitMap, Vec<DVector<f64>>)> {
    cfg.validate()?;
    let sigma2 = cfg.sigma_n2();
    let (x, map) = map_bits(codeword, cfg.n_tx, cfg.mode)?;
    let mut realization = ChannelRealization::for_config(cfg, codeword.len(), rng)?;
    let obs = match cfg.mode {
        TxMode::SpatialMultiplexing => {
            let h_true: Vec<_> = (0..map.k0()).map(|k| realization.real_true(k)).collect();
            let y = transmit(&x, &h_true, sigma2, rng)?;
            realization.estimate(cfg.alpha, sigma2, rng);
            let h = (0..map.k0()).map(|k| realization.real_est(k)).collect();
            Observation { y, h }
        }
        TxMode::TransmitDiversity => {
            realization.estimate(cfg.alpha, sigma2, rng);
            transmit_sfbc(&x, &realization, sigma2, rng)?
        }
    };
    Ok((obs, map, x))
}
