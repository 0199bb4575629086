//! Monte Carlo experiment driver.
//!
//! Every trial draws from its own generator, derived from the experiment seed,
//! the SNR point and the trial index, so results do not depend on how rayon
//! schedules the work. Per-trial outcomes are collected in index order and
//! reduced sequentially.

mod config;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{parse_grid, Decoder, Detector, ExperimentConfig, ExperimentKind, Receiver};

use crate::baseline_rx::{hard_decisions, mmse_detect, sc_decode, scl_decode, SclConfig};
use crate::blind_detection::{trim, CandidateMetrics, TrimKind};
use crate::error::{Error, Result};
use crate::jlp_detector::JlpDetector;
use crate::modem_channel::transmit_codeword;
use crate::polar_code::{attach_crc, check_crc, encode, PolarCodeSpec};

pub const BER_HEADER: &str = "receiver,snr_db,alpha,trials,bit_errors,block_errors,ber,bler";
pub const BLIND_HEADER: &str = "snr_db,beta,alpha,trials,missed,missed_rate,usage_reduction,decoder_invocations";

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for trial `trial_index` of an experiment seeded with `seed`.
///
/// The 256-bit ChaCha key is four successive splitmix64 outputs starting
/// from `seed ⊕ splitmix64(trial_index)`. That start value is a bijection of
/// the index for a fixed seed, so distinct trials never share a key.
pub fn rng_stream(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut state = seed ^ splitmix64(trial_index);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(state).to_le_bytes());
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    }
    ChaCha8Rng::from_seed(key)
}

/// Seed for SNR point `point`, so that each point gets fresh streams.
fn point_seed(seed: u64, point: usize) -> u64 {
    splitmix64(seed ^ splitmix64(0xA5A5_0000 ^ point as u64))
}

fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn count_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// One DCI: a random payload, its RNTI-masked CRC when configured, and the codeword.
fn draw_message<R: Rng + ?Sized>(spec: &PolarCodeSpec, rnti: u16, rng: &mut R) -> Result<(Vec<u8>, Vec<u8>)> {
    let payload = random_bits(rng, spec.payload_len());
    let info = if spec.crc_len() > 0 { attach_crc(&payload, rnti) } else { payload };
    let codeword = encode(spec, &info)?;
    Ok((info, codeword))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRow {
    pub receiver: String,
    pub snr_db: f64,
    pub alpha: f64,
    pub trials: usize,
    pub bit_errors: u64,
    pub block_errors: u64,
    /// Bits compared per block: `N` after a bare detector, `K` after a decoder.
    pub bits_per_block: usize,
}

impl BerRow {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / (self.trials * self.bits_per_block) as f64
    }

    pub fn bler(&self) -> f64 {
        self.block_errors as f64 / self.trials as f64
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.receiver,
            self.snr_db,
            self.alpha,
            self.trials,
            self.bit_errors,
            self.block_errors,
            self.ber(),
            self.bler()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlindRow {
    pub snr_db: f64,
    pub beta: f64,
    pub alpha: f64,
    pub trials: usize,
    pub candidates: usize,
    /// Trials where trimming dropped the true candidate or its decode failed.
    pub missed: u64,
    /// Trials where trimming alone dropped the true candidate.
    pub trim_missed: u64,
    pub single_decisions: u64,
    pub single_correct: u64,
    pub sendall_decisions: u64,
    pub decoder_invocations: u64,
}

impl BlindRow {
    pub fn missed_rate(&self) -> f64 {
        self.missed as f64 / self.trials as f64
    }

    /// Fraction of trials resolved by a single correct decode.
    pub fn usage_reduction(&self) -> f64 {
        self.single_correct as f64 / self.trials as f64
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.snr_db,
            self.beta,
            self.alpha,
            self.trials,
            self.missed,
            self.missed_rate(),
            self.usage_reduction(),
            self.decoder_invocations
        )
    }
}

pub fn ber_csv(rows: &[BerRow]) -> String {
    let mut s = format!("{BER_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

pub fn blind_csv(rows: &[BlindRow]) -> String {
    let mut s = format!("{BLIND_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Serialize)]
struct BerTrace {
    snr_db: f64,
    trial: usize,
    bit_errors: Vec<u64>,
    objective: Option<f64>,
    f: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct BlindTrace {
    snr_db: f64,
    trial: usize,
    truth: usize,
    f: Vec<f64>,
    decoded: bool,
}

fn write_trace<T: Serialize>(out: &mut Option<&mut dyn Write>, records: &[T]) -> Result<()> {
    if let Some(w) = out {
        for r in records {
            serde_json::to_writer(&mut **w, r).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn require(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    cfg.validate()?;
    if cfg.experiment != kind {
        return Err(Error::Parameter(format!("config describes {:?}, not {kind:?}", cfg.experiment)));
    }
    Ok(())
}

/// Decodes `llr` with the receiver's decoder and returns the bits compared
/// against the ground truth.
fn receiver_bits(rx: Receiver, llr: &[f64], spec: &PolarCodeSpec, scl: &SclConfig) -> Result<Vec<u8>> {
    Ok(match rx.decoder {
        Decoder::None => hard_decisions(llr),
        Decoder::Sc => sc_decode(llr, spec)?.info,
        Decoder::Scl => scl_decode(llr, spec, scl)?.block.info,
    })
}

fn ber_trial(
    cfg: &ExperimentConfig,
    spec: &PolarCodeSpec,
    jlp: &JlpDetector,
    snr_db: f64,
    seed: u64,
    trial: usize,
) -> Result<BerTrace> {
    let mut rng = rng_stream(seed, trial as u64);
    let channel = cfg.channel(snr_db);
    let (info, codeword) = draw_message(spec, cfg.rnti, &mut rng)?;
    let (obs, map, _) = transmit_codeword(&codeword, &channel, &mut rng)?;
    let scl = SclConfig { list_size: cfg.list_size, use_crc_selection: spec.crc_len() > 0, rnti: cfg.rnti };

    let needs = |d| cfg.receivers.iter().any(|r| r.detector == d);
    let jlp_out = if needs(Detector::Jlp) { Some(jlp.detect(&obs, &map)?) } else { None };
    let mmse_llr = if needs(Detector::Mmse) { Some(mmse_detect(&obs, &map, channel.sigma_n2())?.llr) } else { None };

    let mut bit_errors = Vec::with_capacity(cfg.receivers.len());
    for &rx in &cfg.receivers {
        let llr = match rx.detector {
            Detector::Jlp => &jlp_out.as_ref().expect("JLP output").llr,
            Detector::Mmse => mmse_llr.as_ref().expect("MMSE output"),
        };
        let bits = receiver_bits(rx, llr, spec, &scl)?;
        let truth = if rx.decoder == Decoder::None { &codeword } else { &info };
        bit_errors.push(count_errors(&bits, truth));
    }
    Ok(BerTrace {
        snr_db,
        trial,
        bit_errors,
        objective: jlp_out.as_ref().map(|r| r.objective),
        f: jlp_out.as_ref().map(|r| r.f),
    })
}

/// BER/BLER of every configured receiver at every SNR point.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<BerRow>> {
    run_ber_sweep_traced(cfg, None)
}

pub fn run_ber_sweep_traced(cfg: &ExperimentConfig, mut trace: Option<&mut dyn Write>) -> Result<Vec<BerRow>> {
    require(cfg, ExperimentKind::BerSweep)?;
    let spec = cfg.code_spec()?;
    let jlp = JlpDetector::new(&spec);
    let mut rows = Vec::new();
    for (point, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let seed = point_seed(cfg.seed, point);
        let trials: Vec<BerTrace> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| ber_trial(cfg, &spec, &jlp, snr_db, seed, t))
            .collect::<Result<_>>()?;
        write_trace(&mut trace, &trials)?;
        for (i, rx) in cfg.receivers.iter().enumerate() {
            let bits_per_block = if rx.decoder == Decoder::None { spec.n() } else { spec.k() };
            let (mut bit_errors, mut block_errors) = (0, 0);
            for t in &trials {
                bit_errors += t.bit_errors[i];
                block_errors += u64::from(t.bit_errors[i] > 0);
            }
            rows.push(BerRow {
                receiver: rx.to_string(),
                snr_db,
                alpha: cfg.alpha,
                trials: cfg.trials,
                bit_errors,
                block_errors,
                bits_per_block,
            });
        }
    }
    Ok(rows)
}

fn blind_trial(
    cfg: &ExperimentConfig,
    spec: &PolarCodeSpec,
    jlp: &JlpDetector,
    snr_db: f64,
    seed: u64,
    trial: usize,
) -> Result<BlindTrace> {
    let mut rng = rng_stream(seed, trial as u64);
    let channel = cfg.channel(snr_db);
    let (info, codeword) = draw_message(spec, cfg.rnti, &mut rng)?;
    let truth = rng.random_range(0..cfg.candidates);
    let mut f = Vec::with_capacity(cfg.candidates);
    let mut true_llr = Vec::new();
    for i in 0..cfg.candidates {
        let bits = if i == truth { codeword.clone() } else { random_bits(&mut rng, spec.n()) };
        let (obs, map, _) = transmit_codeword(&bits, &channel, &mut rng)?;
        let r = jlp.detect(&obs, &map)?;
        f.push(r.f);
        if i == truth {
            true_llr = r.llr;
        }
    }
    let scl = SclConfig { list_size: cfg.list_size, use_crc_selection: spec.crc_len() > 0, rnti: cfg.rnti };
    let out = scl_decode(&true_llr, spec, &scl)?;
    let crc_ok = spec.crc_len() == 0 || check_crc(&out.block.info, cfg.rnti);
    Ok(BlindTrace { snr_db, trial, truth, f, decoded: crc_ok && out.block.info == info })
}

/// Candidate trimming with `C − 1` random decoys per trial; one row per
/// (SNR, β). All β values share the same detector outputs.
pub fn run_blind_detection(cfg: &ExperimentConfig) -> Result<Vec<BlindRow>> {
    run_blind_detection_traced(cfg, None)
}

pub fn run_blind_detection_traced(cfg: &ExperimentConfig, mut trace: Option<&mut dyn Write>) -> Result<Vec<BlindRow>> {
    require(cfg, ExperimentKind::BlindDetection)?;
    let spec = cfg.code_spec()?;
    let jlp = JlpDetector::new(&spec);
    let c = cfg.candidates;
    let mut rows = Vec::new();
    for (point, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let seed = point_seed(cfg.seed, point);
        let trials: Vec<BlindTrace> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| blind_trial(cfg, &spec, &jlp, snr_db, seed, t))
            .collect::<Result<_>>()?;
        write_trace(&mut trace, &trials)?;
        for &beta in &cfg.betas {
            let mut row = BlindRow {
                snr_db,
                beta,
                alpha: cfg.alpha,
                trials: cfg.trials,
                candidates: c,
                missed: 0,
                trim_missed: 0,
                single_decisions: 0,
                single_correct: 0,
                sendall_decisions: 0,
                decoder_invocations: 0,
            };
            for t in &trials {
                let decision = trim(&CandidateMetrics::new(t.f.clone())?, beta)?;
                row.decoder_invocations += decision.decoder_invocations(c) as u64;
                let dropped = match decision.kind {
                    TrimKind::Single(i) => {
                        row.single_decisions += 1;
                        row.single_correct += u64::from(i == t.truth);
                        i != t.truth
                    }
                    TrimKind::SendAll => {
                        row.sendall_decisions += 1;
                        false
                    }
                };
                row.trim_missed += u64::from(dropped);
                row.missed += u64::from(dropped || !t.decoded);
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Runs whichever experiment `cfg` describes and returns its CSV text.
pub fn run_to_csv(cfg: &ExperimentConfig, trace: Option<&mut dyn Write>) -> Result<String> {
    match cfg.experiment {
        ExperimentKind::BerSweep => Ok(ber_csv(&run_ber_sweep_traced(cfg, trace)?)),
        ExperimentKind::BlindDetection => Ok(blind_csv(&run_blind_detection_traced(cfg, trace)?)),
    }
}
