use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::modem_channel::{ChannelConfig, TxMode};
use crate::polar_code::{PolarCodeSpec, DEFAULT_DESIGN_ERASURE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    BerSweep,
    BlindDetection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Jlp,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decoder {
    None,
    Sc,
    Scl,
}

/// A detector optionally followed by a polar decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Receiver {
    pub detector: Detector,
    pub decoder: Decoder,
}

impl Receiver {
    pub const fn new(detector: Detector, decoder: Decoder) -> Self {
        Self { detector, decoder }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.detector {
            Detector::Jlp => "JLP",
            Detector::Mmse => "MMSE",
        })?;
        match self.decoder {
            Decoder::None => Ok(()),
            Decoder::Sc => f.write_str("+SC"),
            Decoder::Scl => f.write_str("+SCL"),
        }
    }
}

impl FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let (det, dec) = upper.split_once('+').unwrap_or((upper.as_str(), ""));
        let detector = match det {
            "JLP" => Detector::Jlp,
            "MMSE" => Detector::Mmse,
            _ => return Err(Error::Parameter(format!("unknown detector in receiver '{s}'"))),
        };
        let decoder = match dec {
            "" | "NONE" => Decoder::None,
            "SC" => Decoder::Sc,
            "SCL" => Decoder::Scl,
            _ => return Err(Error::Parameter(format!("unknown decoder in receiver '{s}'"))),
        };
        Ok(Self { detector, decoder })
    }
}

/// Everything an experiment depends on. Outputs are a pure function of this.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_stages: usize,
    pub k: usize,
    pub crc_len: usize,
    pub design_erasure: f64,
    pub rnti: u16,
    pub n_tx: usize,
    pub n_rx: usize,
    pub mode: TxMode,
    pub alpha: f64,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    /// Trimming thresholds; every value is evaluated on the same LP outputs.
    pub betas: Vec<f64>,
    pub candidates: usize,
    pub list_size: usize,
    pub receivers: Vec<Receiver>,
    pub seed: u64,
    pub out_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::BerSweep,
            n_stages: 5,
            k: 16,
            crc_len: 0,
            design_erasure: DEFAULT_DESIGN_ERASURE,
            rnti: 0x4601,
            n_tx: 4,
            n_rx: 4,
            mode: TxMode::SpatialMultiplexing,
            alpha: 1.0,
            snr_grid_db: vec![0.0, 4.0, 8.0, 12.0],
            trials: 1000,
            betas: vec![5.0],
            candidates: 8,
            list_size: 4,
            receivers: vec![Receiver::new(Detector::Jlp, Decoder::None), Receiver::new(Detector::Mmse, Decoder::None)],
            seed: 1,
            out_path: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Parameter(format!("{key}: cannot parse '{v}'")))
}

fn parse_int(key: &str, v: &str) -> Result<u64> {
    let v = v.trim();
    match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).map_err(|_| Error::Parameter(format!("{key}: bad hex '{v}'"))),
        None => parse_num(key, v),
    }
}

/// A comma separated list of numbers or `start:step:stop` ranges.
pub fn parse_grid(key: &str, v: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_num(key, x)?),
            [a, step, b] => {
                let (a, step, b): (f64, f64, f64) = (parse_num(key, a)?, parse_num(key, step)?, parse_num(key, b)?);
                if step.is_nan() || step <= 0.0 || b < a {
                    return Err(Error::Parameter(format!("{key}: bad range '{item}'")));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|i| a + step * i as f64));
            }
            _ => return Err(Error::Parameter(format!("{key}: bad list item '{item}'"))),
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "experiment" => {
                self.experiment = match value {
                    "ber_sweep" | "ber-sweep" | "ber" => ExperimentKind::BerSweep,
                    "blind" | "blind_detection" | "blind-detection" => ExperimentKind::BlindDetection,
                    _ => return Err(Error::Parameter(format!("unknown experiment '{value}'"))),
                }
            }
            "n_stages" => self.n_stages = parse_num(key, value)?,
            "block_len" => {
                let n: usize = parse_num(key, value)?;
                if !n.is_power_of_two() {
                    return Err(Error::Parameter(format!("block_len {n} is not a power of two")));
                }
                self.n_stages = n.trailing_zeros() as usize;
            }
            "k" => self.k = parse_num(key, value)?,
            "crc_len" => self.crc_len = parse_num(key, value)?,
            "design_erasure" => self.design_erasure = parse_num(key, value)?,
            "rnti" => {
                self.rnti = u16::try_from(parse_int(key, value)?)
                    .map_err(|_| Error::Parameter(format!("rnti '{value}' exceeds 16 bits")))?
            }
            "n_tx" => self.n_tx = parse_num(key, value)?,
            "n_rx" => self.n_rx = parse_num(key, value)?,
            "mode" => {
                self.mode = match value.to_ascii_lowercase().as_str() {
                    "sm" | "spatial_multiplexing" => TxMode::SpatialMultiplexing,
                    "td" | "transmit_diversity" => TxMode::TransmitDiversity,
                    _ => return Err(Error::Parameter(format!("unknown mode '{value}'"))),
                }
            }
            "alpha" => self.alpha = parse_num(key, value)?,
            "snr_db" => self.snr_grid_db = parse_grid(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "beta" => self.betas = parse_grid(key, value)?,
            "candidates" => self.candidates = parse_num(key, value)?,
            "list_size" => self.list_size = parse_num(key, value)?,
            "receivers" => {
                self.receivers =
                    value.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?
            }
            "seed" => self.seed = parse_int(key, value)?,
            "out" => self.out_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            _ => return Err(Error::Parameter(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k, v).map_err(|e| Error::Parameter(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn code_spec(&self) -> Result<PolarCodeSpec> {
        PolarCodeSpec::new(self.n_stages, self.k, self.crc_len, self.design_erasure)
    }

    pub fn channel(&self, snr_db: f64) -> ChannelConfig {
        ChannelConfig { n_tx: self.n_tx, n_rx: self.n_rx, snr_db, alpha: self.alpha, mode: self.mode }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Parameter("the SNR grid is empty".into()));
        }
        self.code_spec()?;
        for &snr in &self.snr_grid_db {
            self.channel(snr).validate()?;
        }
        if self.list_size == 0 {
            return Err(Error::Parameter("list_size must be at least 1".into()));
        }
        match self.experiment {
            ExperimentKind::BerSweep => {
                if self.receivers.is_empty() {
                    return Err(Error::Parameter("no receivers configured".into()));
                }
            }
            ExperimentKind::BlindDetection => {
                if self.candidates < 2 {
                    return Err(Error::Parameter(format!("need at least 2 candidates, got {}", self.candidates)));
                }
                if self.betas.is_empty() || self.betas.iter().any(|b| b.is_nan() || *b <= 0.0) {
                    return Err(Error::Parameter("beta values must be positive".into()));
                }
            }
        }
        Ok(())
    }
}
