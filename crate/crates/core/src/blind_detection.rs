//! Candidate trimming for PDCCH blind detection.
//!
//! A valid codeword tends to yield an almost integral LP solution while a
//! block meant for someone else does not. If the smallest fractional metric
//! lies at least `β` standard deviations below the mean of the others, only
//! that candidate is passed to the decoder; otherwise every candidate is.

use crate::error::{Error, Result};

/// Fractional metrics of the `C` candidates of one blind-detection round.
/// `+∞` marks a candidate whose LP could not be solved.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMetrics {
    a: Vec<f64>,
}

impl CandidateMetrics {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::Parameter(format!("need at least 2 candidates, got {}", a.len())));
        }
        if let Some(v) = a.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::Parameter(format!("fractional metric {v} is not ≥ 0")));
        }
        Ok(Self { a })
    }

    pub fn values(&self) -> &[f64] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrimKind {
    /// Only this candidate goes to the decoder.
    Single(usize),
    SendAll,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimStats {
    pub f_min: f64,
    /// Mean of the finite metrics other than the minimum.
    pub mean: f64,
    /// Their sample standard deviation; 0 with fewer than two values.
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimDecision {
    pub kind: TrimKind,
    /// `mean − β·std`
    pub threshold: f64,
    pub stats: TrimStats,
}

impl TrimDecision {
    /// Decoder runs this decision costs out of `c` candidates.
    pub fn decoder_invocations(&self, c: usize) -> usize {
        match self.kind {
            TrimKind::Single(_) => 1,
            TrimKind::SendAll => c,
        }
    }
}

pub fn trim(metrics: &CandidateMetrics, beta: f64) -> Result<TrimDecision> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    let a = metrics.values();
    let Some(argmin) =
        (0..a.len()).filter(|&i| a[i].is_finite()).min_by(|&i, &j| a[i].total_cmp(&a[j]).then(i.cmp(&j)))
    else {
        return Ok(TrimDecision {
            kind: TrimKind::SendAll,
            threshold: f64::NEG_INFINITY,
            stats: TrimStats { f_min: f64::INFINITY, mean: f64::INFINITY, std: 0.0 },
        });
    };
    let f_min = a[argmin];
    let rest: Vec<f64> = a.iter().enumerate().filter(|&(i, v)| i != argmin && v.is_finite()).map(|(_, &v)| v).collect();

    if rest.is_empty() {
        // Every rival failed to solve, so the one solved candidate stands out.
        return Ok(TrimDecision {
            kind: TrimKind::Single(argmin),
            threshold: f64::INFINITY,
            stats: TrimStats { f_min, mean: f64::INFINITY, std: 0.0 },
        });
    }
    let count = rest.len() as f64;
    let mean = rest.iter().sum::<f64>() / count;
    let std = if rest.len() > 1 {
        (rest.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let threshold = if std == 0.0 { mean } else { mean - beta * std };
    let kind = if f_min <= threshold { TrimKind::Single(argmin) } else { TrimKind::SendAll };
    Ok(TrimDecision { kind, threshold, stats: TrimStats { f_min, mean, std } })
}

/// Gaussian tail `Q(β)`, the bound on the probability that trimming drops
/// the true candidate.
pub fn missed_detection_bound(beta: f64) -> f64 {
    0.5 * libm::erfc(beta / std::f64::consts::SQRT_2)
}
