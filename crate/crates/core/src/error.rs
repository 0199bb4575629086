use thiserror::Error;

use crate::lp_solver::LpStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block length exponent {0} out of range (0..={max})", max = crate::polar_code::MAX_STAGES)]
    Size(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    #[error("cannot map {bits} bits onto {per_use}-bit channel uses")]
    Mapping { bits: usize, per_use: usize },

    #[error("inconsistent dimensions: {0}")]
    Dimension(String),

    #[error("LP solver stopped with status {0:?}")]
    Solver(LpStatus),

    #[error("invalid control region: {0}")]
    Config(String),

    #[error("not enough CCEs: need {need}, have {have}")]
    Enumeration { need: usize, have: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
