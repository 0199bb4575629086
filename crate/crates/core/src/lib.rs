//! Joint linear-programming detection of polar-coded control messages over
//! MIMO channels, fractional-metric blind detection of PDCCH candidates, and
//! decoupled MMSE + SC/SCL baselines.

pub mod baseline_rx;
pub mod blind_detection;
pub mod error;
pub mod jlp_detector;
pub mod lp_solver;
pub mod modem_channel;
pub mod polar_code;
pub mod search_space;
pub mod sim_harness;

pub use error::{Error, Result};
