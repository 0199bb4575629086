//! Control-region arithmetic and PDCCH candidate enumeration (LTE-style).

use std::fmt;

use crate::error::{Error, Result};

/// CCEs reserved for the common search space.
pub const CSS_CCES: usize = 16;
const HASH_A: u64 = 39_827;
const HASH_D: u64 = 65_537;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlRegionConfig {
    /// OFDM symbols in the control region, 1 to 3.
    pub n_symbols: usize,
    pub n_rb: usize,
    pub re_ref: usize,
    pub re_phich: usize,
    pub re_pcfich: usize,
    pub reg_per_cce: usize,
}

impl Default for ControlRegionConfig {
    fn default() -> Self {
        Self { n_symbols: 3, n_rb: 50, re_ref: 0, re_phich: 0, re_pcfich: 0, reg_per_cce: 6 }
    }
}

impl ControlRegionConfig {
    pub fn total_res(&self) -> usize {
        self.n_symbols * 12 * self.n_rb
    }

    /// Resource elements left for PDCCH after the overheads.
    pub fn pdcch_res(&self) -> Result<usize> {
        let overhead = self.re_ref + self.re_phich + self.re_pcfich;
        self.total_res().checked_sub(overhead).ok_or_else(|| {
            Error::Config(format!("overheads of {overhead} REs exceed the {} available", self.total_res()))
        })
    }
}

pub fn count_cces(cfg: &ControlRegionConfig) -> Result<usize> {
    if !(1..=3).contains(&cfg.n_symbols) {
        return Err(Error::Config(format!("{} control symbols; expected 1 to 3", cfg.n_symbols)));
    }
    if cfg.reg_per_cce == 0 {
        return Err(Error::Config("a CCE needs at least one REG".into()));
    }
    Ok(cfg.pdcch_res()? / (cfg.reg_per_cce * 12))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SearchSpace {
    Common,
    UeSpecific,
}

impl fmt::Display for SearchSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchSpace::Common => "CSS",
            SearchSpace::UeSpecific => "UESS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchSpaceRow {
    pub space: SearchSpace,
    pub aggregation_level: usize,
    pub size_in_cces: usize,
    pub n_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSpaceTable {
    pub rows: Vec<SearchSpaceRow>,
    /// DCI formats monitored in the common search space.
    pub css_dci_formats: usize,
}

impl Default for SearchSpaceTable {
    fn default() -> Self {
        use SearchSpace::*;
        let row = |space, aggregation_level, size_in_cces, n_candidates| SearchSpaceRow {
            space,
            aggregation_level,
            size_in_cces,
            n_candidates,
        };
        Self {
            rows: vec![
                row(UeSpecific, 1, 6, 6),
                row(UeSpecific, 2, 12, 6),
                row(UeSpecific, 4, 8, 2),
                row(UeSpecific, 8, 16, 2),
                row(Common, 4, 16, 4),
                row(Common, 8, 16, 2),
            ],
            css_dci_formats: 2,
        }
    }
}

impl SearchSpaceTable {
    pub fn candidates_in(&self, space: SearchSpace) -> usize {
        self.rows.iter().filter(|r| r.space == space).map(|r| r.n_candidates).sum()
    }

    /// Common-space blind decodes, counting each DCI format separately.
    pub fn css_blind_decodes(&self) -> usize {
        self.candidates_in(SearchSpace::Common) * self.css_dci_formats
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub start_cce: usize,
    pub aggregation_level: usize,
    pub space: SearchSpace,
}

/// `Y_k` for subframe `k`: `Y_k = 39827·Y_{k−1} mod 65537`, `Y_{−1} = rnti`.
pub fn uess_hash(rnti: u16, subframe: usize) -> u64 {
    let mut y = u64::from(rnti);
    for _ in 0..=subframe {
        y = (HASH_A * y) % HASH_D;
    }
    y
}

/// Lists every candidate of `table`, row by row. Common-space candidates
/// start at `L·i` inside the first 16 CCEs; UE-specific ones at
/// `L·((Y_k + i) mod ⌊N_CCE/L⌋)`.
pub fn enumerate_candidates(
    table: &SearchSpaceTable,
    rnti: u16,
    subframe: usize,
    total_cces: usize,
) -> Result<Vec<Candidate>> {
    let y = uess_hash(rnti, subframe);
    let mut out = Vec::new();
    for row in &table.rows {
        let l = row.aggregation_level;
        if l == 0 {
            return Err(Error::Parameter("aggregation level 0".into()));
        }
        let span = match row.space {
            SearchSpace::Common => {
                if total_cces < CSS_CCES {
                    return Err(Error::Enumeration { need: CSS_CCES, have: total_cces });
                }
                CSS_CCES
            }
            SearchSpace::UeSpecific => total_cces,
        };
        let slots = span / l;
        if slots < row.n_candidates {
            return Err(Error::Enumeration { need: row.n_candidates * l, have: span });
        }
        for i in 0..row.n_candidates {
            let slot = match row.space {
                SearchSpace::Common => i,
                SearchSpace::UeSpecific => ((y + i as u64) % slots as u64) as usize,
            };
            out.push(Candidate { start_cce: l * slot, aggregation_level: l, space: row.space });
        }
    }
    Ok(out)
}
