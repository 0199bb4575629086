use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdcch_jlp::search_space::{count_cces, enumerate_candidates, ControlRegionConfig, SearchSpaceTable};
use pdcch_jlp::sim_harness::{run_to_csv, ExperimentConfig, ExperimentKind};
use pdcch_jlp::{Error, Result};

#[derive(Parser)]
#[command(name = "pdcch-sim", version, about = "Joint LP PDCCH detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value experiment file.
    #[arg(long)]
    config: PathBuf,
    /// SNR grid in dB, e.g. "0,4,8" or "0:2:12".
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Extra overrides as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// BER/BLER of the configured receivers over an SNR grid.
    BerSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Fractional-metric candidate trimming experiment.
    Blind {
        #[command(flatten)]
        common: Common,
        /// Trimming threshold(s), comma separated.
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        candidates: Option<usize>,
    },
    /// Lists PDCCH candidates for one UE as CSV.
    SearchSpace {
        #[arg(long, default_value = "0x4601")]
        rnti: String,
        #[arg(long, default_value_t = 0)]
        subframe: usize,
        /// CCE count; derived from the control region when absent.
        #[arg(long)]
        cces: Option<usize>,
        #[arg(long, default_value_t = 3)]
        symbols: usize,
        #[arg(long, default_value_t = 50)]
        rb: usize,
        #[arg(long, default_value_t = 0)]
        re_ref: usize,
        #[arg(long, default_value_t = 0)]
        re_phich: usize,
        #[arg(long, default_value_t = 0)]
        re_pcfich: usize,
        #[arg(long, default_value_t = 6)]
        reg_per_cce: usize,
    },
}

fn load(common: &Common, kind: ExperimentKind, extra: &[(&str, Option<String>)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    cfg.experiment = kind;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            overrides.push((k.to_string(), v));
        }
    };
    push("snr_db", common.snr.clone());
    push("trials", common.trials.map(|v| v.to_string()));
    push("seed", common.seed.map(|v| v.to_string()));
    push("alpha", common.alpha.map(|v| v.to_string()));
    for (k, v) in extra {
        push(k, v.clone());
    }
    for (k, v) in &overrides {
        cfg.set(k, v)?;
    }
    for kv in &common.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| Error::Parameter(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    if let Some(out) = &common.out {
        cfg.out_path = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(common: &Common, cfg: &ExperimentConfig) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let mut trace = common.trace.as_ref().map(File::create).transpose()?.map(BufWriter::new);
    let csv = pool.install(|| run_to_csv(cfg, trace.as_mut().map(|w| w as &mut dyn Write)))?;
    if let Some(mut t) = trace {
        t.flush()?;
    }
    match &cfg.out_path {
        Some(path) => std::fs::write(path, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn parse_rnti(s: &str) -> Result<u16> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u16::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| Error::Parameter(format!("bad rnti '{s}'")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BerSweep { common } => {
            let cfg = load(&common, ExperimentKind::BerSweep, &[])?;
            run_experiment(&common, &cfg)
        }
        Command::Blind { common, beta, candidates } => {
            let extra = [("beta", beta), ("candidates", candidates.map(|c| c.to_string()))];
            let cfg = load(&common, ExperimentKind::BlindDetection, &extra)?;
            run_experiment(&common, &cfg)
        }
        Command::SearchSpace { rnti, subframe, cces, symbols, rb, re_ref, re_phich, re_pcfich, reg_per_cce } => {
            let total = match cces {
                Some(n) => n,
                None => count_cces(&ControlRegionConfig {
                    n_symbols: symbols,
                    n_rb: rb,
                    re_ref,
                    re_phich,
                    re_pcfich,
                    reg_per_cce,
                })?,
            };
            let table = SearchSpaceTable::default();
            let mut out = String::from("space,aggregation_level,start_cce\n");
            for c in enumerate_candidates(&table, parse_rnti(&rnti)?, subframe, total)? {
                out.push_str(&format!("{},{},{}\n", c.space, c.aggregation_level, c.start_cce));
            }
            std::io::stdout().write_all(out.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
