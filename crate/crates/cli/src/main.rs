use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mmf_core::codec::write_bank;
use mmf_core::harness::{run, run_order, Experiment, OutputFormat, SweepConfig};
use mmf_core::{build_bank, spectral_efficiency, synthesize_channel, Error};

#[derive(Parser)]
#[command(
    name = "mmf",
    version,
    about = "Multimode-fiber frequency-encoding simulator"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file applied over the experiment defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Symbol error rate against frequency spacing.
    SerSpacing,
    /// Per-core and fused symbol error rate against sampling rate.
    SerRate,
    /// Frequency and PAM level error rates against SNR.
    Pam,
    /// Error-offset histogram at an auto-tuned high-SER spacing.
    Offsets,
    /// Classification error under greedy and original token ordering.
    Semantic,
    /// Greedy cosine-similarity ordering of an embedding file.
    Order {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 0)]
        start: usize,
    },
    /// Build a fingerprint bank from the configured fiber, receiver and alphabet.
    BankBuild,
    /// Spectral efficiency in bits/s/Hz.
    Eff {
        /// Symbol rate; defaults to 1 / rx.symbol_period_s.
        #[arg(long)]
        rate_hz: Option<f64>,
        /// Bits per symbol; defaults to log2(alphabet.size).
        #[arg(long)]
        bits: Option<f64>,
        /// Defaults to alphabet.spacing_hz.
        #[arg(long)]
        spacing_hz: Option<f64>,
        /// Defaults to alphabet.size.
        #[arg(long)]
        channels: Option<usize>,
    },
}

fn load_config(common: &Common, experiment: Experiment) -> Result<SweepConfig, Error> {
    let base = SweepConfig::preset(experiment);
    let mut cfg = match &common.config {
        Some(path) => SweepConfig::from_file(path, base)?,
        None => base,
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    let common = &cli.common;
    let format = match common.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let experiment = match &cli.command {
        Command::SerSpacing => Some(Experiment::SerSpacing),
        Command::SerRate => Some(Experiment::SerRate),
        Command::Pam => Some(Experiment::Pam),
        Command::Offsets => Some(Experiment::Offsets),
        Command::Semantic => Some(Experiment::Semantic),
        _ => None,
    };
    if let Some(e) = experiment {
        let cfg = load_config(common, e)?;
        let table = run(e, &cfg)?;
        return emit(common.out.as_deref(), &table.render(format));
    }
    match &cli.command {
        Command::Order { embeddings, start } => {
            let out = common.out.as_deref().ok_or_else(|| {
                Error::Config("order needs --out for the permutation file".into())
            })?;
            run_order(embeddings, *start, out)?;
            Ok(())
        }
        Command::BankBuild => {
            let cfg = load_config(common, Experiment::SerSpacing)?;
            let out = common
                .out
                .as_deref()
                .ok_or_else(|| Error::Config("bank-build needs --out for the bank file".into()))?;
            let channel = synthesize_channel(&cfg.fiber, cfg.cores)?;
            let bank = build_bank(&channel, &cfg.alphabet, &cfg.rx)?;
            write_bank(&bank, out)
        }
        Command::Eff {
            rate_hz,
            bits,
            spacing_hz,
            channels,
        } => {
            let cfg = load_config(common, Experiment::SerSpacing)?;
            let rate = rate_hz.unwrap_or(1.0 / cfg.rx.symbol_period_s);
            let bits = bits.unwrap_or(cfg.alphabet.bits_per_symbol());
            let spacing = spacing_hz.unwrap_or(cfg.alphabet.spacing_hz);
            let channels = channels.unwrap_or(cfg.alphabet.size);
            if !(rate > 0.0 && bits > 0.0 && spacing > 0.0 && channels > 0) {
                return Err(Error::Config("eff inputs must all be positive".into()));
            }
            emit(
                common.out.as_deref(),
                &format!(
                    "{:.9}\n",
                    spectral_efficiency(rate, bits, spacing, channels)
                ),
            )
        }
        _ => unreachable!("experiments handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mmf: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
