use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dtap::config::{load_config, ConfigError, Overrides, Preset, OUT_ROOT_ENV, DEFAULT_OUT_ROOT};
use dtap::runner::{parse_seed_range, run, sweep, RunError, SweepSpec, INDEX_FILE};
use dtap_core::Algorithm;

#[derive(Parser)]
#[command(name = "dtap", version, about = "Distributed task allocation simulator with WPL and GIGA-WoLF learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named scenario: paper-200k or paper-600k
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    duration: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation
    Run {
        #[command(flatten)]
        common: Common,
        /// wpl or giga-wolf
        #[arg(long)]
        algorithm: Option<Algorithm>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $DTAP_OUT_ROOT/<algorithm>-seed<seed>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-agent policies every `dump_every` windows
        #[arg(long)]
        dump_policies: bool,
    },
    /// Run a grid of seeds (and optionally algorithms and learning rates)
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Inclusive seed range, e.g. 1..5
        #[arg(long)]
        seeds: String,
        /// Comma-separated algorithms
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<Algorithm>,
        /// Comma-separated learning rates
        #[arg(long, value_delimiter = ',')]
        etas: Vec<f64>,
        /// Concurrent runs
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Sweep root (default: $DTAP_OUT_ROOT/sweep)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn preset(common: &Common) -> Result<Option<Preset>, ConfigError> {
    common.preset.as_deref().map(str::parse).transpose()
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run {
            common,
            algorithm,
            seed,
            out,
            dump_policies,
        } => {
            let overrides = Overrides {
                algorithm,
                seed,
                duration: common.duration,
                output_dir: out,
                dump_policies,
                eta: common.eta,
                alpha: common.alpha,
            };
            let config = load_config(common.config.as_deref(), preset(&common)?, &overrides)?;
            let outcome = run(&config)?;
            println!("wrote {}", outcome.output_dir.display());
            print!("{}", outcome.summary.to_text());
        }
        Command::Sweep {
            common,
            seeds,
            algorithms,
            etas,
            parallel,
            out,
        } => {
            let overrides = Overrides {
                duration: common.duration,
                eta: common.eta,
                alpha: common.alpha,
                ..Overrides::default()
            };
            let base = load_config(common.config.as_deref(), preset(&common)?, &overrides)?;
            let out_root = out.unwrap_or_else(|| {
                std::env::var_os(OUT_ROOT_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
                    .join("sweep")
            });
            let spec = SweepSpec {
                base,
                algorithms,
                etas,
                seeds: parse_seed_range(&seeds)?,
                out_root,
                parallel,
            };
            let entries = sweep(&spec)?;
            let failed = entries.iter().filter(|e| e.result.is_err()).count();
            println!(
                "{} runs ({} failed), index at {}",
                entries.len(),
                failed,
                spec.out_root.join(INDEX_FILE).display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
