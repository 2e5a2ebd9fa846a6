use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use riscf::experiment::cdf::cdf_from_csv;
use riscf::experiment::{run_experiment, write_outputs, ExperimentSpec, RunOptions};

#[derive(Parser)]
#[command(
    name = "riscf",
    version,
    about = "Uplink SE of RIS-aided cell-free massive MIMO under EMI"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results.csv, per-curve CDFs and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `mc_trials` from the config (0 disables the oracle).
        #[arg(long)]
        mc_trials: Option<usize>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Fill the runtime_ms column.
        #[arg(long)]
        timings: bool,
    },
    /// Turn a results CSV into empirical CDF curves.
    Cdf {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl From<riscf::Error> for Failure {
    fn from(e: riscf::Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure {
        kind: "io",
        message: format!("{}: {e}", path.display()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            mc_trials,
            threads,
            timings,
        } => {
            if threads == Some(0) {
                return Err(Failure {
                    kind: "argument",
                    message: "--threads must be at least 1".into(),
                });
            }
            let text = std::fs::read_to_string(&config).map_err(|e| io_failure(&config, e))?;
            let spec = ExperimentSpec::from_toml_str(&text)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Failure {
                    kind: "runtime",
                    message: e.to_string(),
                })?;
            let options = RunOptions {
                seed,
                mc_trials,
                timings,
            };
            let mut output = pool.install(|| run_experiment(&spec, &options))?;
            let written = write_outputs(&mut output, &out)?;
            for w in &output.manifest.warnings {
                eprintln!(
                    "warning: closed-form and oracle SE differ by {:.1}% (sweep {}, scenario {}, mode {}, UE {})",
                    100.0 * w.rel_gap,
                    w.sweep_value,
                    w.scenario,
                    w.mode,
                    w.ue
                );
            }
            println!(
                "wrote {} records and {} files to {}",
                output.records.len(),
                written.len(),
                out.display()
            );
        }
        Command::Cdf { input, out } => {
            let reader = BufReader::new(File::open(&input).map_err(|e| io_failure(&input, e))?);
            let writer = BufWriter::new(File::create(&out).map_err(|e| io_failure(&out, e))?);
            let curves = cdf_from_csv(reader, writer)?;
            println!("wrote {} curves to {}", curves.len(), out.display());
        }
    }
    Ok(())
}

fn report(f: Failure) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": f.kind, "message": f.message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            return report(Failure {
                kind: "usage",
                message: e.to_string().trim_end().to_string(),
            })
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}
