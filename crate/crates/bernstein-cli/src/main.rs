use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bernstein_cli::config::ExperimentConfig;
use bernstein_cli::fail::Failure;
use bernstein_cli::report::run_report;
use bernstein_cli::sample::run_sample;
use bernstein_cli::verify::run_verify;

/// Harmonic reciprocal process toolkit: verification gates, path sampling,
/// and analytic-vs-empirical report tables.
#[derive(Parser)]
#[command(name = "bernstein", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Override the seed in the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to BERNSTEIN_THREADS, then to all cores.
    /// The draws do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check every identity the configured model must satisfy, as JSON
    Verify {
        #[command(flatten)]
        common: Common,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw paths to paths.csv with a summary.json moment sidecar
    Sample {
        #[command(flatten)]
        common: Common,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Write tidy CSV tables pairing closed forms with estimates
    Report {
        #[command(flatten)]
        common: Common,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let common = match &cli.command {
        Command::Verify { common, .. } | Command::Sample { common, .. } | Command::Report { common, .. } => common,
    };
    init_threads(common.threads);
    let mut cfg = load_config(common)?;
    if let Some(seed) = common.seed {
        cfg.sampler.seed = seed;
    }

    match cli.command {
        Command::Verify { out, .. } => {
            let report = run_verify(&cfg)?;
            let mut text = serde_json::to_string_pretty(&report)
                .map_err(|e| Failure::Io(format!("cannot serialize the report: {e}")))?;
            text.push('\n');
            match out {
                Some(path) => fs::write(&path, text)?,
                None => print!("{text}"),
            }
            for section in &report.sections {
                eprintln!("section {}: {}", section.name, if section.pass { "pass" } else { "FAIL" });
            }
            if report.pass {
                eprintln!("verify: all gates pass");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("verify: gates failed");
                Ok(ExitCode::from(bernstein_cli::fail::EXIT_NUMERICAL))
            }
        }
        Command::Sample { out, .. } => {
            let outcome = run_sample(&cfg, &out)?;
            eprintln!("wrote {}", outcome.csv.display());
            eprintln!("wrote {}", outcome.summary.display());
            match outcome.gate_pass {
                Some(true) => {
                    eprintln!("z-score gate: pass");
                    Ok(ExitCode::SUCCESS)
                }
                Some(false) => {
                    eprintln!("z-score gate: FAIL");
                    Ok(ExitCode::from(bernstein_cli::fail::EXIT_NUMERICAL))
                }
                None => Ok(ExitCode::SUCCESS),
            }
        }
        Command::Report { out, .. } => {
            let outcome = run_report(&cfg, &out)?;
            for file in &outcome.files {
                eprintln!("wrote {}", file.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", common.config.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn init_threads(flag: Option<usize>) {
    let count = flag.or_else(|| {
        std::env::var("BERNSTEIN_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(count) = count {
        // a failure here means the global pool already exists, which only
        // happens in-process during tests; the draws are thread-invariant
        let _ = rayon::ThreadPoolBuilder::new().num_threads(count).build_global();
    }
}
