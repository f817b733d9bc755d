use clap::{Parser, Subcommand};
use homlab::config::StudyConfig;
use homlab::study::{run_study, write_artifacts};
use homlab::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Experiment runner for the homogenisation laboratory: execute a named
/// study from a flat key = value configuration and emit CSV data plus a
/// plain-text summary with fitted slopes.
#[derive(Parser)]
#[command(name = "homlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (defaults to the config's `out` key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores; HOMLAB_THREADS overrides).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Validate a config file and report every violated rule.
    Validate { config: PathBuf },
}

fn load(config: &PathBuf) -> Result<StudyConfig, Error> {
    let text = std::fs::read_to_string(config)?;
    StudyConfig::from_text(&text)
}

fn init_threads(cli_threads: Option<usize>) {
    let from_env = std::env::var("HOMLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = cli_threads.or(from_env) {
        // ignore failure: the global pool can only be set once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("ok: study '{}' validates", cfg.study.name());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(1)
            }
        },
        Command::Run { config, out, threads } => {
            init_threads(threads);
            let cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(1);
                }
            };
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
            match run_study(&cfg) {
                Ok(artifacts) => {
                    if let Err(e) = write_artifacts(&out_dir, &artifacts) {
                        eprintln!("{e}");
                        return ExitCode::from(2);
                    }
                    if let Some(s) = artifacts.summary() {
                        print!("{s}");
                    }
                    println!("artifacts written to {}", out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e @ Error::Config(_)) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
                Err(e) => {
                    eprintln!("numerical failure: {e}");
                    // preserve whatever partial information exists
                    let partial = format!("study failed: {e}\n");
                    let _ = std::fs::create_dir_all(&out_dir);
                    let _ = std::fs::write(out_dir.join("failure.txt"), partial);
                    ExitCode::from(2)
                }
            }
        }
    }
}
