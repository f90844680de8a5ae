use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use uavcover::config::validate_config;
use uavcover::experiment::{run_file, RunOptions};

#[derive(Parser)]
#[command(name = "uavcover", about = "Plan UAV base stations for indoor coverage of high-rise buildings")]
struct Cli {
    /// Worker threads for sweep points and per-cluster placement (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write its CSV outputs.
    Run {
        spec: PathBuf,
        /// Directory for the CSV outputs (overrides experiment.output_dir).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Replace the roster, PSO and k-means base seeds.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check an experiment file without running it.
    Validate { spec: PathBuf },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match cli.command {
        Command::Version => {
            println!("uavcover {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Validate { spec } => match validate_config(&spec) {
            Ok(report) => {
                for w in &report.warnings {
                    println!("warning: {}: {w}", spec.display());
                }
                for e in &report.errors {
                    println!("error: {}: {e}", spec.display());
                }
                if report.is_valid() {
                    println!("{}: valid", spec.display());
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Run {
            spec,
            output_dir,
            seed,
        } => match run_file(&spec, &RunOptions { output_dir, seed }) {
            Ok(summary) => {
                for f in &summary.files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
