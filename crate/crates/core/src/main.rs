use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chaos_ent::xcli::{self, ExperimentConfig, Overrides, Scale};
use chaos_ent::Error;

#[derive(Parser)]
#[command(name = "chaos-ent", version, about = "Entanglement and quantum chaos experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory; falls back to the config, then $CHAOS_ENT_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in experiments.
    List,
    /// Run the acceptance checks.
    Verify {
        #[arg(long)]
        quick: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidCut(_) | Error::Dimension(_) => 2,
        Error::ResourceGuard(_) => 3,
        _ => 1,
    }
}

fn run(config: PathBuf, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>) -> Result<(), Error> {
    let overrides = Overrides { seed, workers, output_dir: out };
    let cfg = ExperimentConfig::load(&config, &overrides)?;
    let result = xcli::run_experiment(&cfg)?;
    for p in xcli::write_outputs(&result, &cfg)? {
        println!("{}", p.display());
    }
    eprintln!("{} finished in {:.2} s", cfg.experiment, result.wall_time_s);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, workers, out } => match run(config, seed, workers, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
        Command::List => {
            for e in xcli::registry() {
                println!("{:<24} {:<22} {}", e.name, e.anchor, e.description);
            }
            ExitCode::SUCCESS
        }
        Command::Verify { quick } => {
            let (reports, text) = xcli::verify(if quick { Scale::Quick } else { Scale::Full });
            print!("{text}");
            if reports.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
