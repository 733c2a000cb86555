use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rkbs_core::harness::{exit_code_for, run, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "rkbs",
    version,
    about = "Kernel machines over network parameters: sampling, interpolation, regularization, training"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a candidate set and write candidates.json
    Sample(RunArgs),
    /// Minimum norm interpolation with candidate refinement
    Mni(RunArgs),
    /// Loss plus lambda times total variation
    Reg(RunArgs),
    /// Train an expansion by gradient descent
    Train(RunArgs),
    /// Re-verify model.json against candidates.json in the output directory
    Verify(RunArgs),
    /// Regularization path over descending lambda values
    Path(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Cmd::Sample(a) => (Command::Sample, a),
        Cmd::Mni(a) => (Command::Mni, a),
        Cmd::Reg(a) => (Command::Reg, a),
        Cmd::Train(a) => (Command::Train, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Path(a) => (Command::Path, a),
    };

    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let Some(out) = args.out.or_else(|| cfg.out.clone()) else {
        eprintln!("error: no output directory; pass --out or set `out` in the config");
        return ExitCode::from(2);
    };

    match run(command, &cfg, &out) {
        Ok(outcome) => {
            if outcome.passed() {
                if outcome.trivial {
                    println!("{}: ok (trivial solution)", command.name());
                } else {
                    println!("{}: ok", command.name());
                }
            } else {
                eprintln!(
                    "{}: verification failed: {}",
                    command.name(),
                    outcome.failed_checks.join(", ")
                );
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
