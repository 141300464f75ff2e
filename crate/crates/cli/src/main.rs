use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wmbench_cli::{run_file, synth_dataset, CliError, ExperimentKind, RunOptions, SynthKind};

#[derive(Parser)]
#[command(name = "wmbench", version, about = "Watermark robustness experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Reject images whose sides are not multiples of the scheme's block size.
    #[arg(long)]
    strict_dims: bool,
}

#[derive(Subcommand)]
enum Command {
    Embed(RunArgs),
    Detect(RunArgs),
    AttackPurify(RunArgs),
    AttackAdv(RunArgs),
    AttackSpoof(RunArgs),
    Mitigate(RunArgs),
    EvalRoc(RunArgs),
    TheoryBound(RunArgs),
    Tradeoff(RunArgs),
    Certify(RunArgs),
    /// Write a synthetic fixture corpus of 256x256 PNGs.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SynthKind::Gray)]
        kind: SynthKind,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Synth { n, seed, out, kind } => {
            return finish(synth_dataset(kind, n, seed, &out).map(|files| {
                println!("wrote {} images to {}", files.len(), out.display());
            }));
        }
        Command::Embed(a) => (ExperimentKind::Embed, a),
        Command::Detect(a) => (ExperimentKind::Detect, a),
        Command::AttackPurify(a) => (ExperimentKind::AttackPurify, a),
        Command::AttackAdv(a) => (ExperimentKind::AttackAdv, a),
        Command::AttackSpoof(a) => (ExperimentKind::AttackSpoof, a),
        Command::Mitigate(a) => (ExperimentKind::Mitigate, a),
        Command::EvalRoc(a) => (ExperimentKind::EvalRoc, a),
        Command::TheoryBound(a) => (ExperimentKind::TheoryBound, a),
        Command::Tradeoff(a) => (ExperimentKind::Tradeoff, a),
        Command::Certify(a) => (ExperimentKind::Certify, a),
    };
    let opts = RunOptions { seed: args.seed, jobs: args.jobs, strict_dims: args.strict_dims };
    finish(run_file(&args.config, Some(kind), &opts).map(|m| {
        println!("{kind}: wrote {} files", m.outputs.len() + 1);
    }))
}

fn finish(r: Result<(), CliError>) -> ExitCode {
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
