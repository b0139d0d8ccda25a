//! `clfsynth`: synthesize, verify and simulate non-zeno CLF certificates, and
//! run the benchmark catalog.

mod bench;
mod dump;
mod exit;
mod simulate;
mod source;
mod synth;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exit::Failure;

#[derive(Parser)]
#[command(name = "clfsynth", version, about = "Non-zeno control Lyapunov function synthesis for switched systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a certificate for one model.
    Synth(synth::SynthArgs),
    /// Re-check a certificate against its model by sampling.
    Verify(verify::VerifyArgs),
    /// Simulate the switching law of a certificate from one initial state.
    Sim(simulate::SimArgs),
    /// Run catalog benchmarks and compare against the expected pattern.
    Bench(bench::BenchArgs),
}

/// Where the model comes from: a JSON file or a catalog id.
#[derive(Args, Clone, Debug)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Model JSON file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Catalog benchmark id (1-21).
    #[arg(long)]
    pub bench: Option<u32>,
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("CLF_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Sim(a) => simulate::run(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, message }) => {
            eprintln!("clfsynth: {message}");
            ExitCode::from(code)
        }
    }
}
