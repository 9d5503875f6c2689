use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use textspread_core::pipeline::{run, Command};
use textspread_core::ErrorKind;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Vectorize,
    Project,
    Decompose,
    Forecast,
    Report,
    Synth,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Vectorize => Command::Vectorize,
            Cmd::Project => Command::Project,
            Cmd::Decompose => Command::Decompose,
            Cmd::Forecast => Command::Forecast,
            Cmd::Report => Command::Report,
            Cmd::Synth => Command::Synth,
        }
    }
}

/// Text-based credit spread reconstruction pipeline.
#[derive(Debug, Parser)]
#[command(name = "textspread", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation => 2,
        ErrorKind::Estimation => 3,
        ErrorKind::MissingArtifact => 4,
        ErrorKind::Io => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args.command.into(), &args.config, args.out.as_deref(), args.seed) {
        Ok(m) => {
            log::info!("{} outputs recorded", m.outputs.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("textspread {}: {e}", Command::from(args.command));
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
