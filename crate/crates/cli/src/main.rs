mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Defaults};

pub const THREADS_ENV: &str = "PERIOSCOPE_THREADS";

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(3);
    }
    let result = match &cli.command {
        _ if cli.show_config => {
            serde_json::to_string_pretty(&Defaults::new())
                .map_err(perioscope::Error::from)
                .and_then(|s| commands::stdout(&(s + "\n")))
        }
        None => {
            eprintln!("error: no subcommand given; see --help");
            return ExitCode::from(3);
        }
        Some(Command::Detect(c)) => commands::detect(c),
        Some(Command::Batch(c)) => commands::batch(c),
        Some(Command::Synth(c)) => commands::synth(c),
        Some(Command::Bench(c)) => commands::bench(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}
