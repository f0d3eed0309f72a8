mod args;
mod commands;
mod config;
mod emit;
mod error;
mod verify;

use std::io::Write;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command, Format};
use error::{CliError, Result};

fn parse() -> Result<Cli> {
    let cmd = Cli::command().args_override_self(true).mut_subcommands(|s| s.args_override_self(true));
    let argv = config::merge(std::env::args_os().collect(), &cmd)?;
    let matches = cmd.get_matches_from(argv);
    Cli::from_arg_matches(&matches).map_err(|e| e.exit())
}

fn run(cli: &Cli) -> Result<Vec<String>> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    let out = match &cli.command {
        Command::Formulas(a) => commands::formulas(a)?,
        Command::Exact(a) => commands::exact_cmd(a)?,
        Command::Contours(a) => commands::contours_cmd(a)?,
        Command::Sample(a) => commands::sample_cmd(a, cli.seed)?,
        Command::Freeenergy(a) => commands::freeenergy_cmd(a)?,
        Command::Verify(a) => verify::verify_cmd(a, cli.seed)?,
    };
    let text = match cli.format {
        Format::Json => emit::json_string(&emit::envelope(cli.command.name(), serde_json::to_value(cli)?, out.record)),
        Format::Csv => emit::csv_string(&out.table)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
        }
    }
    Ok(out.failures)
}

fn main() {
    let result = parse().and_then(|cli| run(&cli)).and_then(|failures| {
        if failures.is_empty() {
            Ok(())
        } else {
            Err(CliError::ChecksFailed(failures))
        }
    });
    if let Err(e) = result {
        eprintln!("sos: {e}");
        std::process::exit(e.exit_code());
    }
}
