mod args;
mod commands;
mod config;

use std::process::ExitCode;

use tailrisk::error::RiskError;

/// Exit 2 for bad configuration or input, 1 for numerical failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) | Self::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<RiskError> for CliError {
    fn from(e: RiskError) -> Self {
        match e {
            RiskError::InvalidArgument(_)
            | RiskError::LengthMismatch { .. }
            | RiskError::Parse(_)
            | RiskError::Io(_) => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

fn with_header(digest: &str, body: &str) -> String {
    format!("# config-sha256: {digest}\n{body}")
}

fn run() -> Result<(), (CliError, bool)> {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let args = config::assemble_args(raw).map_err(|e| (e, false))?;
    let cmd = <args::Cli as clap::CommandFactory>::command()
        .args_override_self(true)
        .mut_subcommands(|c| {
            c.args_override_self(true)
                .mut_subcommands(|c| c.args_override_self(true))
        });
    let matches = match cmd
        .try_get_matches_from(std::iter::once("tailrisk".to_string()).chain(args.iter().cloned()))
    {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            let code = e.exit_code();
            return if code == 0 {
                Ok(())
            } else {
                Err((CliError::Config(String::new()), true))
            };
        }
    };
    let cli = <args::Cli as clap::FromArgMatches>::from_arg_matches(&matches)
        .map_err(|e| (CliError::Config(e.to_string()), false))?;
    let body = commands::execute(&cli).map_err(|e| (e, false))?;
    match &cli.out {
        Some(path) => std::fs::write(path, with_header(&config::config_digest(&args), &body))
            .map_err(|e| (CliError::Config(format!("{}: {e}", path.display())), false))?,
        None => print!("{body}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((e, reported)) => {
            if !reported {
                eprintln!("error: {e}");
            }
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Numeric(_) => ExitCode::from(1),
            }
        }
    }
}
