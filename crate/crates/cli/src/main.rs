use std::process::ExitCode;

use clap::Parser;
use portalis_cli::cli::{load_schema, policy};
use portalis_cli::{run, server, Cli, CliError, Command, Gateway};

fn serve(cli: &Cli, port: u16, mode: portalis_cli::Mode, period: Option<u64>) -> Result<(), CliError> {
    let mut engine = load_schema(&cli.schema)?;
    engine.set_policy(policy(mode, period)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime
        .block_on(server::serve(Gateway::new(engine), port))
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve { port, policy, period } => serve(&cli, port, policy, period).map(|_| None),
        _ => run(&cli).map(Some),
    };
    match result {
        Ok(out) => {
            if let Some(out) = out {
                println!("{out}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
