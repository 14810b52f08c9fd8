use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::Parser;
use rdd_cli::{run, Cli, CliError};

const CONFIG_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(CONFIG_ERROR),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rdd: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(CONFIG_ERROR, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let report = run(&cli.command)?;
    print!("{}", report.render_text());
    if let Some(dir) = &cli.command.args().out {
        report
            .write_to(dir)
            .with_context(|| format!("writing the report to {}", dir.display()))?;
    }
    Ok(())
}
