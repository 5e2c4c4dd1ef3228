use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use luskin_cli::{run, Cli, EXIT_ERROR};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_ERROR as u8),
            };
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", outcome.summary);
            let has_out = match &cli.command {
                luskin_cli::Command::Audit(a) => a.data.out.is_some(),
                luskin_cli::Command::Retrain(a) => a.data.out.is_some(),
                luskin_cli::Command::TuneThresholds(a) => a.data.out.is_some(),
                luskin_cli::Command::TrainFair(a) => a.data.out.is_some(),
            };
            if !has_out {
                match outcome.report.to_json() {
                    Ok(json) => {
                        let _ = write!(stdout, "{json}");
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(EXIT_ERROR as u8);
                    }
                }
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
