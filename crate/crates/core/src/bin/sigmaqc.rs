//! Experiment runner CLI.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or
//! IO error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sigmaqc::config::RunConfig;
use sigmaqc::pipeline::execute;
use sigmaqc::report::{export_field, render_report, write_report, EXPORTABLE_FIELDS};

#[derive(Parser)]
#[command(name = "sigmaqc", about = "sigma-harmonic mapping experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solve/analyze pipeline for a config file
    Run {
        #[arg(long)]
        config: PathBuf,
        /// output directory (overrides `out` in the config)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in case registry
    Cases,
    /// Compute one field on the finest grid and print it
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        field: String,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> sigmaqc::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = RunConfig::from_file(&config)?;
            if let Some(out) = out {
                cfg.out_dir = Some(out);
            }
            let pipeline = execute(&cfg)?;
            let text = render_report(&pipeline.report);
            print!("{text}");
            if let Some(dir) = &cfg.out_dir {
                write_report(&pipeline.report, dir)?;
            }
            if pipeline.report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                let failed: Vec<&str> = pipeline
                    .report
                    .checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name.as_str())
                    .collect();
                eprintln!("failed checks: {}", failed.join(", "));
                Ok(ExitCode::from(1))
            }
        }
        Command::Cases => {
            for info in sigmaqc::cases::REGISTRY {
                println!("{}: {}", info.name, info.summary);
                for (k, v) in info.params {
                    println!("  {k} = {v} (default)");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { config, field } => {
            let cfg = RunConfig::from_file(&config)?;
            let pipeline = execute(&cfg)?;
            let run = pipeline.runs.last().expect("at least one grid");
            match export_field(run, &field) {
                Ok(table) => {
                    print!("{table}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("error: {e} (known fields: {})", EXPORTABLE_FIELDS.join(", "));
                    Ok(ExitCode::from(2))
                }
            }
        }
    }
}
