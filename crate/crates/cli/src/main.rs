mod args;
mod commands;
mod error;
mod output;
mod repro;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use error::{CliError, CliResult};
use output::{to_value, Artifacts, ExperimentConfig};

fn dispatch(command: &Command) -> CliResult<Artifacts> {
    match command {
        Command::Schedule(a) => commands::schedule(a),
        Command::Bound(a) => commands::bound(a),
        Command::SweepGamma(a) => commands::sweep_gamma_cmd(a),
        Command::SweepCooldown(a) => commands::sweep_cooldown_cmd(a),
        Command::TransferHorizon(a) => commands::transfer_horizon(a),
        Command::TransferLr(a) => commands::transfer_lr(a),
        Command::ToyRun(a) => commands::toy_run(a),
        Command::ToyCompare(a) => commands::toy_compare(a.seed),
        Command::ScalingLaw(a) => commands::scaling_law(a),
        Command::Fit(a) => commands::fit(a),
        Command::Repro(a) => repro::run(a.id),
    }
}

fn parameters(command: &Command) -> serde_json::Value {
    match command {
        Command::Schedule(a) => to_value(a),
        Command::Bound(a) => to_value(a),
        Command::SweepGamma(a) => to_value(a),
        Command::SweepCooldown(a) => to_value(a),
        Command::TransferHorizon(a) => to_value(a),
        Command::TransferLr(a) => to_value(a),
        Command::ToyRun(a) => to_value(a),
        Command::ToyCompare(a) => to_value(a),
        Command::ScalingLaw(a) => to_value(a),
        Command::Fit(a) => to_value(a),
        Command::Repro(a) => to_value(a),
    }
}

fn default_format(command: &Command) -> Format {
    match command {
        Command::Repro(_) | Command::ScalingLaw(_) | Command::ToyCompare(_) | Command::Fit(_) => Format::Json,
        _ => Format::Csv,
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(error::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
    }
    let config = ExperimentConfig {
        command: cli.command.name().to_string(),
        parameters: parameters(&cli.command),
        output_path: cli.out_dir.clone(),
        format: cli.format.unwrap_or_else(|| default_format(&cli.command)),
    };
    let artifacts = dispatch(&cli.command)?;
    output::emit(&artifacts, &config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let report = anyhow::Error::from(e);
            eprintln!("error: {report:#}");
            ExitCode::from(code)
        }
    }
}

