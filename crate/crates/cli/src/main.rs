mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Encode(a) => commands::encode_cmd(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Crossval(a) => commands::crossval_cmd(a),
        Command::Predict(a) => commands::predict_cmd(a),
        Command::Rfs(a) => commands::rfs_cmd(a),
        Command::Synth(a) => commands::synth_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
