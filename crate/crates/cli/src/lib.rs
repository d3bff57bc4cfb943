//! Command-line front end: configuration ingestion, command dispatch and
//! CSV/report emission for the threshold toolkit.

pub mod commands;
pub mod config;

use std::path::Path;

use commands::{exit_code, Outcome};
use config::{build_config, parse_args, parse_config_text, ConfigError};

/// Full run from raw arguments: parse, dispatch, write artifacts. Returns the
/// process exit code; `summary` goes to stdout, errors to stderr.
pub fn main_with_args(args: &[String]) -> i32 {
    let (command, config_path, flags) = match parse_args(args) {
        Ok(parts) => parts,
        Err(e) => {
            eprintln!("{e}");
            return exit_code::ERROR;
        }
    };
    let file_pairs = match &config_path {
        None => Vec::new(),
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match parse_config_text(&text) {
                Ok(pairs) => pairs,
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    return exit_code::ERROR;
                }
            },
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return exit_code::ERROR;
            }
        },
    };
    let cfg = match build_config(command, &file_pairs, &flags) {
        Ok(cfg) => cfg,
        Err(ConfigError(msg)) => {
            eprintln!("{msg}");
            return exit_code::ERROR;
        }
    };

    let outcome = commands::run(&cfg);
    match emit(&outcome, cfg.output.as_deref()) {
        Ok(()) => outcome.exit,
        Err(e) => {
            eprintln!("cannot write output: {e}");
            exit_code::ERROR
        }
    }
}

fn emit(outcome: &Outcome, output: Option<&Path>) -> std::io::Result<()> {
    match output {
        Some(path) if !outcome.artifact.is_empty() => {
            std::fs::write(path, &outcome.artifact)?;
        }
        _ => {
            if !outcome.artifact.is_empty() {
                print!("{}", outcome.artifact);
            }
        }
    }
    if outcome.exit != exit_code::OK && outcome.artifact.is_empty() {
        eprintln!("{}", outcome.summary);
    } else {
        println!("{}", outcome.summary);
    }
    Ok(())
}
