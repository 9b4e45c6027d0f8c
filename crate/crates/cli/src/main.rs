use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgMatches, CommandFactory};

mod args;
mod commands;
mod config;

use args::{Cli, Preset};
use config::{load_config, preset_values, Settings};

/// Bad invocation or configuration; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn run(matches: &ArgMatches) -> anyhow::Result<()> {
    let root = Cli::command();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cmd = root.find_subcommand(name).expect("known subcommand");

    let file = match matches.get_one::<std::path::PathBuf>("config") {
        Some(path) => load_config(path, &root)?,
        None => BTreeMap::new(),
    };
    let preset = matches
        .get_one::<Preset>("preset")
        .map(|p| preset_values(*p))
        .unwrap_or_default();
    let settings = Settings::resolve(cmd, sub, &file, &preset);
    if matches.get_flag("dump_config") {
        print!("{}", settings.dump());
        return Ok(());
    }
    match name {
        "gen" => commands::gen(&settings),
        "solve" => commands::solve(&settings),
        "train" => commands::train(&settings),
        "eval" => commands::eval(&settings),
        "por" => commands::por(&settings),
        "curves" => commands::curves(&settings),
        "policy" => commands::policy(&settings),
        _ => unreachable!("clap rejects unknown subcommands"),
    }
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let text = e.render().to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("r2l: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ");
            eprintln!("r2l: {}", msg.replace('\n', " "));
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
