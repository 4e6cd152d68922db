mod args;
mod commands;
mod input;

use args::Cli;
use clap::error::ErrorKind;
use clap::Parser;
use commands::ValidationFailure;
use serde_json::json;

fn error_json(kind: &str, message: &str, causes: Vec<String>, details: Option<&serde_json::Value>) {
    let mut value = json!({ "error": kind, "message": message });
    if !causes.is_empty() {
        value["causes"] = json!(causes);
    }
    if let Some(d) = details {
        value["details"] = d.clone();
    }
    eprintln!("{value}");
}

fn thread_count(flag: Option<usize>) -> Option<usize> {
    match std::env::var("PSPLINE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => Some(n),
            Err(_) => {
                log::warn!("ignoring PSPLINE_THREADS={v:?}: not a number");
                flag
            }
        },
        Err(_) => flag,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
            _ => {
                error_json("usage", e.to_string().trim(), Vec::new(), None);
                std::process::exit(1);
            }
        },
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    if let Some(n) = thread_count(cli.threads).filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not configure {n} threads: {e}");
        }
    }

    if let Err(e) = commands::run(cli.command) {
        let causes: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
        match e.downcast_ref::<ValidationFailure>() {
            Some(v) => error_json("validation", &v.message, causes, Some(&v.details)),
            None => error_json("error", &e.to_string(), causes, None),
        }
        std::process::exit(1);
    }
}
