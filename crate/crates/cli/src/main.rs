//! `routedist`: region generation, labeling, training, districting and reports.

mod commands;
mod files;

use std::process::ExitCode;

use clap::Parser;

use commands::Cli;

/// Error raised for bad user input; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn is_validation(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<UsageError>().is_some()
            || e.downcast_ref::<routedist::Error>().is_some_and(|e| match e {
                routedist::Error::Io(io) => io.kind() == std::io::ErrorKind::NotFound,
                other => other.is_validation(),
            })
            || e.downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::NotFound)
    })
}

fn report(err: &anyhow::Error, json: bool, code: u8) {
    let kind = if code == 2 { "validation" } else { "internal" };
    if json {
        let chain: Vec<String> = err.chain().map(ToString::to_string).collect();
        let doc = serde_json::json!({ "error": { "kind": kind, "message": err.to_string(), "chain": chain, "exit_code": code } });
        eprintln!("{doc}");
    } else {
        eprintln!("error: {err:#}");
    }
}

fn main() -> ExitCode {
    let json = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if json {
                let doc = serde_json::json!({ "error": { "kind": "validation", "message": e.to_string(), "exit_code": 2 } });
                eprintln!("{doc}");
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global();
    if let Err(e) = pool {
        report(&anyhow::anyhow!("thread pool: {e}"), json, 1);
        return ExitCode::from(1);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if is_validation(&e) { 2 } else { 1 };
            report(&e, json, code);
            ExitCode::from(code)
        }
    }
}
