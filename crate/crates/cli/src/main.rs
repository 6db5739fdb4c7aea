mod args;
mod commands;
mod config;
mod output;
mod ranges;

use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{CommandFactory, FromArgMatches};
use serde_json::json;
use spinbell_core::SearchConfig;

use crate::args::Cli;
use crate::output::{manifest_path, resolve, to_json, write_file, Manifest, Timing};

/// Bad invocation: unknown flags, unreadable inputs, malformed ranges.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn override_self(cmd: clap::Command) -> clap::Command {
    cmd.args_override_self(true).mut_subcommands(override_self)
}

fn is_usage(err: &anyhow::Error) -> bool {
    use spinbell_core::Error as E;
    err.chain().any(|cause| {
        cause.is::<UsageError>()
            || matches!(
                cause.downcast_ref::<E>(),
                Some(E::InvalidParameter(_) | E::TooLarge { .. } | E::Parse { .. } | E::DimensionMismatch(_) | E::InvalidSector { .. })
            )
    })
}

fn run() -> anyhow::Result<()> {
    let argv = config::expand(std::env::args().collect())?;
    let matches = match override_self(Cli::command()).try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let text = text.strip_prefix("error: ").unwrap_or(&text).trim_end();
            return Err(UsageError(text.to_string()).into());
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| UsageError(e.to_string()))?;
    let common = &cli.common;
    let cfg = SearchConfig { restarts: common.restarts, max_iterations: common.max_evals, tolerance: common.tol, seed: common.seed };
    cfg.validate()?;
    let parameters = json!({ "common": common, "command": cli.command, "search": cfg });

    if common.dry_run {
        println!("{}", serde_json::to_string_pretty(&json!({ "subcommand": cli.command.name(), "parameters": parameters }))?);
        return Ok(());
    }
    if let Some(threads) = common.threads {
        if threads == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let mut log = |line: String| eprintln!("{line}");
    let mut ctx = commands::Context_ { cfg, log: &mut log };
    let data = commands::run(&cli.command, &mut ctx)?.render(common.format)?;

    match &common.out {
        None => print!("{data}"),
        Some(path) => {
            let path = resolve(path);
            write_file(&path, &data)?;
            let manifest = Manifest {
                subcommand: cli.command.name().to_string(),
                tool_version: env!("CARGO_PKG_VERSION"),
                seed: common.seed,
                parameters,
                outputs: vec![path.display().to_string()],
                timing: Timing { started_unix_seconds: started, wall_seconds: clock.elapsed().as_secs_f64() },
            };
            write_file(&manifest_path(&path), &to_json(&manifest)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 2 } else { 1 })
        }
    }
}
