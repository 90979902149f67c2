//! `concentrate`: seeded Monte Carlo campaigns and exact branch
//! enumeration for the concentration protocols, with machine-readable
//! reports.
//!
//! Exit codes: 0 on success (or a passing --check), 1 when --check is
//! set and the verdict is fail, 2 on usage or I/O errors.

mod config;
mod error;
mod harness;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use config::{Cli, Mode};
use error::Result;
use harness::Verdict;

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("CONCENTRATE_LOG", "error"),
    )
    .format_timestamp(None)
    .init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

/// Runs the campaign and emits the report; the flag says whether the
/// process should exit cleanly.
fn execute(cli: Cli) -> Result<bool> {
    let cfg = config::resolve(cli)?;
    log::info!(
        "{} {} at alpha_sq {}",
        cfg.mode.name(),
        cfg.protocol.name(),
        cfg.alpha_sq
    );
    let started = Instant::now();
    let outcome = match cfg.mode {
        Mode::Run => harness::run_campaign(&cfg)?,
        Mode::Exact => harness::run_exact(&cfg)?,
    };
    log::info!(
        "verdict {} after {:.3?}",
        outcome.verdict.name(),
        started.elapsed()
    );
    let text = report::render(&outcome, cfg.format);
    report::emit(&text, cfg.out.as_deref())?;
    if cfg.check && outcome.verdict == Verdict::Fail {
        log::info!("check failed: a deviation exceeded the tolerance");
        return Ok(false);
    }
    Ok(true)
}
