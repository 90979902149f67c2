//! Campaign configuration: command-line flags merged over an optional
//! key=value config file. Flags win on conflict; anything left unset
//! falls back to the documented default.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use concentrate_core::CatMethod;

use crate::error::{CliError, Result};

pub const DEFAULT_ROUNDS: usize = 8;
pub const DEFAULT_PARTIES: usize = 3;
pub const DEFAULT_SIGMA: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(
    name = "concentrate",
    version,
    about = "Entanglement concentration campaigns: seeded sampling and exact branch enumeration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a seeded Monte Carlo campaign and compare it to the
    /// analytic expectations.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Trial count; for proposal1-iterate, the initial pair count.
        #[arg(long)]
        trials: Option<u64>,
        /// Campaign seed. Each trial derives its own substream, so
        /// reports are reproducible at any parallelism level.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Enumerate every measurement branch exactly; no sampling.
    Exact {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// proposal1 | proposal1-iterate | proposal2 | ent-assisted | cat
    #[arg(long)]
    protocol: Option<String>,
    /// Squared major Schmidt coefficient, in [0.5, 1).
    #[arg(long = "alpha-sq")]
    alpha_sq: Option<f64>,
    /// Filtering rounds, proposal1-iterate only [default: 8].
    #[arg(long)]
    rounds: Option<usize>,
    /// Number of parties, cat only [default: 3].
    #[arg(long)]
    parties: Option<usize>,
    /// Cat sub-method: proposal1 | proposal2 [default: proposal1].
    #[arg(long)]
    method: Option<String>,
    /// Verdict threshold in standard errors [default: 4].
    #[arg(long)]
    sigma: Option<f64>,
    /// Report format: json | csv [default: json].
    #[arg(long)]
    format: Option<String>,
    /// Write the report to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 1 when the verdict is fail.
    #[arg(long)]
    check: bool,
    /// key=value file supplying any of the above (# starts a comment).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Exact,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Proposal1,
    Proposal1Iterate,
    Proposal2,
    EntAssisted,
    Cat,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Proposal1 => "proposal1",
            Protocol::Proposal1Iterate => "proposal1-iterate",
            Protocol::Proposal2 => "proposal2",
            Protocol::EntAssisted => "ent-assisted",
            Protocol::Cat => "cat",
        }
    }

    fn parse(text: &str) -> Result<Self> {
        match text {
            "proposal1" => Ok(Protocol::Proposal1),
            "proposal1-iterate" => Ok(Protocol::Proposal1Iterate),
            "proposal2" => Ok(Protocol::Proposal2),
            "ent-assisted" => Ok(Protocol::EntAssisted),
            "cat" => Ok(Protocol::Cat),
            other => Err(CliError::Usage(format!(
                "unknown protocol `{other}` (expected proposal1, proposal1-iterate, proposal2, ent-assisted, or cat)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn parse(text: &str) -> Result<Self> {
        match text {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Usage(format!(
                "unknown format `{other}` (expected json or csv)"
            ))),
        }
    }
}

fn parse_method(text: &str) -> Result<CatMethod> {
    match text {
        "proposal1" => Ok(CatMethod::Proposal1),
        "proposal2" => Ok(CatMethod::Proposal2),
        other => Err(CliError::Usage(format!(
            "unknown method `{other}` (expected proposal1 or proposal2)"
        ))),
    }
}

/// A fully validated campaign. `trials` and `seed` are present exactly
/// when the mode samples.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub protocol: Protocol,
    pub alpha_sq: f64,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub rounds: usize,
    pub parties: usize,
    pub method: CatMethod,
    pub sigma: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub check: bool,
}

const FILE_KEYS: &[&str] = &[
    "protocol", "alpha_sq", "trials", "seed", "rounds", "parties", "method", "sigma", "format",
    "out", "check",
];

/// Flat key=value lines, UTF-8, `#` to end of line is a comment.
/// Later assignments override earlier ones; unknown keys are errors.
fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected key=value, got `{line}`",
                path.display(),
                number + 1
            ))
        })?;
        let key = key.trim().replace('-', "_");
        let value = value.trim().to_string();
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "{}:{}: unknown config key `{key}`",
                path.display(),
                number + 1
            )));
        }
        entries.push((key, value));
    }
    Ok(entries)
}

fn file_text<'a>(file: &'a [(String, String)], key: &str) -> Option<&'a str> {
    file.iter()
        .rev()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

fn file_parsed<T>(file: &[(String, String)], key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    match file_text(file, key) {
        None => Ok(None),
        Some(text) => text.parse::<T>().map(Some).map_err(|e| {
            CliError::Usage(format!("config key `{key}`: cannot parse `{text}`: {e}"))
        }),
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing {what}: pass the flag or set it in the config file")))
}

/// Merges flags over the config file, applies defaults, and validates
/// the combination.
pub fn resolve(cli: Cli) -> Result<CampaignConfig> {
    let (mode, common, trials_flag, seed_flag) = match cli.command {
        Command::Run {
            common,
            trials,
            seed,
        } => (Mode::Run, common, trials, seed),
        Command::Exact { common } => (Mode::Exact, common, None, None),
    };
    let file = match &common.config {
        Some(path) => parse_config_file(path)?,
        None => Vec::new(),
    };

    let protocol_text = common
        .protocol
        .clone()
        .or_else(|| file_text(&file, "protocol").map(str::to_string));
    let protocol = Protocol::parse(&require(protocol_text, "--protocol")?)?;

    let alpha_sq = require(
        common.alpha_sq.or(file_parsed::<f64>(&file, "alpha_sq")?),
        "--alpha-sq",
    )?;
    if !alpha_sq.is_finite() || !(0.5..1.0).contains(&alpha_sq) {
        return Err(CliError::Usage(format!(
            "--alpha-sq must satisfy 0.5 <= alpha_sq < 1, got {alpha_sq}"
        )));
    }

    let trials = trials_flag.or(file_parsed::<u64>(&file, "trials")?);
    let seed = seed_flag.or(file_parsed::<u64>(&file, "seed")?);

    let rounds = common
        .rounds
        .or(file_parsed::<usize>(&file, "rounds")?)
        .unwrap_or(DEFAULT_ROUNDS);
    if rounds == 0 {
        return Err(CliError::Usage("--rounds must be at least 1".into()));
    }

    let parties = common
        .parties
        .or(file_parsed::<usize>(&file, "parties")?)
        .unwrap_or(DEFAULT_PARTIES);

    let method = match common
        .method
        .as_deref()
        .or_else(|| file_text(&file, "method"))
    {
        Some(text) => parse_method(text)?,
        None => CatMethod::Proposal1,
    };

    let sigma = common
        .sigma
        .or(file_parsed::<f64>(&file, "sigma")?)
        .unwrap_or(DEFAULT_SIGMA);
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(CliError::Usage(format!(
            "--sigma must be a positive real, got {sigma}"
        )));
    }

    let format = match common
        .format
        .as_deref()
        .or_else(|| file_text(&file, "format"))
    {
        Some(text) => Format::parse(text)?,
        None => Format::Json,
    };

    let out = common
        .out
        .clone()
        .or_else(|| file_text(&file, "out").map(PathBuf::from));
    let check = common.check || file_parsed::<bool>(&file, "check")?.unwrap_or(false);

    if protocol == Protocol::Cat && !(3..=concentrate_core::MAX_PARTIES).contains(&parties) {
        return Err(CliError::Usage(format!(
            "--parties must be in 3..={}, got {parties}",
            concentrate_core::MAX_PARTIES
        )));
    }

    match mode {
        Mode::Run => {
            let trials = require(trials, "--trials")?;
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            require(seed, "--seed")?;
        }
        Mode::Exact => {
            if protocol == Protocol::Proposal1Iterate {
                return Err(CliError::Usage(
                    "exact mode enumerates measurement branches; proposal1-iterate is sampled only (use `run`)"
                        .into(),
                ));
            }
        }
    }

    Ok(CampaignConfig {
        mode,
        protocol,
        alpha_sq,
        trials: if mode == Mode::Run { trials } else { None },
        seed: if mode == Mode::Run { seed } else { None },
        rounds,
        parties,
        method,
        sigma,
        format,
        out,
        check,
    })
}
