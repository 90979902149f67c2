//! Campaign execution: seeded Monte Carlo over deterministic per-trial
//! substreams, or exhaustive branch enumeration, both compared against
//! the analytic expectations.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use concentrate_core::{
    conservation_check, protocol_branches, protocol_single, proposal1_iterate, success_probability,
    yield_series, CatMethod, ConservationReport, ProtocolId, SchmidtPair, TraceStep, YieldCurve,
};

use crate::config::{CampaignConfig, Mode, Protocol};
use crate::error::{CliError, Result};

/// Absolute tolerance for exact-mode deviations.
pub const EXACT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// One row of the report. In sampled campaigns `z_score` is the
/// deviation in analytic standard errors; in exact mode the counts are
/// zero, `empirical_p` holds the enumerated probability and `z_score`
/// the absolute deviation from the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub round: usize,
    pub pairs_in: u64,
    pub successes: u64,
    pub empirical_p: f64,
    pub std_error: f64,
    pub analytic_p: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overall {
    pub empirical_fraction: f64,
    pub analytic_fraction: f64,
    pub conservation: ConservationReport,
}

/// One enumerated leaf, echoed in exact-mode JSON reports.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub path: String,
    pub probability: f64,
    pub kind: &'static str,
    pub bell: Option<&'static str>,
    pub entanglement: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub config: CampaignConfig,
    pub rounds: Vec<RoundStats>,
    pub overall: Overall,
    /// Measurement record of the single trial, when trials = 1.
    pub trace: Option<Vec<TraceStep>>,
    /// Exact mode only: every measurement branch.
    pub branches: Option<Vec<BranchRow>>,
    pub verdict: Verdict,
}

fn protocol_id(cfg: &CampaignConfig) -> Option<ProtocolId> {
    match cfg.protocol {
        Protocol::Proposal1 => Some(ProtocolId::Proposal1),
        Protocol::Proposal2 => Some(ProtocolId::Proposal2),
        Protocol::EntAssisted => Some(ProtocolId::EntanglementAssisted),
        Protocol::Cat => Some(ProtocolId::Cat {
            parties: cfg.parties,
            method: cfg.method,
        }),
        Protocol::Proposal1Iterate => None,
    }
}

/// Closed-form success probability of a single shot.
fn analytic_success(cfg: &CampaignConfig) -> f64 {
    let a = cfg.alpha_sq;
    let b = 1.0 - a;
    match cfg.protocol {
        Protocol::Proposal1 => 2.0 * a * b,
        Protocol::Proposal2 | Protocol::EntAssisted => 2.0 * b,
        Protocol::Cat => match cfg.method {
            CatMethod::Proposal1 => 2.0 * a * b,
            CatMethod::Proposal2 => 2.0 * b,
        },
        Protocol::Proposal1Iterate => 2.0 * a * b,
    }
}

/// Deviation in standard errors, with the variance taken from the
/// analytic probability so that empty or saturated counts stay finite.
fn z_score(empirical: f64, analytic: f64, n: u64) -> f64 {
    let dev = empirical - analytic;
    let variance = analytic * (1.0 - analytic) / n as f64;
    if variance > 0.0 {
        dev / variance.sqrt()
    } else if dev.abs() <= f64::EPSILON {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Reported standard error of the empirical proportion.
fn std_error(empirical: f64, n: u64) -> f64 {
    (empirical * (1.0 - empirical) / n as f64).sqrt()
}

fn sampled_verdict(rounds: &[RoundStats], sigma: f64) -> Verdict {
    let ok = rounds
        .iter()
        .all(|r| r.z_score.is_finite() && r.z_score.abs() <= sigma);
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Conditional per-round success probabilities implied by the yield
/// curve: term_k divided by the fraction still unconverted entering
/// round k.
fn conditional_round_probabilities(curve: &YieldCurve) -> Vec<f64> {
    let mut reach = 1.0;
    curve
        .terms
        .iter()
        .map(|&term| {
            let p = if reach > 0.0 { term / reach } else { 0.0 };
            reach -= term;
            p
        })
        .collect()
}

/// Runs a seeded campaign. Every trial owns substream `trial_index` of
/// the campaign seed, so the aggregate is a pure function of the
/// config at any parallelism level.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<EnsembleReport> {
    debug_assert_eq!(cfg.mode, Mode::Run);
    let pair = SchmidtPair::from_alpha_sq(cfg.alpha_sq)?;
    let trials = cfg
        .trials
        .ok_or_else(|| CliError::Usage("missing --trials".into()))?;
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Usage("missing --seed".into()))?;
    let seed_bytes = ChaCha12Rng::seed_from_u64(seed).get_seed();

    let conservation = conservation_check(
        protocol_id(cfg).unwrap_or(ProtocolId::Proposal1),
        &pair,
    )?;

    if cfg.protocol == Protocol::Proposal1Iterate {
        let summaries = {
            let mut rng = ChaCha12Rng::from_seed(seed_bytes);
            rng.set_stream(0);
            proposal1_iterate(&pair, trials, cfg.rounds, &mut rng)?
        };
        let curve = yield_series(&pair, cfg.rounds)?;
        let conditional = conditional_round_probabilities(&curve);
        let rounds: Vec<RoundStats> = summaries
            .iter()
            .map(|s| {
                let empirical = s.successes as f64 / s.pairs_in as f64;
                let analytic = conditional[s.round - 1];
                RoundStats {
                    round: s.round,
                    pairs_in: s.pairs_in,
                    successes: s.successes,
                    empirical_p: empirical,
                    std_error: std_error(empirical, s.pairs_in),
                    analytic_p: analytic,
                    z_score: z_score(empirical, analytic, s.pairs_in),
                }
            })
            .collect();
        let converted: u64 = summaries.iter().map(|s| s.successes).sum();
        let overall = Overall {
            empirical_fraction: converted as f64 / trials as f64,
            analytic_fraction: match summaries.len() {
                0 => 0.0,
                executed => curve.cumulative_fractions[executed - 1],
            },
            conservation,
        };
        let verdict = sampled_verdict(&rounds, cfg.sigma);
        return Ok(EnsembleReport {
            config: cfg.clone(),
            rounds,
            overall,
            trace: None,
            branches: None,
            verdict,
        });
    }

    let id = protocol_id(cfg).expect("single-shot protocol");
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64> {
            let mut rng = ChaCha12Rng::from_seed(seed_bytes);
            rng.set_stream(trial);
            Ok(u64::from(protocol_single(id, &pair, &mut rng)?.is_success()))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    let trace = if trials == 1 {
        let mut rng = ChaCha12Rng::from_seed(seed_bytes);
        rng.set_stream(0);
        Some(protocol_single(id, &pair, &mut rng)?.trace)
    } else {
        None
    };

    let empirical = successes as f64 / trials as f64;
    let analytic = analytic_success(cfg);
    let rounds = vec![RoundStats {
        round: 1,
        pairs_in: trials,
        successes,
        empirical_p: empirical,
        std_error: std_error(empirical, trials),
        analytic_p: analytic,
        z_score: z_score(empirical, analytic, trials),
    }];
    let verdict = sampled_verdict(&rounds, cfg.sigma);
    Ok(EnsembleReport {
        config: cfg.clone(),
        rounds,
        overall: Overall {
            empirical_fraction: empirical,
            analytic_fraction: analytic,
            conservation,
        },
        trace,
        branches: None,
        verdict,
    })
}

/// Enumerates every branch of the configured protocol and compares the
/// exact success probability to the closed form.
pub fn run_exact(cfg: &CampaignConfig) -> Result<EnsembleReport> {
    debug_assert_eq!(cfg.mode, Mode::Exact);
    let pair = SchmidtPair::from_alpha_sq(cfg.alpha_sq)?;
    let id = protocol_id(cfg).ok_or_else(|| {
        CliError::Usage("exact mode cannot run proposal1-iterate".into())
    })?;
    let branches = protocol_branches(id, &pair)?;
    let exact = success_probability(&branches);
    let analytic = analytic_success(cfg);
    let deviation = (exact - analytic).abs();

    let mut rows = Vec::with_capacity(branches.len());
    for branch in &branches {
        rows.push(BranchRow {
            path: branch.outcome.branch_name(),
            probability: branch.probability,
            kind: branch.outcome.kind.name(),
            bell: branch.outcome.bell.map(|b| b.name()),
            entanglement: branch.outcome.shared_entanglement()?,
        });
    }

    let rounds = vec![RoundStats {
        round: 1,
        pairs_in: 0,
        successes: 0,
        empirical_p: exact,
        std_error: 0.0,
        analytic_p: analytic,
        z_score: deviation,
    }];
    let verdict = if deviation <= EXACT_TOLERANCE {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(EnsembleReport {
        config: cfg.clone(),
        rounds,
        overall: Overall {
            empirical_fraction: exact,
            analytic_fraction: analytic,
            conservation: conservation_check(id, &pair)?,
        },
        trace: None,
        branches: Some(rows),
        verdict,
    })
}
