//! Closed-form expectations for the concentration procedures, suitable
//! for cross-checking the simulated statistics.
//!
//! Every formula here is independent of the simulator: the yield series
//! is evaluated through its own recursion and the conservation check
//! only consumes branch probabilities and output entanglements. Tests
//! pin both against exhaustive enumeration of the protocols.

use crate::error::{Error, Result};
use crate::protocols::{protocol_branches, ProtocolId};
use crate::state::SchmidtPair;

/// The largest expected fraction of pairs any local procedure can turn
/// into maximally entangled ones: twice the squared minor coefficient.
/// This equals the pair's entanglement, which is why the conversion
/// strategies that reach it are optimal.
pub fn optimal_fraction(pair: &SchmidtPair) -> f64 {
    pair.entanglement()
}

/// The pair left behind by a failed filtering round: coefficients
/// squared and renormalized. Each failure drives the pair toward a
/// product state quadratically.
pub fn residual_schmidt(pair: &SchmidtPair) -> SchmidtPair {
    pair.squared()
}

/// Probability that unambiguous discrimination of the squared
/// residual pair concludes, `2 b^4 / (a^4 + b^4)`. This is both the
/// success rate of running the discrimination procedure on a first
/// round's residual and the conditional conversion rate of the
/// assisted procedure's even parity branch.
pub fn residual_conclusive_probability(pair: &SchmidtPair) -> Result<f64> {
    if pair.is_product() {
        return Err(Error::DegeneratePair);
    }
    Ok(2.0 * pair.squared().beta_sq())
}

/// Expected conversion schedule of the iterated filtering procedure.
///
/// Entry `k-1` of each vector describes round `k`: `terms` holds the
/// unconditional fraction converted in that round, and
/// `cumulative_fractions` the total fraction converted so far. The
/// normalized tail series `partial_sums` and its geometric
/// `remainder_bounds` certify convergence: `1 - partial_sums[k-1]` is
/// bounded by `remainder_bounds[k-1]`, which collapses doubly
/// exponentially, so `cumulative_fractions` approaches `limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldCurve {
    /// Coefficient ratio `beta / alpha` of the starting pair.
    pub ratio: f64,
    /// Fraction of the initial batch converted in each round.
    pub terms: Vec<f64>,
    /// Partial sums of the normalized tail series; they increase
    /// toward 1.
    pub partial_sums: Vec<f64>,
    /// Total converted fraction after each round.
    pub cumulative_fractions: Vec<f64>,
    /// Upper bounds on `1 - partial_sums[k-1]`, shrinking as
    /// `ratio^(4 (2^k - 1))`.
    pub remainder_bounds: Vec<f64>,
    /// The fraction approached as rounds grow: twice the squared minor
    /// coefficient.
    pub limit: f64,
}

impl YieldCurve {
    pub fn rounds(&self) -> usize {
        self.terms.len()
    }

    /// Total converted fraction over all computed rounds.
    pub fn final_fraction(&self) -> f64 {
        *self
            .cumulative_fractions
            .last()
            .expect("curves always hold at least one round")
    }
}

/// Evaluates the conversion schedule of repeated filtering for a batch
/// of identical pairs.
///
/// Writing `x` for the coefficient ratio, the first round converts
/// `2 a^2 b^2` of the batch. A failed pair re-enters the next round
/// with its coefficients squared, so its ratio squares every round.
/// Collapsing the product of survival probabilities telescopes each
/// later round into a single term: round `k+1` converts
/// `2 b^4 * T_k`, where
///
/// ```text
/// T_1 = 1 / (1 + y_1),   T_{m+1} = T_m * y_m / (1 + y_{m+1}),
/// y_1 = x^4,             y_{m+1} = y_m^2.
/// ```
///
/// The `T_m` sum to exactly 1, which makes the limit of the cumulative
/// fraction `2 a^2 b^2 + 2 b^4 = 2 b^2`: iteration loses nothing of
/// the optimal fraction. Once `y` underflows the terms vanish and the
/// sums saturate; the curve treats that as converged.
pub fn yield_series(pair: &SchmidtPair, rounds: usize) -> Result<YieldCurve> {
    if pair.is_product() {
        return Err(Error::DegeneratePair);
    }
    if rounds == 0 {
        return Err(Error::BadArgument("rounds must be at least 1".into()));
    }
    let x = pair.ratio();
    let x4 = x.powi(4);
    let two_b4 = 2.0 * pair.beta_sq() * pair.beta_sq();
    let first = 2.0 * pair.alpha_sq() * pair.beta_sq();

    let mut terms = Vec::with_capacity(rounds);
    let mut cumulative_fractions = Vec::with_capacity(rounds);
    let mut partial_sums = Vec::with_capacity(rounds);
    let mut remainder_bounds = Vec::with_capacity(rounds);

    terms.push(first);
    cumulative_fractions.push(first);
    let mut y = x4;
    let mut term = 1.0 / (1.0 + y);
    let mut tail_sum = term;
    let mut bound = y;
    partial_sums.push(tail_sum);
    remainder_bounds.push(bound);

    for _ in 2..=rounds {
        let converted = two_b4 * term;
        terms.push(converted);
        cumulative_fractions.push(cumulative_fractions.last().unwrap() + converted);
        let y_next = y * y;
        term *= y / (1.0 + y_next);
        y = y_next;
        tail_sum += term;
        bound = bound * bound * x4;
        partial_sums.push(tail_sum);
        remainder_bounds.push(bound);
    }
    debug_assert!(partial_sums.windows(2).all(|w| w[1] >= w[0]));
    debug_assert!(cumulative_fractions.windows(2).all(|w| w[1] >= w[0]));

    Ok(YieldCurve {
        ratio: x,
        terms,
        partial_sums,
        cumulative_fractions,
        remainder_bounds,
        limit: pair.entanglement(),
    })
}

/// Input and expected output entanglement of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    /// Entanglement of the pair entering the protocol.
    pub e_before: f64,
    /// Branch probabilities times output entanglements, summed.
    pub e_after: f64,
}

impl ConservationReport {
    pub fn deviation(&self) -> f64 {
        (self.e_after - self.e_before).abs()
    }
}

/// Verifies that a protocol neither creates nor wastes entanglement on
/// average: the probability-weighted entanglement of its outputs must
/// equal the entanglement of the input pair. Both sides are computed
/// from scratch, the left from exhaustive branch enumeration.
pub fn conservation_check(id: ProtocolId, pair: &SchmidtPair) -> Result<ConservationReport> {
    let branches = protocol_branches(id, pair)?;
    let mut e_after = 0.0;
    for branch in &branches {
        e_after += branch.probability * branch.outcome.shared_entanglement()?;
    }
    Ok(ConservationReport {
        e_before: pair.entanglement(),
        e_after,
    })
}
