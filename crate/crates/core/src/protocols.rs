//! The four concentration procedures over partially entangled resources.
//!
//! Each protocol is written once as a flow over an abstract branch
//! chooser, then exposed in two modes that share every intermediate
//! state:
//!
//! * `*_single` samples one shot, letting a caller RNG pick each
//!   measurement branch by its cumulative probability interval;
//! * `*_branches` walks every measurement branch depth first and
//!   returns each leaf with its exact probability, the product of the
//!   conditional probabilities along the path.
//!
//! The procedures themselves:
//!
//! * `proposal1`: the holder of one half attaches an ancilla carrying
//!   the pair's own Schmidt coefficients, entangles it with a CNOT and
//!   measures the original qubit. The flip outcome leaves a maximally
//!   entangled pair on (ancilla, far half); the other outcome leaves a
//!   less entangled pair that can be filtered again.
//! * `proposal2`: the far side absorbs a fresh |0> ancilla with a CNOT
//!   and discriminates the two possible ancilla states unambiguously.
//!   Conclusive outcomes project the pair onto a Bell state; the
//!   inconclusive outcome destroys the entanglement outright.
//! * `entanglement_assisted`: a second identical pair assists. A joint
//!   parity measurement either reduces the problem to discriminating
//!   the squared-coefficient pair (even) or, in the odd branch, hands
//!   over a maximally entangled pair with certainty through an
//!   incomplete Bell measurement.
//! * `multipartite`: both filtering styles lift verbatim to n-party cat
//!   states, acted on by any single party.

use rand::Rng;

use crate::error::{Error, Result};
use crate::measurement::{
    bell_branches, build_residual_discrimination_povm, build_unambiguous_povm, parity_branches, pick_index, povm_branches,
    z_branches, MeasurementRecord,
};
use crate::state::{make_cat_state, make_pair_state, SchmidtPair, StateVector};

/// Most parties a cat-state protocol will accept; with the ancilla this
/// stays within the register cap.
pub const MAX_PARTIES: usize = 10;

/// A working pair whose minor coefficient falls below this is treated
/// as a product state; iteration stops rather than filtering noise.
pub const RESIDUAL_CUTOFF: f64 = 1e-9;

/// The four Bell states; the sign says whether the superposition adds
/// or subtracts, phi/psi whether the halves are aligned or flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub fn name(&self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi-plus",
            BellKind::PhiMinus => "phi-minus",
            BellKind::PsiPlus => "psi-plus",
            BellKind::PsiMinus => "psi-minus",
        }
    }

    /// The Bell state over two labels.
    pub fn state(&self, labels: (&str, &str)) -> Result<StateVector> {
        use num_complex::Complex64;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let amps = match self {
            BellKind::PhiPlus => vec![h, Complex64::ZERO, Complex64::ZERO, h],
            BellKind::PhiMinus => vec![h, Complex64::ZERO, Complex64::ZERO, -h],
            BellKind::PsiPlus => vec![Complex64::ZERO, h, h, Complex64::ZERO],
            BellKind::PsiMinus => vec![Complex64::ZERO, h, -h, Complex64::ZERO],
        };
        StateVector::new(&[labels.0, labels.1], amps)
    }
}

/// How a run ended: a maximally entangled state delivered, a weaker but
/// still entangled residual left for another round, or nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Success,
    Residual,
    Disentangled,
}

impl OutcomeKind {
    pub fn name(&self) -> &'static str {
        match self {
            OutcomeKind::Success => "success",
            OutcomeKind::Residual => "residual",
            OutcomeKind::Disentangled => "disentangled",
        }
    }
}

/// One measurement along a run: which branch fired and its conditional
/// probability at that point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub outcome: &'static str,
    pub probability: f64,
}

/// Result of one protocol run. `final_state` is the collapsed full
/// register; `shared_labels` name the qubits that hold the output
/// resource (for successes, the maximally entangled state; for cat
/// protocols, all surviving parties).
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub kind: OutcomeKind,
    pub bell: Option<BellKind>,
    pub residual: Option<SchmidtPair>,
    pub shared_labels: Vec<String>,
    pub final_state: StateVector,
    pub trace: Vec<TraceStep>,
}

impl ProtocolOutcome {
    pub fn is_success(&self) -> bool {
        self.kind == OutcomeKind::Success
    }

    /// Entanglement between the first shared qubit and the rest of the
    /// register. Every leaf of these protocols factors into the shared
    /// resource and collapsed ancillas, so this is exactly the
    /// entanglement carried by the output.
    pub fn shared_entanglement(&self) -> Result<f64> {
        match self.shared_labels.first() {
            Some(label) => self.final_state.entanglement_across(label),
            None => Ok(0.0),
        }
    }

    /// The branch name, steps joined by '/'.
    pub fn branch_name(&self) -> String {
        if self.trace.is_empty() {
            return "unmeasured".to_string();
        }
        let names: Vec<&str> = self.trace.iter().map(|s| s.outcome).collect();
        names.join("/")
    }
}

/// One leaf of the exhaustive enumeration: the outcome together with
/// its unconditional probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolBranch {
    pub probability: f64,
    pub outcome: ProtocolOutcome,
}

/// Total probability of success leaves.
pub fn success_probability(branches: &[ProtocolBranch]) -> f64 {
    branches
        .iter()
        .filter(|b| b.outcome.is_success())
        .map(|b| b.probability)
        .sum()
}

/// Identifies a protocol together with its shape parameters, which is
/// all the analytics layer needs to enumerate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolId {
    Proposal1,
    Proposal2,
    EntanglementAssisted,
    Cat { parties: usize, method: CatMethod },
}

impl ProtocolId {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolId::Proposal1 => "proposal1",
            ProtocolId::Proposal2 => "proposal2",
            ProtocolId::EntanglementAssisted => "ent-assisted",
            ProtocolId::Cat { .. } => "cat",
        }
    }
}

/// Filtering style a cat-state party applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CatMethod {
    Proposal1,
    Proposal2,
}

impl CatMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CatMethod::Proposal1 => "proposal1",
            CatMethod::Proposal2 => "proposal2",
        }
    }
}

/// Picks one branch from each measurement a flow encounters. The
/// sampling implementation draws from an RNG; the enumerating one
/// follows a prescribed prefix and records what it saw.
trait Chooser {
    fn pick(&mut self, branches: &[MeasurementRecord]) -> Result<usize>;
}

struct Sampler<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Chooser for Sampler<'_, R> {
    fn pick(&mut self, branches: &[MeasurementRecord]) -> Result<usize> {
        pick_index(branches, self.rng.random::<f64>())
    }
}

/// Replays a choice prefix, then takes the first branch everywhere
/// deeper, recording (choice, alternatives, conditional probability).
struct PathTracker {
    prefix: Vec<usize>,
    depth: usize,
    seen: Vec<(usize, usize, f64)>,
}

impl Chooser for PathTracker {
    fn pick(&mut self, branches: &[MeasurementRecord]) -> Result<usize> {
        let choice = if self.depth < self.prefix.len() {
            self.prefix[self.depth]
        } else {
            0
        };
        debug_assert!(choice < branches.len(), "enumeration prefix out of range");
        self.seen
            .push((choice, branches.len(), branches[choice].probability));
        self.depth += 1;
        Ok(choice)
    }
}

/// Runs the flow once per measurement leaf, discovering siblings as it
/// goes. Leaves come back sorted by their choice path, so the order is
/// deterministic and mirrors the measurement outcome order.
fn enumerate<F>(flow: F) -> Result<Vec<ProtocolBranch>>
where
    F: Fn(&mut dyn Chooser) -> Result<ProtocolOutcome>,
{
    let mut pending: Vec<Vec<usize>> = vec![Vec::new()];
    let mut collected: Vec<(Vec<usize>, ProtocolBranch)> = Vec::new();
    while let Some(prefix) = pending.pop() {
        let mut tracker = PathTracker {
            prefix,
            depth: 0,
            seen: Vec::new(),
        };
        let outcome = flow(&mut tracker)?;
        for depth in tracker.prefix.len()..tracker.seen.len() {
            let (_, alternatives, _) = tracker.seen[depth];
            for alt in 1..alternatives {
                let mut next: Vec<usize> =
                    tracker.seen[..depth].iter().map(|&(c, _, _)| c).collect();
                next.push(alt);
                pending.push(next);
            }
        }
        let probability = tracker.seen.iter().map(|&(_, _, p)| p).product();
        let path: Vec<usize> = tracker.seen.iter().map(|&(c, _, _)| c).collect();
        collected.push((path, ProtocolBranch { probability, outcome }));
    }
    collected.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(collected.into_iter().map(|(_, branch)| branch).collect())
}

fn step(
    chooser: &mut dyn Chooser,
    mut branches: Vec<MeasurementRecord>,
    trace: &mut Vec<TraceStep>,
) -> Result<MeasurementRecord> {
    let k = chooser.pick(&branches)?;
    let record = branches.swap_remove(k);
    trace.push(TraceStep {
        outcome: record.outcome,
        probability: record.probability,
    });
    Ok(record)
}

fn residual_from(state: &StateVector, label: &str) -> Result<SchmidtPair> {
    let (major, minor) = state.reduced_eigenvalues(label)?;
    SchmidtPair::new(major.sqrt(), minor.sqrt())
}

/// Outcome for a pair that was never entangled: the protocol does not
/// run, the register is just the input pair.
fn degenerate_outcome(pair: &SchmidtPair, labels: (&str, &str)) -> Result<ProtocolOutcome> {
    let final_state = make_pair_state(pair, labels)?;
    Ok(ProtocolOutcome {
        kind: OutcomeKind::Disentangled,
        bell: None,
        residual: None,
        shared_labels: vec![labels.0.to_string(), labels.1.to_string()],
        final_state,
        trace: Vec::new(),
    })
}

fn proposal1_flow(pair: &SchmidtPair, chooser: &mut dyn Chooser) -> Result<ProtocolOutcome> {
    const ANCILLA: &str = "A1";
    const SOURCE: &str = "A2";
    const REMOTE: &str = "B";
    if pair.is_product() {
        return degenerate_outcome(pair, (SOURCE, REMOTE));
    }
    let filter = StateVector::single_qubit(
        ANCILLA,
        num_complex::Complex64::new(pair.alpha(), 0.0),
        num_complex::Complex64::new(pair.beta(), 0.0),
    )?;
    let joint = filter.tensor(&make_pair_state(pair, (SOURCE, REMOTE))?)?;
    let filtered = joint.apply_cnot(ANCILLA, SOURCE)?;
    let mut trace = Vec::with_capacity(1);
    let record = step(chooser, z_branches(&filtered, SOURCE)?, &mut trace)?;
    let shared_labels = vec![ANCILLA.to_string(), REMOTE.to_string()];
    if record.outcome == "1" {
        Ok(ProtocolOutcome {
            kind: OutcomeKind::Success,
            bell: Some(BellKind::PsiPlus),
            residual: None,
            shared_labels,
            final_state: record.post_state,
            trace,
        })
    } else {
        let residual = residual_from(&record.post_state, ANCILLA)?;
        Ok(ProtocolOutcome {
            kind: OutcomeKind::Residual,
            bell: None,
            residual: Some(residual),
            shared_labels,
            final_state: record.post_state,
            trace,
        })
    }
}

fn proposal2_flow(pair: &SchmidtPair, chooser: &mut dyn Chooser) -> Result<ProtocolOutcome> {
    const SOURCE: &str = "A";
    const REMOTE: &str = "B1";
    const ANCILLA: &str = "B2";
    if pair.is_product() {
        return degenerate_outcome(pair, (SOURCE, REMOTE));
    }
    let joint = make_pair_state(pair, (SOURCE, REMOTE))?
        .tensor(&StateVector::basis_state(&[ANCILLA], 0)?)?;
    let filtered = joint.apply_cnot(REMOTE, ANCILLA)?;
    let povm = build_unambiguous_povm(pair)?;
    let mut trace = Vec::with_capacity(1);
    let record = step(chooser, povm_branches(&filtered, &[ANCILLA], &povm)?, &mut trace)?;
    let shared_labels = vec![SOURCE.to_string(), REMOTE.to_string()];
    let (kind, bell) = match record.outcome {
        "conclusive-plus" => (OutcomeKind::Success, Some(BellKind::PhiPlus)),
        "conclusive-minus" => (OutcomeKind::Success, Some(BellKind::PhiMinus)),
        _ => (OutcomeKind::Disentangled, None),
    };
    Ok(ProtocolOutcome {
        kind,
        bell,
        residual: None,
        shared_labels,
        final_state: record.post_state,
        trace,
    })
}

fn entanglement_assisted_flow(
    pair: &SchmidtPair,
    chooser: &mut dyn Chooser,
) -> Result<ProtocolOutcome> {
    const KEEP: &str = "A1";
    const AUX: &str = "A2";
    const SOURCE: &str = "A3";
    const REMOTE: &str = "B";
    if pair.is_product() {
        return degenerate_outcome(pair, (SOURCE, REMOTE));
    }
    let joint = make_pair_state(pair, (KEEP, AUX))?
        .tensor(&make_pair_state(pair, (SOURCE, REMOTE))?)?;
    let mut trace = Vec::with_capacity(2);
    let parity = step(chooser, parity_branches(&joint, (AUX, SOURCE))?, &mut trace)?;
    let shared_labels = vec![KEEP.to_string(), REMOTE.to_string()];
    if parity.outcome == "even" {
        let povm = build_residual_discrimination_povm(pair)?;
        let record = step(
            chooser,
            povm_branches(&parity.post_state, &[AUX, SOURCE], &povm)?,
            &mut trace,
        )?;
        let (kind, bell) = match record.outcome {
            "conclusive-plus" => (OutcomeKind::Success, Some(BellKind::PhiPlus)),
            "conclusive-minus" => (OutcomeKind::Success, Some(BellKind::PhiMinus)),
            _ => (OutcomeKind::Disentangled, None),
        };
        Ok(ProtocolOutcome {
            kind,
            bell,
            residual: None,
            shared_labels,
            final_state: record.post_state,
            trace,
        })
    } else {
        // the odd subspace converts with certainty
        let record = step(
            chooser,
            bell_branches(&parity.post_state, (AUX, SOURCE))?,
            &mut trace,
        )?;
        let bell = if record.outcome == "psi-plus" {
            BellKind::PsiPlus
        } else {
            BellKind::PsiMinus
        };
        Ok(ProtocolOutcome {
            kind: OutcomeKind::Success,
            bell: Some(bell),
            residual: None,
            shared_labels,
            final_state: record.post_state,
            trace,
        })
    }
}

fn party_labels(parties: usize) -> Vec<String> {
    (1..=parties).map(|i| format!("P{i}")).collect()
}

/// Cat-state analog of proposal1: the acting party entangles a filter
/// ancilla into its share and measures the share.
fn cat_proposal1_flow(
    pair: &SchmidtPair,
    parties: usize,
    actor: usize,
    chooser: &mut dyn Chooser,
) -> Result<ProtocolOutcome> {
    const ANCILLA: &str = "A";
    let labels = party_labels(parties);
    let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    if pair.is_product() {
        let final_state = make_cat_state(pair, &refs)?;
        return Ok(ProtocolOutcome {
            kind: OutcomeKind::Disentangled,
            bell: None,
            residual: None,
            shared_labels: labels,
            final_state,
            trace: Vec::new(),
        });
    }
    let filter = StateVector::single_qubit(
        ANCILLA,
        num_complex::Complex64::new(pair.alpha(), 0.0),
        num_complex::Complex64::new(pair.beta(), 0.0),
    )?;
    let joint = filter.tensor(&make_cat_state(pair, &refs)?)?;
    let filtered = joint.apply_cnot(ANCILLA, refs[actor])?;
    let mut trace = Vec::with_capacity(1);
    let record = step(chooser, z_branches(&filtered, refs[actor])?, &mut trace)?;
    // the ancilla replaces the measured share
    let mut shared_labels = vec![ANCILLA.to_string()];
    shared_labels.extend(
        labels
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != actor)
            .map(|(_, l)| l.clone()),
    );
    if record.outcome == "1" {
        Ok(ProtocolOutcome {
            kind: OutcomeKind::Success,
            bell: Some(BellKind::PsiPlus),
            residual: None,
            shared_labels,
            final_state: record.post_state,
            trace,
        })
    } else {
        let residual = residual_from(&record.post_state, ANCILLA)?;
        Ok(ProtocolOutcome {
            kind: OutcomeKind::Residual,
            bell: None,
            residual: Some(residual),
            shared_labels,
            final_state: record.post_state,
            trace,
        })
    }
}

/// Cat-state analog of proposal2: the acting party copies its share
/// onto a fresh |0> ancilla and discriminates the ancilla states.
fn cat_proposal2_flow(
    pair: &SchmidtPair,
    parties: usize,
    actor: usize,
    chooser: &mut dyn Chooser,
) -> Result<ProtocolOutcome> {
    const ANCILLA: &str = "A";
    let labels = party_labels(parties);
    let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    if pair.is_product() {
        let final_state = make_cat_state(pair, &refs)?;
        return Ok(ProtocolOutcome {
            kind: OutcomeKind::Disentangled,
            bell: None,
            residual: None,
            shared_labels: labels,
            final_state,
            trace: Vec::new(),
        });
    }
    let joint = make_cat_state(pair, &refs)?
        .tensor(&StateVector::basis_state(&[ANCILLA], 0)?)?;
    let filtered = joint.apply_cnot(refs[actor], ANCILLA)?;
    let povm = build_unambiguous_povm(pair)?;
    let mut trace = Vec::with_capacity(1);
    let record = step(chooser, povm_branches(&filtered, &[ANCILLA], &povm)?, &mut trace)?;
    let (kind, bell) = match record.outcome {
        "conclusive-plus" => (OutcomeKind::Success, Some(BellKind::PhiPlus)),
        "conclusive-minus" => (OutcomeKind::Success, Some(BellKind::PhiMinus)),
        _ => (OutcomeKind::Disentangled, None),
    };
    Ok(ProtocolOutcome {
        kind,
        bell,
        residual: None,
        shared_labels: labels,
        final_state: record.post_state,
        trace,
    })
}

fn cat_flow(
    pair: &SchmidtPair,
    parties: usize,
    method: CatMethod,
    actor: usize,
    chooser: &mut dyn Chooser,
) -> Result<ProtocolOutcome> {
    match method {
        CatMethod::Proposal1 => cat_proposal1_flow(pair, parties, actor, chooser),
        CatMethod::Proposal2 => cat_proposal2_flow(pair, parties, actor, chooser),
    }
}

fn check_cat_shape(parties: usize, actor: usize) -> Result<()> {
    if !(3..=MAX_PARTIES).contains(&parties) {
        return Err(Error::BadArgument(format!(
            "cat protocols support 3..={MAX_PARTIES} parties, got {parties}"
        )));
    }
    if actor >= parties {
        return Err(Error::BadArgument(format!(
            "acting party {actor} out of range for {parties} parties"
        )));
    }
    Ok(())
}

/// One sampled shot of the first filtering procedure.
pub fn proposal1_single<R: Rng + ?Sized>(
    pair: &SchmidtPair,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    proposal1_flow(pair, &mut Sampler { rng })
}

/// Every branch of the first filtering procedure with exact probabilities.
pub fn proposal1_branches(pair: &SchmidtPair) -> Result<Vec<ProtocolBranch>> {
    enumerate(|chooser| proposal1_flow(pair, chooser))
}

/// One sampled shot of the discrimination procedure.
pub fn proposal2_single<R: Rng + ?Sized>(
    pair: &SchmidtPair,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    proposal2_flow(pair, &mut Sampler { rng })
}

/// Every branch of the discrimination procedure.
pub fn proposal2_branches(pair: &SchmidtPair) -> Result<Vec<ProtocolBranch>> {
    enumerate(|chooser| proposal2_flow(pair, chooser))
}

/// One sampled shot of the assisted procedure.
pub fn entanglement_assisted_single<R: Rng + ?Sized>(
    pair: &SchmidtPair,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    entanglement_assisted_flow(pair, &mut Sampler { rng })
}

/// Every branch of the assisted procedure.
pub fn entanglement_assisted_branches(pair: &SchmidtPair) -> Result<Vec<ProtocolBranch>> {
    enumerate(|chooser| entanglement_assisted_flow(pair, chooser))
}

/// One sampled shot of a cat-state concentration, acted on by the last
/// party.
pub fn multipartite_concentrate<R: Rng + ?Sized>(
    pair: &SchmidtPair,
    parties: usize,
    method: CatMethod,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    multipartite_concentrate_at(pair, parties, method, parties.saturating_sub(1), rng)
}

/// One sampled shot of a cat-state concentration with an explicit actor.
pub fn multipartite_concentrate_at<R: Rng + ?Sized>(
    pair: &SchmidtPair,
    parties: usize,
    method: CatMethod,
    actor: usize,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    check_cat_shape(parties, actor)?;
    cat_flow(pair, parties, method, actor, &mut Sampler { rng })
}

/// Every branch of a cat-state concentration, acted on by the last party.
pub fn multipartite_branches(
    pair: &SchmidtPair,
    parties: usize,
    method: CatMethod,
) -> Result<Vec<ProtocolBranch>> {
    multipartite_branches_at(pair, parties, method, parties.saturating_sub(1))
}

/// Every branch of a cat-state concentration with an explicit actor.
pub fn multipartite_branches_at(
    pair: &SchmidtPair,
    parties: usize,
    method: CatMethod,
    actor: usize,
) -> Result<Vec<ProtocolBranch>> {
    check_cat_shape(parties, actor)?;
    enumerate(|chooser| cat_flow(pair, parties, method, actor, chooser))
}

/// Enumerates whichever protocol `id` names.
pub fn protocol_branches(id: ProtocolId, pair: &SchmidtPair) -> Result<Vec<ProtocolBranch>> {
    match id {
        ProtocolId::Proposal1 => proposal1_branches(pair),
        ProtocolId::Proposal2 => proposal2_branches(pair),
        ProtocolId::EntanglementAssisted => entanglement_assisted_branches(pair),
        ProtocolId::Cat { parties, method } => multipartite_branches(pair, parties, method),
    }
}

/// Samples whichever protocol `id` names.
pub fn protocol_single<R: Rng + ?Sized>(
    id: ProtocolId,
    pair: &SchmidtPair,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    match id {
        ProtocolId::Proposal1 => proposal1_single(pair, rng),
        ProtocolId::Proposal2 => proposal2_single(pair, rng),
        ProtocolId::EntanglementAssisted => entanglement_assisted_single(pair, rng),
        ProtocolId::Cat { parties, method } => {
            multipartite_concentrate(pair, parties, method, rng)
        }
    }
}

/// Tallies of one filtering round over a batch of identical pairs.
/// `residual_pair` is what every failed pair becomes, i.e. the working
/// pair of the next round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSummary {
    pub round: usize,
    pub pairs_in: u64,
    pub successes: u64,
    pub residual_pair: SchmidtPair,
}

/// Repeatedly filters a batch of `n_pairs` identical pairs with the
/// first procedure, feeding each round's failures into the next with
/// their squared coefficients. Stops after `max_rounds`, when every
/// pair has converted, or when the working pair hits
/// [`RESIDUAL_CUTOFF`].
pub fn proposal1_iterate<R: Rng + ?Sized>(
    pair: &SchmidtPair,
    n_pairs: u64,
    max_rounds: usize,
    rng: &mut R,
) -> Result<Vec<RoundSummary>> {
    if n_pairs == 0 {
        return Err(Error::BadArgument("n_pairs must be at least 1".into()));
    }
    if max_rounds == 0 {
        return Err(Error::BadArgument("max_rounds must be at least 1".into()));
    }
    let mut current = *pair;
    let mut alive = n_pairs;
    let mut rounds = Vec::new();
    for round in 1..=max_rounds {
        if alive == 0 || current.beta() < RESIDUAL_CUTOFF {
            break;
        }
        let mut successes = 0u64;
        for _ in 0..alive {
            if proposal1_single(&current, rng)?.is_success() {
                successes += 1;
            }
        }
        let residual_pair = current.squared();
        rounds.push(RoundSummary {
            round,
            pairs_in: alive,
            successes,
            residual_pair,
        });
        alive -= successes;
        current = residual_pair;
    }
    Ok(rounds)
}

/// Exact expectations for one round of the iterated procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundExpectation {
    pub round: usize,
    /// Working pair entering the round.
    pub pair: SchmidtPair,
    /// Success probability of this round, from branch enumeration.
    pub success_probability: f64,
    /// Probability that a pair is still unconverted entering this round.
    pub reach_probability: f64,
    /// Expected converted fraction after this round.
    pub cumulative_fraction: f64,
}

/// Chains exact per-round success probabilities into reach
/// probabilities and cumulative converted fractions. Every number
/// comes from branch enumeration of the simulated round, with the
/// residual read off the failed branch, so this is an independent
/// cross-check of any closed-form yield expression. Stops early at
/// [`RESIDUAL_CUTOFF`] like the sampled iteration.
pub fn proposal1_round_expectations(
    pair: &SchmidtPair,
    max_rounds: usize,
) -> Result<Vec<RoundExpectation>> {
    if max_rounds == 0 {
        return Err(Error::BadArgument("max_rounds must be at least 1".into()));
    }
    let mut current = *pair;
    let mut reach = 1.0;
    let mut cumulative = 0.0;
    let mut rounds = Vec::with_capacity(max_rounds);
    for round in 1..=max_rounds {
        if current.beta() < RESIDUAL_CUTOFF {
            break;
        }
        let branches = proposal1_branches(&current)?;
        let success_probability = success_probability(&branches);
        let residual = branches
            .iter()
            .find_map(|b| b.outcome.residual)
            .unwrap_or_else(|| current.squared());
        cumulative += reach * success_probability;
        rounds.push(RoundExpectation {
            round,
            pair: current,
            success_probability,
            reach_probability: reach,
            cumulative_fraction: cumulative,
        });
        reach *= 1.0 - success_probability;
        current = residual;
    }
    Ok(rounds)
}
