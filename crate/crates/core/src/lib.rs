//! Exact simulation and analytics for entanglement concentration.
//!
//! The crate models small registers of labeled qubits as dense state
//! vectors and implements four local procedures that convert partially
//! entangled pairs (or multi-party cat states) into maximally entangled
//! ones: measurement-based filtering, unambiguous state discrimination,
//! a variant assisted by a second identical pair, and the multipartite
//! lifts of the first two.
//!
//! Everything runs in two interchangeable modes. Sampling draws one
//! measurement record per shot from a caller-supplied RNG; enumeration
//! walks every branch of the same flow and reports exact probabilities.
//! The [`analytics`] module supplies the closed-form expectations
//! (optimal conversion fractions, iterated-yield series, conservation
//! checks) that both modes are tested against.
//!
//! # Example
//!
//! ```
//! use concentrate_core::{proposal1_branches, success_probability, SchmidtPair};
//!
//! let pair = SchmidtPair::from_alpha_sq(0.75)?;
//! let branches = proposal1_branches(&pair)?;
//! let p = success_probability(&branches);
//! assert!((p - 0.375).abs() < 1e-12);
//! # Ok::<(), concentrate_core::Error>(())
//! ```

pub mod analytics;
pub mod error;
pub mod measurement;
pub mod protocols;
pub mod state;

pub use analytics::{
    conservation_check, optimal_fraction, residual_conclusive_probability, residual_schmidt,
    yield_series, ConservationReport, YieldCurve,
};
pub use error::{Error, Result};
pub use measurement::{
    build_residual_discrimination_povm, build_unambiguous_povm, povm_branches, MeasurementRecord,
    Povm,
};
pub use protocols::{
    entanglement_assisted_branches, entanglement_assisted_single, multipartite_branches,
    multipartite_branches_at, multipartite_concentrate, multipartite_concentrate_at,
    proposal1_branches, proposal1_iterate, proposal1_round_expectations, proposal1_single,
    proposal2_branches, proposal2_single, protocol_branches, protocol_single,
    success_probability, BellKind, CatMethod, OutcomeKind, ProtocolBranch, ProtocolId,
    ProtocolOutcome, RoundExpectation, RoundSummary, TraceStep, MAX_PARTIES, RESIDUAL_CUTOFF,
};
pub use state::{
    make_cat_state, make_pair_state, schmidt_decompose_pair, single_pair_entanglement,
    SchmidtPair, SchmidtReport, StateVector, MAX_QUBITS, NORM_TOLERANCE,
};
