use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building states, measuring them, or
/// driving a protocol. Numerical tolerances are part of the contract:
/// states must be normalized and POVMs complete to within 1e-12.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("register holds {0} qubits, supported range is 1..=12")]
    BadQubitCount(usize),

    #[error("duplicate qubit label `{0}`")]
    DuplicateLabel(String),

    #[error("no qubit labeled `{0}` in the register")]
    UnknownLabel(String),

    #[error("expected {expected} amplitudes for {qubits} qubits, got {got}")]
    AmplitudeCount {
        qubits: usize,
        expected: usize,
        got: usize,
    },

    #[error("amplitude at index {0} is not finite")]
    NonFiniteAmplitude(usize),

    #[error("state norm^2 deviates from 1 by {0:.3e}")]
    NotNormalized(f64),

    #[error("control and target must differ, both are `{0}`")]
    ControlEqualsTarget(String),

    #[error("labels {0:?} do not match the register")]
    LabelSetMismatch(Vec<String>),

    #[error("Schmidt coefficients ({alpha}, {beta}) rejected: {reason}")]
    BadSchmidtPair {
        alpha: f64,
        beta: f64,
        reason: &'static str,
    },

    #[error("alpha^2 = {0} is outside [0.5, 1]")]
    BadAlphaSq(f64),

    #[error("operator is {got}-dimensional, expected {expected}")]
    OperatorDim { got: usize, expected: usize },

    #[error("POVM element {index} is not {property} (deviation {deviation:.3e})")]
    BadPovmElement {
        index: usize,
        property: &'static str,
        deviation: f64,
    },

    #[error("POVM elements sum deviates from identity by {0:.3e}")]
    PovmIncomplete(f64),

    #[error("POVM needs one name per element: {elements} elements, {names} names")]
    PovmNameCount { elements: usize, names: usize },

    #[error("states to discriminate coincide (beta = 0)")]
    DegeneratePair,

    #[error("support outside the odd-parity subspace has weight {0:.3e}")]
    NotOddParity(f64),

    #[error("unit-interval draw {0} is outside [0, 1)")]
    BadUnitDraw(f64),

    #[error("no measurement branch has nonzero probability")]
    NoBranches,

    #[error("{0}")]
    BadArgument(String),
}
