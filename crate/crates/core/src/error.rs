use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit count {qubits} outside supported range 1..={max}")]
    QubitCount { qubits: usize, max: usize },
    #[error("qubit index {qubit} out of range for {qubits} qubits")]
    QubitIndex { qubit: usize, qubits: usize },
    #[error("CNOT control and target are both qubit {0}")]
    SameControlTarget(usize),
    #[error("operator mask {mask:#b} does not fit in {qubits} qubits")]
    MaskOutOfRange { mask: usize, qubits: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("probability distribution is invalid (sum {0})")]
    InvalidDistribution(f64),
    #[error("histogram counts sum to {counted}, expected {shots}")]
    CountMismatch { counted: u64, shots: u64 },
    #[error("invalid bit-flip probability {value} on qubit {qubit}")]
    InvalidProbability { qubit: usize, value: f64 },
    #[error("non-invertible noise model: qubit {qubit} has p0 + p1 = {sum}")]
    NonInvertible { qubit: usize, sum: f64 },
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("expected {expected} circuit parameters, found {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("ansatz layout is defined for 2 or 3 qubits, got {0}")]
    UnsupportedAnsatz(usize),
    #[error("truncation order {order} exceeds {qubits} qubits")]
    TruncationOrder { order: usize, qubits: usize },
    #[error("identity expectation must be 1, found {0}")]
    IdentityExpectation(f64),
    #[error("expectation value {0} outside [-1, 1]")]
    ExpectationOutOfRange(f64),
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("power-law fit needs positive values, found {0}")]
    NonPositiveValue(f64),
    #[error("power-law fit needs at least two distinct shot counts")]
    DegenerateAbscissa,
    #[error("mitigated power-law exponent is zero")]
    ZeroExponent,
    #[error("shot grids do not match")]
    GridMismatch,
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
