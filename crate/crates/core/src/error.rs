use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("expected {expected} amplitudes/rows, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("{what} register of {qubits} qubits exceeds the cap of {cap}")]
    RegisterTooLarge {
        what: &'static str,
        qubits: usize,
        cap: usize,
    },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("matrix has eigenvalue {0:e} below the positivity tolerance")]
    NotPositive(f64),
    #[error("matrix is not idempotent (max |P^2 - P| = {0:e})")]
    NotIdempotent(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("qubit index {index} out of range for a {width}-qubit register")]
    QubitOutOfRange { index: usize, width: usize },
    #[error("qubit {0} listed twice")]
    DuplicateQubit(usize),
    #[error("qubit set is empty")]
    EmptyQubitSet,
    #[error("control and target are both qubit {0}")]
    SameQubit(usize),
    #[error("qubit {0} is in both subsystems")]
    Overlap(usize),
    #[error("subsystems do not partition the register")]
    NotAPartition,
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("decoherence time must be positive, got {0}")]
    NonPositiveTimescale(f64),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("environment record is null (zero weight)")]
    NullRecord,
    #[error("majority vote needs an odd number of bits, got {0}")]
    EvenLength(usize),
    #[error("{errors} errors requested on an environment of {size} qubits")]
    TooManyErrors { errors: usize, size: usize },
    #[error("amplitude magnitudes differ (spread {0:e}); use born_probability directly")]
    UnequalMagnitudes(f64),
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("basis vectors are not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("projectors do not commute (max |[P,Q]| = {0:e})")]
    NonCommuting(f64),
    #[error("record states are not orthogonal (overlap {0:e})")]
    NonOrthogonalRecords(f64),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
