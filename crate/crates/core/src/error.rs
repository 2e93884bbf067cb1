use thiserror::Error;

/// Errors produced by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {trace} is not within 1e-6 of 1")]
    BadTrace { trace: f64 },

    #[error("matrix is not unitary: max |U^dag U - I| = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("eigensolver did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("map `{map}` cannot act on a {set}")]
    UnsupportedCombination { map: String, set: String },

    #[error("at least 2 base sets are required, got {found}")]
    InsufficientSets { found: usize },

    #[error("grid resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: String, right: String },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("operator product needs at least 2 factors, got {found}")]
    EmptyProduct { found: usize },

    #[error("degenerate spectrum: {} coherent pair(s) share an energy, first {:?}", pairs.len(), pairs.first())]
    DegenerateSpectrum { pairs: Vec<(usize, usize)> },

    #[error("invalid rotator spec: {0}")]
    InvalidSpec(String),

    #[error("discrete Wigner construction needs odd dimension, got {0}")]
    EvenDimension(usize),

    #[error("spectral profile is not absolutely integrable: {0}")]
    NonIntegrableProfile(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
