use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variant names double as the stable error names printed by the CLI and
/// returned through the C interface, see [`Error::name`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max asymmetry {asymmetry:e}")]
    NonHermitianInput { asymmetry: f64 },
    #[error("matrix dimension is zero")]
    DimensionZero,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("weight {value} at index {index} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("QL iteration did not converge for eigenvalue {index}")]
    IterationLimit { index: usize },
    #[error("set is empty after restriction to the window")]
    EmptyAfterWindow,
    #[error("need at least 3 usable samples, found {found}")]
    InsufficientSamples { found: usize },
    #[error("all sample positions coincide")]
    DegenerateFit,
    #[error("floating-point continued fraction is unreliable beyond {elements} elements")]
    PrecisionExhausted { elements: usize },
    #[error("continued fraction has {available} elements, {requested} requested")]
    NotEnoughElements { available: usize, requested: usize },
    #[error("integer overflow in {context}")]
    Overflow { context: &'static str },
    #[error("letter '{letter}' is not in the alphabet")]
    UnknownLetter { letter: char },
    #[error("image of letter '{letter}' is empty")]
    EmptyImage { letter: char },
    #[error("word of length {length} exceeds the explicit storage cap")]
    GenerationTooLarge { length: u64 },
    #[error("substitution matrix is not primitive")]
    NotPrimitive,
    #[error("laminate word is empty")]
    EmptyWord,
    #[error("grid has {points} points per cell, need at least 8")]
    GridTooCoarse { points: usize },
    #[error("lifted mesh {nx}x{ny} is too coarse, need at least 8 points per direction")]
    MeshTooCoarse { nx: usize, ny: usize },
    #[error("plane-wave truncation {n_pw} is below the minimum of 2")]
    TruncationTooSmall { n_pw: usize },
    #[error("truncated weight convolution matrix is not positive definite")]
    IndefiniteWeight,
    #[error("fourier coefficients are not Hermitian-symmetric at ({m}, {n})")]
    NonHermitianCoefficients { m: i32, n: i32 },
    #[error("lambda = {lambda} is not inside a gap of any listed approximant")]
    NotInGap { lambda: f64 },
    #[error("mode at {eigenvalue} has boundary amplitude ratio {ratio:e}, domain too short")]
    TruncationSuspect { eigenvalue: f64, ratio: f64 },
    #[error("invalid window [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonHermitianInput { .. } => "NonHermitianInput",
            Error::DimensionZero => "DimensionZero",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonPositiveWeight { .. } => "NonPositiveWeight",
            Error::IterationLimit { .. } => "IterationLimit",
            Error::EmptyAfterWindow => "EmptyAfterWindow",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::DegenerateFit => "DegenerateFit",
            Error::PrecisionExhausted { .. } => "PrecisionExhausted",
            Error::NotEnoughElements { .. } => "NotEnoughElements",
            Error::Overflow { .. } => "Overflow",
            Error::UnknownLetter { .. } => "UnknownLetter",
            Error::EmptyImage { .. } => "EmptyImage",
            Error::GenerationTooLarge { .. } => "GenerationTooLarge",
            Error::NotPrimitive => "NotPrimitive",
            Error::EmptyWord => "EmptyWord",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::MeshTooCoarse { .. } => "MeshTooCoarse",
            Error::TruncationTooSmall { .. } => "TruncationTooSmall",
            Error::IndefiniteWeight => "IndefiniteWeight",
            Error::NonHermitianCoefficients { .. } => "NonHermitianCoefficients",
            Error::NotInGap { .. } => "NotInGap",
            Error::TruncationSuspect { .. } => "TruncationSuspect",
            Error::InvalidWindow { .. } => "InvalidWindow",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }
}
