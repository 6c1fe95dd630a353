use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A spin label, mixing parameter, or other scalar input is outside its
    /// admissible range. The message names the offending quantity and the
    /// valid interval.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Matrix or subsystem dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix expected to be Hermitian deviates beyond tolerance.
    #[error("matrix is not Hermitian (max |H - H†| entry = {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },

    /// A probability table is malformed (negative entries or trace off 1).
    #[error("malformed probability table: {0}")]
    MalformedDistribution(String),

    /// A CHSH settings pair has no samples, so no correlator can be estimated.
    #[error("insufficient data: settings pair {pair:?} has zero samples")]
    InsufficientData { pair: (String, String) },

    /// The sifted key is shorter than the message to encode.
    #[error("key shortfall: message needs {needed} bits but only {achievable} sifted key bits are available")]
    KeyShortfall { needed: usize, achievable: usize },

    /// Inputs that must have equal length do not.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// Empty input where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(String),
}
