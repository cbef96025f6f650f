use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not underdamped: kappa = {kappa} >= min omega = {min_omega} (pass the overdamped override to accept)")]
    NotUnderdamped { kappa: f64, min_omega: f64 },

    #[error("degenerate spectrum: omega[{first}] == omega[{second}] == {omega}")]
    DegenerateSpectrum {
        first: usize,
        second: usize,
        omega: f64,
    },

    #[error("truncation too small: state needs block {needed}, truncation keeps blocks 0..={available}")]
    TruncationTooSmall { needed: usize, available: usize },

    #[error("order {requested} exceeds the {available} stored modes")]
    ModeCountExceeded { requested: usize, available: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("time {t} outside the control horizon [0, {tau}]")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("Gramian singular at this (N, tau, kappa) = ({order}, {tau}, {kappa}); condition estimate {condition:e}")]
    GramianSingular {
        order: usize,
        tau: f64,
        kappa: f64,
        condition: f64,
    },

    #[error("weight matrix is not symmetric positive definite")]
    WeightNotPositiveDefinite,

    #[error("control law was synthesized for a different system (fingerprint {expected}, got {found})")]
    FingerprintMismatch { expected: String, found: String },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::NonFinite(_) | Error::GramianSingular { .. } | Error::Serialization(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
