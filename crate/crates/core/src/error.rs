use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("SQUID {squid} level {level} out of range 0..=3")]
    LevelOutOfRange { squid: usize, level: usize },
    #[error("photon number {photons} exceeds truncation n_max = {n_max}")]
    PhotonOutOfRange { photons: usize, n_max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid subsystem list: {0}")]
    InvalidSubsystems(String),
    #[error("SQUID index {0} out of range 1..=3")]
    InvalidSquid(usize),
    #[error("transition levels must be distinct and in 0..=3, got ({0}, {1})")]
    InvalidTransition(usize, usize),
    #[error("SQUID {0} has no resonant exchange in this protocol")]
    ExchangeNotAllowed(usize),
    #[error("{name} must be nonnegative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("phase-gate precondition violated: population {population:.3e} outside logical ⊗ vacuum")]
    PreconditionViolated { population: f64 },
    #[error("gate left {population:.3e} population outside logical ⊗ vacuum")]
    NonVacuumResidue { population: f64 },
    #[error("overdamped regime: gamma3 = {gamma3} ≥ 2g = {two_g}")]
    Overdamped { gamma3: f64, two_g: f64 },
    #[error("amplitude profile not normalized: norm² = {0}")]
    NotNormalized(f64),
    #[error("unknown figure id {0:?}")]
    UnknownFigure(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },
}

impl Error {
    /// True for errors that come from evaluating a formula or evolution
    /// outside its numerical domain (as opposed to malformed input).
    pub fn is_numerical_domain(&self) -> bool {
        matches!(
            self,
            Error::Overdamped { .. }
                | Error::NotNormalized(_)
                | Error::PreconditionViolated { .. }
                | Error::NonVacuumResidue { .. }
        )
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Negative { name, value })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}
