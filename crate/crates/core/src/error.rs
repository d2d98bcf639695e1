use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sector {label} is not an eigenvalue of the measured spin {spin}")]
    InvalidSector { spin: String, label: i8 },

    #[error("the configuration-space oracle handles at most 4 apparatus spins, got {0}")]
    OracleTooLarge(usize),

    #[error("total probability drifted to 1 {drift:+e} at tau = {tau}")]
    NormalizationDrift { tau: f64, drift: f64 },

    #[error("probability undershoot {value:e} at tau = {tau} (site {site})")]
    NegativeProbability { tau: f64, value: f64, site: usize },

    #[error("integration step {dtau:e} underflows the minimum step")]
    StepUnderflow { dtau: f64 },

    #[error("dynamical free energy rose by {increase:e} at tau = {tau} (tolerance {tolerance:e})")]
    HTheorem {
        tau: f64,
        increase: f64,
        tolerance: f64,
    },

    #[error("restricted Gibbs region is empty")]
    EmptyRestriction,

    #[error("system-apparatus coupling g must be positive")]
    ZeroCoupling,

    #[error("off-diagonal element needs two distinct sectors, got s = s' = {0}")]
    DiagonalPair(i8),
}
