use crate::sample::Side;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("sample is empty")]
    EmptySample,
    #[error("observation {index} is not finite")]
    NonFiniteObservation { index: usize },
    #[error("singular design on the {side} side ({reason})")]
    SingularDesign { side: Side, reason: String },
    #[error("fewer than 3 observations carry positive weight on the {side} side ({count})")]
    InsufficientSupport { side: Side, count: usize },
    #[error("quadrature did not reach tolerance {tolerance:e} on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64, tolerance: f64 },
    #[error("invalid bandwidth rate: c = {c}, r = {r} (need c > 0 and 1/7 < r < 1)")]
    InvalidRate { c: f64, r: f64 },
    #[error("estimated variance is zero; the statistic is undefined")]
    DegenerateVariance,
    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("count must be at least 1, got {0}")]
    InvalidCount(usize),
    #[error("invalid DGP: {0}")]
    InvalidDgp(String),
    #[error("radius {kappa} exceeds the running-variable support (max {max})")]
    KappaOutOfSupport { kappa: f64, max: f64 },
    #[error("running-variable densities differ")]
    DensityMismatch,
    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),
    #[error("DGP '{name}' has theta = {theta}, not the null value {theta0}")]
    NotANullDgp { name: String, theta: f64, theta0: f64 },
    #[error("DGP '{name}' has theta equal to the null value {theta0}")]
    NotAnAlternative { name: String, theta0: f64 },
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("catalog: {0}")]
    Catalog(String),
}

impl Error {
    /// The variant name, for reporting.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonPositiveBandwidth(_) => "NonPositiveBandwidth",
            Error::EmptySample => "EmptySample",
            Error::NonFiniteObservation { .. } => "NonFiniteObservation",
            Error::SingularDesign { .. } => "SingularDesign",
            Error::InsufficientSupport { .. } => "InsufficientSupport",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::InvalidRate { .. } => "InvalidRate",
            Error::DegenerateVariance => "DegenerateVariance",
            Error::InvalidAlpha(_) => "InvalidAlpha",
            Error::InvalidProbability(_) => "InvalidProbability",
            Error::InvalidCount(_) => "InvalidCount",
            Error::InvalidDgp(_) => "InvalidDgp",
            Error::KappaOutOfSupport { .. } => "KappaOutOfSupport",
            Error::DensityMismatch => "DensityMismatch",
            Error::AllReplicationsFailed(_) => "AllReplicationsFailed",
            Error::NotANullDgp { .. } => "NotANullDgp",
            Error::NotAnAlternative { .. } => "NotAnAlternative",
            Error::InvalidExperiment(_) => "InvalidExperiment",
            Error::Catalog(_) => "Catalog",
        }
    }
}
