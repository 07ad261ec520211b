use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no resonant wavenumber: omega(k) - omega0 has no sign change on (0, pi)")]
    NoResonance,

    #[error("packet half-width L = {l} does not fit in a lattice with N = {n_half}")]
    PacketTooLarge { l: usize, n_half: usize },

    #[error("exponential profile truncated by the lattice: tail amplitude {tail:.3e} at l = N (need < 1e-8, N >= {min_n_half})")]
    TailTruncated { tail: f64, min_n_half: usize },

    #[error("k grid of {grid} points is too small for {sites} lattice sites")]
    GridTooSmall { grid: usize, sites: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("initial state is not normalized (norm^2 = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("stability guard violated: dt * spectral bound = {product:.4} > 0.25")]
    StabilityGuard { product: f64 },

    #[error("norm drifted to {norm} at t = {t} (tolerance {tolerance:e})")]
    NormDrift { t: f64, norm: f64, tolerance: f64 },

    #[error("t_max = {t_max} exceeds the edge-effect horizon {horizon}")]
    EdgeHorizonExceeded { t_max: f64, horizon: f64 },

    #[error("volterra step too large: h * sqrt(|G(0)|) = {value:.4} > 0.1")]
    StepTooLarge { value: f64 },

    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("survival probability is not positive at t = {t}")]
    NonPositiveSurvival { t: f64 },

    #[error("survival is not decaying: ripple of {ripple:.3} at t = {t} exceeds 10%")]
    NotDecaying { t: f64, ripple: f64 },

    #[error("trace ends at t = {t_end}, need coverage up to {needed}")]
    TraceTooShort { t_end: f64, needed: f64 },

    #[error("traces are sampled on different time grids")]
    GridMismatch,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
