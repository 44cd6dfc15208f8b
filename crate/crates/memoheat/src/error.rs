//! Crate-wide error type.

use num_complex::Complex64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- kernel validation -------------------------------------------------
    #[error("kernel must have at least one term")]
    EmptyKernel,
    #[error("amplitude and rate sequences have different lengths ({amplitudes} vs {rates})")]
    LengthMismatch { amplitudes: usize, rates: usize },
    #[error("amplitude a[{index}] = {value} is negative")]
    NegativeAmplitude { index: usize, value: f64 },
    #[error("rates must be nonnegative and strictly increasing (violated at index {index})")]
    NonIncreasingRates { index: usize },
    #[error("kernel generator is invalid: {reason}")]
    BadGenerator { reason: String },

    // ---- evaluation domains ------------------------------------------------
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("z = {z} hits the kernel pole at -b = {pole}")]
    PoleHit { z: Complex64, pole: f64 },
    #[error("z = {z} lies outside the sector |arg z| < pi - {delta}")]
    RayAngle { z: Complex64, delta: f64 },
    #[error("z = {z} is a spectrum point (denominator {name} vanishes)")]
    SpectrumPointHit { z: Complex64, name: &'static str },
    #[error("expansion order must be one of 0,1,2,3, got {0}")]
    BadOrder(u8),

    // ---- grids and trajectories ---------------------------------------------
    #[error("time grid is invalid: {reason}")]
    BadGrid { reason: String },
    #[error("t = {t} is not a grid time (step {step})")]
    OffGridTime { t: f64, step: f64 },
    #[error("x = {x} lies outside [0, pi]")]
    OutOfDomain { x: f64 },
    #[error("forcing rule references mode n = {n}, which is not solved (N = {n_max})")]
    UnknownForcingMode { n: u32, n_max: u32 },
    #[error("sampled forcing for mode {n} has {got} samples, grid needs {need}")]
    ForcingSampleCount { n: u32, got: usize, need: usize },
    #[error("forcing derivative requires closed-form terms, mode {n} is sampled")]
    ForcingDerivativeUnavailable { n: u32 },
    #[error("mode n = {n} failed: {source}")]
    Mode {
        n: u32,
        #[source]
        source: Box<Error>,
    },

    // ---- line quadrature ----------------------------------------------------
    #[error("line quadrature is invalid: {reason}")]
    BadQuadrature { reason: String },
    #[error("weighted line norm of {kind} diverges for s = {s} (admissible: s < {limit})")]
    NormDiverges { kind: &'static str, s: f64, limit: f64 },
    #[error("kernel pole at -b = {pole} lies on the integration line Re z = {eps}")]
    PoleOnLine { pole: f64, eps: f64 },

    // ---- spectrum -------------------------------------------------------
    #[error("root finding did not certify: best residuals {residuals:?} exceed tol {tol}")]
    RootsNotCertified { residuals: Vec<f64>, tol: f64 },

    // ---- checks ----------------------------------------------------------
    #[error("check precondition violated: {reason}")]
    CheckPrecondition { reason: String },

    // ---- scenario / io ----------------------------------------------------
    #[error("scenario error in field `{field}`: {message}")]
    Scenario { field: String, message: String },
    #[error("cannot parse scenario: {0}")]
    ScenarioParse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn scenario(field: &str, message: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
