use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown system id `{0}`")]
    UnknownSystem(String),

    #[error("unknown involution `{0}`")]
    UnknownInvolution(String),

    #[error("collision: |q| = {radius:e} below guard at t = {t}")]
    Collision { t: f64, radius: f64 },

    #[error("no point of the fixed set at s = {s} on energy level {tau} (outside Hill region)")]
    OutsideHillRegion { s: f64, tau: f64 },

    #[error("step size underflow at t = {t} (last good time)")]
    StepSizeUnderflow { t: f64 },

    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },

    #[error("contact condition fails: lambda(X_F) = {value:e} at t = {t}")]
    NotContactType { t: f64, value: f64 },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("near-degenerate shooting Jacobian (det {det:e}) at s = {s}, T = {duration}")]
    NearDegenerate { s: f64, duration: f64, det: f64 },

    #[error("chord endpoint residual {residual:e} too large")]
    EndpointResidual { residual: f64 },

    #[error("seed chord is degenerate (measure {measure:e})")]
    DegenerateSeed { measure: f64 },

    #[error("invalid resonance label ({k}, {l})")]
    InvalidLabel { k: u64, l: u64 },

    #[error("tau = {0} is not below the critical value -3/2")]
    AboveCritical(f64),

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("no completion exists inside the degree window")]
    WindowTooSmall,

    #[error("size cap exceeded: {size} generators (max {cap})")]
    SizeCap { size: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
