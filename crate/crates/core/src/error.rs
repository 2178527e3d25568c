use thiserror::Error;

/// Errors raised by the noise model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode label `{0}` is already registered")]
    DuplicateLabel(String),

    #[error("expressions belong to different mode registries")]
    MixedRegistries,

    #[error("mode index {0} is not registered")]
    UnregisteredMode(usize),

    #[error("mode `{label}` is {actual} but {expected} was required")]
    ModeKind {
        label: String,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("expression is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid window [{start}, {end}]")]
    InvalidWindow { start: f64, end: f64 },

    #[error("time {t} lies outside the kernel window [0, {duration}]")]
    TimeOutOfWindow { t: f64, duration: f64 },

    #[error("white-noise input has no pointwise value; filter it with a weight first")]
    PointwiseNoise,

    #[error("kernel is unbalanced (control coupling {control}, passive coupling {passive})")]
    Unbalanced { control: f64, passive: f64 },

    #[error("control channel mismatch: {0}")]
    ChannelMismatch(String),

    #[error("non-canonical sequence: {0}")]
    NonCanonicalSequence(String),

    #[error("mean atomic amplitude is zero")]
    ZeroAmplitude,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unstable step: dt*omega = {0} exceeds 0.1")]
    UnstableStep(f64),

    #[error("profile is not normalized (integral of f^2 = {0})")]
    UnnormalizedProfile(f64),

    #[error("empty {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects non-finite values and, when `positive`, values that are not strictly positive.
pub(crate) fn check_finite(name: &'static str, value: f64, positive: bool) -> Result<f64> {
    if !value.is_finite() {
        return Err(invalid(name, format!("{value} is not finite")));
    }
    if positive && value <= 0.0 {
        return Err(invalid(name, format!("{value} must be positive")));
    }
    Ok(value)
}
