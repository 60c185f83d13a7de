use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid normal draw: {0}")]
    InvalidNormalDraw(f64),
    #[error("degenerate transition density (sigma = {sigma}, dt = {dt})")]
    DegenerateDensity { sigma: f64, dt: f64 },
    #[error("degenerate potential: gradient undefined for zero volatility")]
    DegeneratePotential,
    #[error("position outside support: x = {0}")]
    OutsideSupport(f64),
    #[error("trajectory left support at x = {0}")]
    LeftSupport(f64),
    #[error("transition from dead state: x = {x} <= barrier {barrier}")]
    DeadState { x: f64, barrier: f64 },
    #[error("tilt overflow: exp({0}) is not finite, use a smaller tilting parameter")]
    TiltOverflow(f64),
    #[error("ensemble extinction: all particle weights are zero")]
    Extinction,
    #[error("barrier {barrier} at or above strike {strike} is not supported by the closed form")]
    BarrierAboveStrike { barrier: f64, strike: f64 },
    #[error("empty estimate list")]
    EmptyEstimates,
    #[error("at least {needed} estimates required, got {got}")]
    TooFewEstimates { needed: usize, got: usize },
    #[error("zero mean estimate")]
    ZeroMean,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
