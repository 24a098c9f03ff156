use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("profile construction requires p > 3 (the shrinking-set strategy breaks down when beta >= 1), got p = {0}")]
    ExponentTooSmall(f64),
    #[error("gradient coefficient mu must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("truncation constant K must be at least 6, got {0}")]
    TruncationTooSmall(f64),
    #[error("q-moment quadrature {quadrature} disagrees with closed form {closed_form} (relative {relative:e})")]
    MomentMismatch {
        quadrature: f64,
        closed_form: f64,
        relative: f64,
    },
    #[error("self-similar time must be positive, got s = {0}")]
    NonPositiveTime(f64),
    #[error("semigroup time must be positive, got theta = {0}")]
    NonPositiveTheta(f64),
    #[error("value undefined at node {index} (y = {y})")]
    NonFinite { index: usize, y: f64 },
    #[error("grid half-width {half_width} does not contain the cutoff support {required}")]
    InsufficientDomain { half_width: f64, required: f64 },
    #[error("Gaussian tail mass {mass:e} beyond the grid exceeds tolerance at y = {y}")]
    TailTruncation { y: f64, mass: f64 },
    #[error("solver diverged at s = {s}: sup|v| = {norm:e}")]
    Divergence { s: f64, norm: f64 },
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("epsilon {epsilon} outside the feasible gamma window (0, {width})")]
    GammaWindow { epsilon: f64, width: f64 },
    #[error("alpha {alpha} outside the admissible window (0, {upper})")]
    AlphaWindow { alpha: f64, upper: f64 },
    #[error("time-series cadence too coarse: differencing error {estimate:e} at s = {s}")]
    CadenceTooCoarse { s: f64, estimate: f64 },
    #[error("time series must be uniformly spaced with at least {needed} samples")]
    BadSeries { needed: usize },
    #[error("shooting parameters ({d0}, {d1}) outside [-2, 2]^2")]
    ParameterOutOfRange { d0: f64, d1: f64 },
    #[error("degree certificate lost at level {level}: no sub-rectangle covers all four sign quadrants\n{stencil}")]
    DegreeLost { level: usize, stencil: String },
    #[error("fit rejected: {0}")]
    FitRejected(String),
    #[error("insufficient range: {0}")]
    InsufficientRange(String),
    #[error("x0 must be nonzero")]
    ZeroPoint,
    #[error("bisection failed: {0}")]
    Bisection(String),
    #[error("physical time t = {t} is not before the blow-up time T = {blowup_time}")]
    AfterBlowup { t: f64, blowup_time: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
