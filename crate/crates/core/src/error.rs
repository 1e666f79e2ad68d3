use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The caller supplied something outside the documented domain.
    InvalidInput,
    /// The inputs were fine but the computation could not complete.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid bounds: x_min = {min} must be below x_max = {max}")]
    InvalidBounds { min: f64, max: f64 },

    #[error("too few grid points: {0} (need at least 5)")]
    TooFewPoints(usize),

    #[error("sampled function is not finite at grid row {row}")]
    NonFiniteSample { row: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("margin {margin} leaves no interior rows on an axis with {points} points")]
    MarginExceedsGrid { margin: usize, points: usize },

    #[error("margin {margin} is smaller than the stencil bandwidth {bandwidth}")]
    MarginBelowBandwidth { margin: usize, bandwidth: usize },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("iteration limit of {0} reached without convergence")]
    MaxIterations(usize),

    #[error("non-finite value while evaluating {0}")]
    NonFinite(&'static str),

    #[error("the risk-free rate must be non-zero here")]
    ZeroRate,

    #[error("degenerate potential: quartic coefficient is zero while mu2 = {mu2}")]
    DegeneratePotential { mu2: f64 },

    #[error("a non-trivial vacuum (lam4 < 0, mu2 > 0) is required")]
    NontrivialVacuumRequired,

    #[error("no non-trivial stationary point found")]
    NoStationaryPoint,

    #[error("log-strike {log_strike} is outside the grid [{x_min}, {x_max}]")]
    StrikeOutsideGrid {
        log_strike: f64,
        x_min: f64,
        x_max: f64,
    },

    #[error("point {x} is outside the grid [{x_min}, {x_max}]")]
    PointOutsideGrid { x: f64, x_min: f64, x_max: f64 },

    #[error("step matrix is singular at row {row}")]
    SingularStepMatrix { row: usize },

    #[error("evolution produced non-finite values at step {step}")]
    NonFiniteValues { step: usize },

    #[error("unknown time-stepping scheme '{0}'")]
    UnknownScheme(String),

    #[error("invalid inputs: {0}")]
    InvalidInputs(&'static str),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NoSignChange { .. }
            | Error::MaxIterations(_)
            | Error::NonFinite(_)
            | Error::NoStationaryPoint
            | Error::SingularStepMatrix { .. }
            | Error::NonFiniteValues { .. } => ErrorKind::Numerical,
            _ => ErrorKind::InvalidInput,
        }
    }

    /// Stable kebab-case label, used in machine-readable error objects.
    pub fn label(&self) -> &'static str {
        match self {
            Error::InvalidBounds { .. } => "invalid-bounds",
            Error::TooFewPoints(_) => "too-few-points",
            Error::NonFiniteSample { .. } => "non-finite-sample",
            Error::GridMismatch => "grid-mismatch",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::MarginExceedsGrid { .. } => "margin-exceeds-grid",
            Error::MarginBelowBandwidth { .. } => "margin-below-bandwidth",
            Error::NoSignChange { .. } => "no-sign-change",
            Error::MaxIterations(_) => "max-iterations",
            Error::NonFinite(_) => "non-finite",
            Error::ZeroRate => "zero-rate",
            Error::DegeneratePotential { .. } => "degenerate-potential",
            Error::NontrivialVacuumRequired => "nontrivial-vacuum-required",
            Error::NoStationaryPoint => "no-stationary-point",
            Error::StrikeOutsideGrid { .. } => "strike-outside-grid",
            Error::PointOutsideGrid { .. } => "point-outside-grid",
            Error::SingularStepMatrix { .. } => "singular-step-matrix",
            Error::NonFiniteValues { .. } => "non-finite-values",
            Error::UnknownScheme(_) => "unknown-scheme",
            Error::InvalidInputs(_) => "invalid-inputs",
        }
    }
}
