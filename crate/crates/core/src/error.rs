use thiserror::Error;

/// Every failure the library can report. Variant names are part of the CLI
/// contract: they are printed verbatim when a command fails.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("InvalidInitialValue: c = {c} must lie in ({lower}, 1] for n = {n}")]
    InvalidInitialValue { n: u32, c: f64, lower: f64 },

    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),

    #[error("StepFailure: step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("HorizonTooShort: t_max = {t_max} but at least {required} is needed")]
    HorizonTooShort { t_max: f64, required: f64 },

    #[error("NonPositiveValue: v = {v:e} at t = {t} inside the fit window")]
    NonPositiveValue { t: f64, v: f64 },

    #[error("DegenerateFit: {count} samples in window, at least {required} needed")]
    DegenerateFit { count: usize, required: usize },

    #[error("OutOfRange: t = {t} outside [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },

    #[error("BoundaryPoint: |z| = {norm} is too close to the unit sphere")]
    BoundaryPoint { norm: f64 },

    #[error("NoConvergence: {0}")]
    NoConvergence(String),

    #[error("RadiusTooSmall: R = {r} but the collar needs R >= {min}")]
    RadiusTooSmall { r: f64, min: f64 },

    #[error("SlowConvergence: asymptotic regression residual {residual:e} exceeds {limit:e}")]
    SlowConvergence { residual: f64, limit: f64 },

    #[error("AngleMismatch: warping slope {slope} differs from {expected}")]
    AngleMismatch { slope: f64, expected: f64 },

    #[error("BisectionFailure: no c in the admissible range reproduces alpha = {alpha}")]
    BisectionFailure { alpha: f64 },

    #[error("DefectUnderflow: sup defect {sup:e} at R = {r} is below {floor:e}")]
    DefectUnderflow { r: f64, sup: f64, floor: f64 },

    #[error("NewtonDivergence: no convergence after {iters} iterations (residual {residual:e})")]
    NewtonDivergence { iters: usize, residual: f64 },

    #[error("DimensionMismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("NegativeCoefficient: {name} = {value} must be >= {min}")]
    NegativeCoefficient { name: &'static str, value: f64, min: f64 },

    #[error("Io: {0}")]
    Io(String),

    #[error("Parse: {0}")]
    Parse(String),
}

impl Error {
    /// Validation failures map to CLI exit code 2, numerical ones to 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInitialValue { .. }
                | Error::InvalidArgument(_)
                | Error::HorizonTooShort { .. }
                | Error::OutOfRange { .. }
                | Error::BoundaryPoint { .. }
                | Error::RadiusTooSmall { .. }
                | Error::DimensionMismatch { .. }
                | Error::NegativeCoefficient { .. }
                | Error::Parse(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
