use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown fixture `{0}` (expected one of aml-orig, aml-1, aml-2)")]
    UnknownFixture(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no events at a strictly positive time")]
    NoEvents,
    #[error("partial likelihood is monotone; no finite maximum (|beta| = {norm:.3e} after {iterations} iterations)")]
    MonotoneLikelihood { iterations: usize, norm: f64 },
    #[error("observed information is singular at beta = {0:?}")]
    SingularInformation(Vec<f64>),
    #[error("Newton iteration did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("baseline hazard increment {increment} at t = {time} exceeds 1")]
    FactorOutOfRange { time: f64, increment: f64 },
    #[error("denominator confidence interval ({low}, {high}) contains zero")]
    DegenerateDenominator { low: f64, high: f64 },
    #[error("{failures} of {reps} replicate refits failed (limit 1%)")]
    ExcessiveRefitFailures { failures: usize, reps: usize },
    #[error("estimated variance is zero (survival estimate {0})")]
    DegenerateVariance(f64),
}

impl Error {
    /// Stable identifier of the error variant, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::UnknownFixture(_) => "UnknownFixture",
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NoEvents => "NoEvents",
            Error::MonotoneLikelihood { .. } => "MonotoneLikelihood",
            Error::SingularInformation(_) => "SingularInformation",
            Error::NonConvergence(_) => "NonConvergence",
            Error::FactorOutOfRange { .. } => "FactorOutOfRange",
            Error::DegenerateDenominator { .. } => "DegenerateDenominator",
            Error::ExcessiveRefitFailures { .. } => "ExcessiveRefitFailures",
            Error::DegenerateVariance(_) => "DegenerateVariance",
        }
    }

    /// Input errors (bad data, bad arguments) as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnknownFixture(_)
                | Error::InvalidDataset(_)
                | Error::InvalidArgument(_)
        )
    }
}
