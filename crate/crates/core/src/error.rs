use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("site index {index} out of range for a chain of {n_sites} sites")]
    IndexOutOfRange { index: usize, n_sites: usize },

    #[error("negative rate `{name}` = {value}")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("steady state is not unique (numerical null space of dimension {nullity})")]
    NonUniqueSteadyState { nullity: usize },

    #[error("steady-state solver failed: {0}")]
    SolverFailure(String),

    #[error("integrator step size underflow at t = {t} (h = {step})")]
    StepSizeUnderflow { t: f64, step: f64 },

    #[error("every trial point failed")]
    AllPointsFailed,

    #[error("every sweep record failed")]
    AllRecordsFailed,

    #[error("underdetermined fit: {available} usable records, need at least {required}")]
    Underdetermined { available: usize, required: usize },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that a sweep should record and step past rather than
    /// abort on.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            Error::NonUniqueSteadyState { .. } | Error::SolverFailure(_)
        )
    }
}
