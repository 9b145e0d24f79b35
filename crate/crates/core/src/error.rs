use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("integration diverged: non-finite state after t = {last_valid_t}")]
    IntegrationDiverged { last_valid_t: f64 },

    #[error("step size {h:e} fell below min_step at t = {t} (stiff or singular system)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },

    #[error("state dimension {got} does not match system dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown state label `{0}`")]
    UnknownLabel(String),

    #[error("NNDR topology infeasible at v_out = {v_out}: current-balance residual has no sign change")]
    TopologyInfeasible { v_out: f64 },

    #[error("g_M calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config { line: usize, key: String, message: String },

    #[error("CSV parse error at row {row}: {message}")]
    CsvParse { row: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
