use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0}")]
    NoiseMismatch(String),

    #[error("schedule is singular at t = {0}")]
    SingularSchedule(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid time interval: [{from}, {to}]")]
    InvalidInterval { from: f64, to: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected: {0}")]
    Disconnected(String),

    #[error("edge {{{0}, {1}}} is not in the graph")]
    EdgeNotInGraph(usize, usize),

    #[error("{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Bad input detected before or while setting up an experiment (exit
    /// code 1). Failures inside a run and I/O failures are runtime errors.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::InvalidProblem(_)
            | Error::DimensionMismatch { .. }
            | Error::NoiseMismatch(_)
            | Error::InvalidSchedule(_)
            | Error::InvalidGraph(_)
            | Error::Disconnected(_)
            | Error::EdgeNotInGraph(..) => true,
            Error::Run { .. } | Error::Io { .. } | Error::SingularSchedule(_) | Error::InvalidInterval { .. } => false,
        }
    }
}
