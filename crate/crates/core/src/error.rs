use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// E[w^τ] does not exist for this stopping time at the requested weight.
    #[error("moment-generating function diverges: {0}")]
    Divergence(String),

    /// Zero belief variance, typically a model with no mean shift.
    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("series truncation needed more than {cap} terms")]
    CapExceeded { cap: u64 },

    #[error("length mismatch: {decisions} decisions but {weights} weights")]
    LengthMismatch { decisions: usize, weights: usize },

    #[error("agent {index}: {source}")]
    Agent {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn for_agent(self, index: usize) -> Self {
        Error::Agent {
            index,
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numeric divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::LengthMismatch { .. } => 2,
            Error::Divergence(_) | Error::Degenerate(_) | Error::CapExceeded { .. } => 3,
            Error::Agent { source, .. } => source.exit_code(),
            Error::Io(_) => 1,
        }
    }

    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence(_) => true,
            Error::Agent { source, .. } => source.is_divergence(),
            _ => false,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            Error::Degenerate(_) => true,
            Error::Agent { source, .. } => source.is_degenerate(),
            _ => false,
        }
    }
}
