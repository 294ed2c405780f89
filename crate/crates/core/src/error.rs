use thiserror::Error;

pub type Result<T> = std::result::Result<T, ScodError>;

#[derive(Debug, Error)]
pub enum ScodError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The closed-form oracle needs a shared-covariance, single-class world.
    #[error("unsupported oracle: {0}")]
    UnsupportedOracle(String),

    #[error("fit diverged at epoch {epoch}: loss became {loss}")]
    FitDiverged { epoch: usize, loss: f64 },

    #[error("degenerate score: {0}")]
    DegenerateScore(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ScodError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ScodError::InvalidArgument(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScodError::Config(_) | ScodError::UnsupportedOracle(_) => 2,
            ScodError::Data(_) | ScodError::InvalidArgument(_) | ScodError::DegenerateScore(_) => 3,
            ScodError::FitDiverged { .. } => 4,
            ScodError::Io(_) => 3,
        }
    }
}
