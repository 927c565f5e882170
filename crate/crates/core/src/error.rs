use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("eigenvalue {0:e} is below the PSD tolerance")]
    NegativeEigenvalue(f64),
    #[error("invalid bipartition: {0}")]
    InvalidCut(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resource guard: {0}")]
    ResourceGuard(String),
    #[error("state has a positive partial transpose; no decomposable witness detects it")]
    PositivePartialTranspose,
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
