use thiserror::Error;

/// Error type shared across the crate.
///
/// Each variant maps to one of the machine-readable categories the CLI
/// reports on exit: `dimension`, `config`, `contract`, `format`, `io`,
/// `diverged`.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape or extent mismatch between tensors or maps.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid configuration value or combination.
    #[error("config error: {0}")]
    Config(String),

    /// A caller-side precondition was violated.
    #[error("contract error: {0}")]
    Contract(String),

    /// A file did not parse as the expected archive or schema.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Training produced a non-finite loss.
    #[error("training diverged: {0}")]
    Diverged(String),
}

impl Error {
    /// Stable category slug for machine-readable error reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Config(_) => "config",
            Error::Contract(_) => "contract",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Diverged(_) => "diverged",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
