//! Library half of the `fascache` command-line tool: configuration, sweep
//! drivers, presets and SVG rendering.

pub mod config;
pub mod plot;
pub mod presets;
pub mod run;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] fascache::Error),
    #[error("{0}")]
    Io(String),
    #[error("plot input error: {0}")]
    Plot(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage(_) | Self::Plot(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
