use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config{}: {msg}", line.map(|n| format!(" line {n}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },
    #[error(transparent)]
    Model(#[from] critblow::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 usage, 3 configuration, 4 numerical, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        use critblow::Error as E;
        match self {
            Self::Usage(_) => 2,
            Self::Config { .. } => 3,
            Self::Model(e) => match e {
                E::ExponentTooSmall(_)
                | E::NonPositiveMu(_)
                | E::TruncationTooSmall(_)
                | E::InvalidConfig(_)
                | E::GammaWindow { .. }
                | E::AlphaWindow { .. }
                | E::ParameterOutOfRange { .. }
                | E::ZeroPoint
                | E::InvalidArgument(_) => 3,
                _ => 4,
            },
            Self::Io { .. } | Self::Input { .. } => 5,
        }
    }
}
