use std::path::PathBuf;

use ssmc_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("library file {path}: {message}")]
    Library { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 I/O, 2 configuration or input, 3 physics or tracking, 4 numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Library { .. } => 2,
            CliError::Core(e) => match e.root() {
                CoreError::InvalidArgument(_) | CoreError::ModelConstruction(_) => 2,
                CoreError::Singularity { .. } | CoreError::Untrackable(_) | CoreError::DegenerateState(_) => 3,
                _ => 4,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_root_cause() {
        let tracking = CoreError::Step { species: "s1".into(), step: 12, source: Box::new(CoreError::Untrackable(1.5)) };
        assert_eq!(CliError::Core(tracking).exit_code(), 3);
        assert_eq!(CliError::Core(CoreError::RankDeficient(1e-20)).exit_code(), 4);
        assert_eq!(CliError::Core(CoreError::InvalidArgument("n_s".into())).exit_code(), 2);
        assert_eq!(CliError::Config("bad".into()).exit_code(), 2);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::io("x", io).exit_code(), 1);
    }
}
