use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config: unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing prerequisite {}; run `skyglow {command}` first", path.display())]
    MissingArtifact { path: PathBuf, command: &'static str },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output directory {} is locked by another run (remove the lock file if stale)", .0.display())]
    Locked(PathBuf),
    #[error("{}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] skyglow::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn core(e: impl Into<skyglow::Error>) -> Self {
        CliError::Core(e.into())
    }
}
