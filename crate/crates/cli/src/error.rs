use std::path::PathBuf;

/// Failures surfaced to the command line, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Data {
        path: PathBuf,
        #[source]
        source: neuroground::Error,
    },
    #[error("{0}")]
    Evaluation(#[source] neuroground::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Trials failed while the run itself completed and was written out.
    #[error("{failed} of {total} trials failed ({transport} after exhausting transport retries)")]
    TrialsFailed {
        failed: usize,
        transport: usize,
        total: usize,
    },
}

impl CliError {
    pub fn data(path: impl Into<PathBuf>, source: neuroground::Error) -> Self {
        CliError::Data {
            path: path.into(),
            source,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 configuration, 2 data, 3 transport failure after retries.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::TrialsFailed { transport, .. } if *transport > 0 => 3,
            _ => 2,
        }
    }
}

impl From<neuroground::Error> for CliError {
    fn from(e: neuroground::Error) -> Self {
        match e {
            neuroground::Error::Backend(msg) | neuroground::Error::Domain(msg) => {
                CliError::Config(msg)
            }
            other => CliError::Evaluation(other),
        }
    }
}
