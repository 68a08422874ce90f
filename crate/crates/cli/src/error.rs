use std::path::Path;

/// Everything that ends a command without a report. Verdicts are never failures.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Core(#[from] elusion::Error),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl Failure {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Failure::Io { path: path.display().to_string(), message: err.to_string() }
    }

    /// 2 invalid input, 3 resource limit, 4 internal inconsistency.
    pub fn exit_code(&self) -> u8 {
        use elusion::Error as E;
        match self {
            Failure::Core(E::ResourceLimit(_) | E::TooLarge { .. }) => 3,
            Failure::Core(E::InternalInconsistency(_)) | Failure::Internal(_) | Failure::Csv(_) => 4,
            Failure::Core(_) | Failure::Io { .. } | Failure::Usage(_) => 2,
        }
    }
}
