//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("qualitative failure: {0}")]
    QualitativeFailure(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("spectral failure: {0}")]
    SpectralFailure(String),
    #[error("shift too close to the point spectrum: {0}")]
    NearSingular(String),
    #[error("linear solve failure: {0}")]
    LinearSolveFailure(String),
    #[error("integrator failure: {0}")]
    IntegratorFailure(String),
    #[error("modulation failure: {0}")]
    ModulationFailure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("spectral data invalid: {0}")]
    SpectralDataInvalid(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint schema version {found} not supported (expected {supported})")]
    SchemaVersion { found: u32, supported: u32 },
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Config(_) | Error::SchemaVersion { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
