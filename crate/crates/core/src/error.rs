use thiserror::Error;

/// Errors raised by model operations. Configuration loading has its own
/// [`crate::config::ConfigError`] because it reports every problem at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("no table entry for {scenario} {state} at {frequency_hz} Hz")]
    FrequencyOutOfRange {
        scenario: String,
        state: String,
        frequency_hz: f64,
    },

    #[error("table error: {0}")]
    Table(String),

    #[error("coincident positions: {0}")]
    CoincidentPositions(String),

    #[error("concatenation requires absolute delays on both sub-links")]
    RelativeDelays,

    #[error("node anchor mismatch: {0}")]
    NodeAnchorMismatch(String),

    #[error("clipped sampling clamped {clamped} of {draws} draws (limit {max_fraction})")]
    ExcessiveClamping {
        clamped: u64,
        draws: u64,
        max_fraction: f64,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
