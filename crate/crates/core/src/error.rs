use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal is empty")]
    EmptySignal,

    #[error("signal too short: {samples} samples, need at least {needed}")]
    TooShort { samples: usize, needed: usize },

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error("too few frames: {frames} frame(s), functional `{functional}` needs at least {needed}")]
    TooFewFrames {
        functional: String,
        frames: usize,
        needed: usize,
    },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("uniform variate {0} is outside the open interval (0, 1)")]
    BadVariate(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("optimizer aborted: {0}")]
    AbortWithDiagnostics(String),

    #[error("bad train/validation split: {0}")]
    BadSplit(String),

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("bad input: {0}")]
    BadInput(String),

    #[error("bad manifest: {0}")]
    BadManifest(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    /// Wraps this error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
