use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus under {0}")]
    EmptyCorpus(PathBuf),

    #[error("parse failure: {0}")]
    ParseFailure(String),

    #[error("index below binning start: i={index} < s1={start}")]
    IndexBelowBinningStart { index: usize, start: usize },

    #[error("index map family mismatch: map has {map_family}/{map_grammar}, got {family}/{grammar}")]
    IndexMapMismatch {
        map_family: String,
        map_grammar: String,
        family: String,
        grammar: String,
    },

    #[error("feature shape mismatch: model expects {expected} columns, row has {actual}")]
    FeatureShapeMismatch { expected: usize, actual: usize },

    #[error("degenerate labels: training set contains a single class")]
    DegenerateLabels,

    #[error("class absent from the {side} split; adjust the test fraction or seed")]
    ClassAbsentFromSplit { side: &'static str },

    #[error("empty rewrite: model returned no content for {0}")]
    EmptyRewrite(PathBuf),

    #[error("rewrite endpoint failed after {attempts} attempts: {last_error}")]
    RewriteTransport { attempts: u32, last_error: String },

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
