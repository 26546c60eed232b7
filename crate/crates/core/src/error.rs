use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate x range: all {0} samples share x = {1}")]
    DegenerateRange(usize, f64),

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("batch size {batch_size} exceeds dataset size {n}")]
    BatchTooLarge { batch_size: usize, n: usize },

    #[error("trim count {trim_count} leaves no samples out of {len}")]
    TrimTooLarge { trim_count: usize, len: usize },

    #[error("index {index} out of range for dataset of {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("contamination would replace {m} of {n} samples")]
    ContaminationTooLarge { m: usize, n: usize },

    #[error("training diverged at iteration {iteration}: non-finite {what}")]
    Divergence { iteration: usize, what: &'static str },

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {msg}")]
    Parse { path: String, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
