use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,
    #[error("series too short for GM(1,1): need at least {min} values, got {len}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("series value at position {index} is not strictly positive ({value})")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("development coefficient is near zero (a = {a:e}); the fit is singular")]
    NearSingular { a: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index ({i}, {j}) out of range for a {m}x{n} grid")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        m: usize,
        n: usize,
    },
    #[error("grey transform is not positive (g = {g:e})")]
    NonPositiveTransform { g: f64 },
    #[error("popularity profile is uniform; degree of Matthew effect is undefined")]
    DegenerateProfile,
    #[error("predictions are constant; min-max rescaling is undefined")]
    ConstantPredictions,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("malformed parameter file: {0}")]
    ParamsFormat(String),
    #[error("trial failed (algorithm {algorithm}, trial {trial}, seed {seed}): {source}")]
    Trial {
        algorithm: String,
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors that stem from bad configuration rather than from running work.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidArgument(_))
    }
}
