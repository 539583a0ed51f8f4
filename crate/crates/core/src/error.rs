use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid canvas: {0}")]
    InvalidCanvas(String),
    #[error("invalid gaussian spec: {0}")]
    InvalidGaussian(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid holdout: {0}")]
    InvalidHoldout(String),
    #[error("invalid subsample fraction {0}; must be in (0, 1]")]
    InvalidFraction(f64),
    #[error("overlap undefined: image `a` is identically blank")]
    ZeroImage,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("diffusion step {t} outside [1, {t_max}]")]
    StepOutOfRange { t: usize, t_max: usize },
    #[error("invalid noise schedule: {0}")]
    InvalidSchedule(String),
    #[error("non-finite loss at step {step}; diagnostic checkpoint at {checkpoint}")]
    NonFiniteLoss { step: usize, checkpoint: PathBuf },
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("persistence requires at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("ring subspace needs at least 3 points per subset; subset {axis}={value} has {count}")]
    RingTooSmall { axis: char, value: f64, count: usize },
    #[error("histogram error: {0}")]
    Histogram(String),
    #[error("region partition: {0}")]
    Region(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("csv schema violation in {path}: {reason}")]
    CsvSchema { path: PathBuf, reason: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
