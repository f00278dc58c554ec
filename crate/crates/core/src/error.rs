use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("treatment has no variation")]
    NoTreatmentVariation,

    #[error("no data near treatment level {t} with bandwidth {h}")]
    EmptyWindow { t: f64, h: f64 },

    #[error("alpha must exceed 0")]
    AlphaNotPositive,

    #[error("quantile level {0} outside (0, 1)")]
    LevelOutOfRange(f64),

    #[error("degenerate quantile spacing")]
    DegenerateSpacing,

    #[error("tail quantiles must be positive")]
    NonPositiveQuantile,

    #[error("tail mean undefined for γ ≥ 1 (γ = {0})")]
    TailMeanUndefined(f64),

    #[error("threshold beyond data tail")]
    BeyondDataTail,

    #[error("J must be ≥ 2 for variance")]
    TooFewHillLevels,

    #[error("Pickands variance undefined at γ=0")]
    PickandsVarianceAtZero,

    #[error("conditional density vanishes at observation {0}")]
    DensityUnderflow(usize),

    #[error("nonpositive weight {value} at observation {index}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("all candidates infeasible: {0}")]
    NoFeasibleCandidate(String),

    #[error("treatment {t} outside conditional support for covariate {x}")]
    OutsideSupport { t: f64, x: f64 },

    #[error("non-monotone survival: {0}")]
    NonMonotoneSurvival(String),

    #[error("nonpositive effect denominator")]
    NonPositiveDenominator,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
