use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid squint design: sine value {value} at {context} is outside [-1, 1]")]
    InvalidDesign { value: f64, context: String },

    #[error("no frequency diversity: all {count} peak frequencies are identical")]
    NoFrequencyDiversity { count: usize },

    #[error(
        "range ambiguity unresolved: best residual {residual:.4} m exceeds tolerance {tolerance} m"
    )]
    UnresolvedAmbiguity { residual: f64, tolerance: f64 },

    #[error("inconsistent ambiguity groups: candidates {first:.4} m and {second:.4} m both fit within tolerance")]
    InconsistentGroups { first: f64, second: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
