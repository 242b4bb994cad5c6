use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("profile of an empty sample")]
    EmptyProfile,
    #[error("{what} exceeds the supported scale (cap {cap})")]
    Resource { what: String, cap: u64 },
    #[error("value {0} is outside the covered range")]
    Range(f64),
    #[error("degenerate interval scheme: c1 log n = {0} exceeds n")]
    DegenerateScheme(f64),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("witness is not 1-Lipschitz: slope {0}")]
    InvalidWitness(f64),
    #[error("degree 0 cannot approximate a non-constant function")]
    Degree,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
