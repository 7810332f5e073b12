use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An index left its allowed range; `bound` names the range.
    #[error("{what} = {value} is out of range ({bound})")]
    Domain {
        what: &'static str,
        value: i64,
        bound: String,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("basis mismatch: expected {expected}, found {found}")]
    BasisMismatch { expected: String, found: String },
    #[error("operator is not Hermitian (max |M - M^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("norm drift {drift:e} exceeds tolerance {tol:e}; use a smaller step dt")]
    NormDrift { drift: f64, tol: f64 },
    #[error("population {population:e} in the top two Fock levels exceeds {tol:e}; increase n_max")]
    FockTruncation { population: f64, tol: f64 },
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("step {step}: {reason}")]
    Unreachable { step: usize, reason: String },
    #[error("contract violation: {0}")]
    Contract(String),
    /// A sweep point failed; `ratio` is the offending `Ω₀/|Ω_eff|`.
    #[error("at ratio {ratio}: {source}")]
    AtRatio { ratio: f64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: &'static str, value: usize, bound: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value: value as i64,
            bound: bound.into(),
        }
    }
}
