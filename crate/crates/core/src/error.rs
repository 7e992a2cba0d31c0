use thiserror::Error;

/// Errors raised by the kernel, channel, binomial, succession and EM operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frequentist learning of an empty multiset")]
    EmptyMultiset,

    #[error("enumeration of {count} multisets exceeds the cap of {cap}")]
    ResourceLimit { count: u128, cap: u64 },

    #[error("point outside the expected space: {0}")]
    WrongSpace(String),

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("distribution support point {0} has no kernel entry")]
    DomainMismatch(String),

    #[error("pushforward has no mass at {0}; inversion requires full support")]
    NotFullSupport(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("moments are not those of a bivariate binomial: {0}")]
    InfeasibleMoments(String),

    #[error("observation has zero probability: {0}")]
    DegenerateObservation(String),

    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceLimit { .. } => 3,
            Error::SupportMismatch(_) | Error::DomainMismatch(_) | Error::NotFullSupport(_) => 4,
            Error::InfeasibleMoments(_) => 5,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
