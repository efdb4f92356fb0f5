use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bit count {bits} exceeds the maximum of {max}")]
    BitsOutOfRange { bits: u32, max: u32 },

    #[error("shared value {value} does not fit in {bits} bits")]
    SharedValueOutOfRange { bits: u32, value: u64 },

    #[error("unit-interval draw {0} is outside [0, 1)")]
    DrawOutOfRange(f64),

    #[error("cannot take {requested} selector bits from a {available}-bit draw")]
    InsufficientBits { requested: u32, available: u32 },

    #[error("threshold numerator {numerator} exceeds 2^{bits}")]
    NumeratorOutOfRange { numerator: u64, bits: u32 },

    #[error("protocol `{protocol}` expects {expected} shared randomness")]
    SharedMismatch { protocol: String, expected: String },

    #[error("x = {x} is outside the domain of `{protocol}`")]
    OutsideDomain { protocol: String, x: f64 },

    #[error("message {message} is not valid for `{protocol}`")]
    InvalidMessage { protocol: String, message: u64 },

    #[error("invalid parameter for `{protocol}`: {reason}")]
    InvalidParameter { protocol: String, reason: String },

    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("malformed distribution: {0}")]
    MalformedDistribution(String),

    #[error("unknown named distribution `{0}`")]
    UnknownDistribution(String),

    #[error("protocol `{0}` is biased; mean estimation requires an unbiased protocol")]
    BiasedProtocol(String),

    #[error("exact enumeration over 2^{0} shared values is too large")]
    EnumerationTooLarge(u32),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
