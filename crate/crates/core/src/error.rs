use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },

    #[error("residue {value} out of range for modulus {modulus}")]
    ResidueOutOfRange { value: u64, modulus: u64 },

    #[error("modulus {0} is not prime")]
    NotPrime(u64),

    #[error("{u} is not a unit modulo {modulus}")]
    NotUnit { u: u64, modulus: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input set: {0}")]
    EmptySet(&'static str),

    #[error("scale cap exceeded for {what}: {size} > {cap}")]
    ScaleCap { what: String, size: u128, cap: u128 },

    #[error("insufficient headroom: modulus {modulus} must exceed {needed}")]
    Headroom { needed: u128, modulus: u64 },

    #[error("inequality chain violated: {0}")]
    ChainViolated(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn cap(what: impl Into<String>, size: impl Into<u128>, cap: impl Into<u128>) -> Self {
        Error::ScaleCap {
            what: what.into(),
            size: size.into(),
            cap: cap.into(),
        }
    }
}
