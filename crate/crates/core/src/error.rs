use std::fmt;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scenario or configuration field has an invalid value. The string
    /// names the offending field.
    Invalid(String),
    /// A numeric argument is outside the function's domain.
    Domain(String),
    /// Required input data is missing or inconsistent.
    Precondition(String),
    /// An exhaustive search was refused because its grid would be too large.
    TooLarge(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(what) => write!(f, "invalid value for {what}"),
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::Precondition(what) => write!(f, "precondition violated: {what}"),
            Error::TooLarge(what) => write!(f, "refusing oversized search: {what}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
