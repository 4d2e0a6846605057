use alloc::string::String;
use core::fmt;

/// Errors raised by the core crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument is outside its allowed range.
    Argument(String),
    /// A token or clause id does not fit the tensor it indexes.
    Index { what: &'static str, index: usize, len: usize },
    /// A document violates a structural invariant.
    Validation { doc_id: String, reason: String },
    /// A function was called outside its precondition.
    Contract(&'static str),
    /// Training produced a non-finite loss or gradient.
    NonFinite(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Index { what, index, len } => {
                write!(f, "{what} index {index} out of range (len {len})")
            }
            Error::Validation { doc_id, reason } => {
                write!(f, "document {doc_id:?} is invalid: {reason}")
            }
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
