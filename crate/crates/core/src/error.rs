use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the codec can report.
///
/// Variants are grouped into coarse classes by [`Error::class`] so front
/// ends can map them onto stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// An input image file does not parse under its declared format.
    #[error("malformed image file: {0}")]
    ImageFormat(String),

    /// An in-memory image or plane violates its invariants.
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The stream ended before a complete structure could be read.
    #[error("truncated {0}")]
    Truncated(&'static str),

    /// Structurally invalid codestream data.
    #[error("corrupt {what}: {detail}")]
    Corrupt { what: &'static str, detail: String },

    #[error("checksum mismatch in {0}")]
    Checksum(&'static str),

    #[error("unsupported {what} id {id}")]
    Unsupported { what: &'static str, id: u8 },

    /// Decoded output differs from the reference it was checked against.
    #[error("lossless verification failed: {0}")]
    Mismatch(String),
}

/// Coarse error classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Io,
    Input,
    Codestream,
    Verification,
}

impl Error {
    pub(crate) fn corrupt(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Corrupt {
            what,
            detail: detail.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_) => ErrorClass::Io,
            Error::ImageFormat(_) | Error::InvalidImage(_) | Error::InvalidArgument(_) => {
                ErrorClass::Input
            }
            Error::Truncated(_)
            | Error::Corrupt { .. }
            | Error::Checksum(_)
            | Error::Unsupported { .. } => ErrorClass::Codestream,
            Error::Mismatch(_) => ErrorClass::Verification,
        }
    }
}
