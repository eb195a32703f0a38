use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown wavelet basis `{0}` (expected bior1.1, bior2.2, bior1.3 or bior2.6)")]
    UnknownBasis(String),

    #[error("filter self-check failed for {basis}: {what}")]
    FilterCheck { basis: &'static str, what: String },

    #[error("invalid plane: {0}")]
    InvalidPlane(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "kernel of side {kernel} does not fit a {width}x{height} plane \
         (needs more than one boundary extension)"
    )]
    KernelTooLarge { kernel: usize, width: usize, height: usize },

    #[error("empty feature selection")]
    EmptySelection,

    #[error("{what} not present in the scattering output")]
    MissingOutput { what: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("FLOP count overflows 63 bits")]
    Overflow,

    #[error("layer {layer} ({kind}): {reason}")]
    Layer { layer: usize, kind: &'static str, reason: String },

    #[error("invalid layer parameter: {0}")]
    InvalidLayer(String),

    #[error("network spec line {line}: {reason}")]
    SpecSyntax { line: usize, reason: String },

    #[error("non-positive {what}: {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("malformed data at byte {offset}: {reason}")]
    Malformed { offset: u64, reason: String },

    #[error("unsupported image format (magic bytes \"{}\")", .0.escape_ascii())]
    UnsupportedFormat(Vec<u8>),

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn malformed(offset: u64, reason: impl Into<String>) -> Self {
        Error::Malformed { offset, reason: reason.into() }
    }

    /// Attaches the file the error concerns.
    pub fn at(self, path: impl Into<PathBuf>) -> Self {
        Error::Path { path: path.into(), source: Box::new(self) }
    }

    /// True for failures of the numerics (as opposed to bad inputs).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFiniteLoss { .. } | Error::Overflow | Error::FilterCheck { .. } => true,
            Error::Path { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
