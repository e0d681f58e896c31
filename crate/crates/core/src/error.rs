use std::fmt;
use std::path::PathBuf;

use crate::activations::ActivationKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Position inside a training run, attached to divergence errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLocation {
    pub epoch: usize,
    pub batch: usize,
}

impl fmt::Display for RunLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch {}, batch {}", self.epoch, self.batch)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("activation `{0}` is not supported by this operation")]
    UnsupportedKind(ActivationKind),

    #[error("`{0}` has no interior minimum on [-20, 0]")]
    NoInteriorMinimum(ActivationKind),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("non-finite value in {what}{}", .at.map(|l| format!(" at {l}")).unwrap_or_default())]
    NonFiniteValue {
        what: String,
        at: Option<RunLocation>,
    },

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("{}: expected {expected} bytes, found {found}", .path.display())]
    TruncatedFile {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}: bad magic number {found:#010x}, expected {expected:#010x}", .path.display())]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{what}: expected {expected}, found {found}")]
    CountMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("dataset is already normalized")]
    AlreadyNormalized,

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn non_finite(what: impl Into<String>) -> Self {
        Error::NonFiniteValue {
            what: what.into(),
            at: None,
        }
    }

    /// Attaches a training location to a `NonFiniteValue`; other variants pass through.
    pub fn located(self, loc: RunLocation) -> Self {
        match self {
            Error::NonFiniteValue { what, .. } => Error::NonFiniteValue { what, at: Some(loc) },
            other => other,
        }
    }
}
