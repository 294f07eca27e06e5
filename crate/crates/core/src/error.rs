//! Error taxonomy shared by every module.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes the toolkit can report.
///
/// The CLI maps these onto exit codes: I/O failures exit 1, everything a
/// user can fix in a config or input file exits 2, and broken internal
/// invariants exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A tunable parameter is outside its mathematical domain (T <= 0,
    /// alpha outside (0,1), threshold outside [0,1], ...).
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    /// A value-level input violates its contract (non-finite logits,
    /// a vector too far from the simplex, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// The dataset cannot support the requested operation (empty or
    /// unlabeled calibration split, single-class AUROC input, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Mismatched dimensions, unknown names, or incompatible pairings
    /// discovered while wiring components together.
    #[error("configuration error: {0}")]
    Config(String),

    /// A persistent document failed to parse; `line` is 1-based and 0 when
    /// the failure is not tied to a specific line.
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A postcondition the library itself guarantees was observed to fail.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
