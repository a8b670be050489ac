use std::path::PathBuf;

use thiserror::Error;

/// Failures while reading or writing artifact files.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("bad magic number {0:#010x}, not an EVS1 file")]
    BadMagic(u32),
    #[error("unsupported EVS1 version {0}")]
    BadVersion(u32),
    #[error("file truncated: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("corrupt event record {0}")]
    CorruptRecord(usize),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("decode error: {0}")]
    DecodeError(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl IoError {
    pub(crate) fn at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
        move |source| IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or inconsistent arguments; exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Core(#[from] evdesnow_core::Error),
    #[error("{0}")]
    Processing(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Parameter validation failures are argument errors.
pub(crate) fn usage(e: evdesnow_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}
