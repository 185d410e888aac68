use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Problems with the contents of an input or artifact file.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("not an index file")]
    NotAnIndexFile,
    #[error("not an encoder file")]
    NotAnEncoderFile,
    #[error("unsupported version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("truncated file: header promises {expected} bytes, {found} present")]
    Truncated { expected: u64, found: u64 },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error("line {line}: {detail}")]
    Line { line: usize, detail: String },
    #[error(transparent)]
    Core(#[from] lsr_core::Error),
}

impl FormatError {
    pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        Self::Malformed { what, detail: detail.into() }
    }

    pub(crate) fn line(line: usize, detail: impl ToString) -> Self {
        Self::Line { line, detail: detail.to_string() }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] lsr_core::Error),
}

impl CliError {
    /// 1 for usage and configuration problems (including a named input
    /// that does not exist), 2 for data and format problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => 1,
            Self::Core(lsr_core::Error::InvalidConfig(_) | lsr_core::Error::MissingIdf) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, source: FormatError) -> Self {
        Self::Format { path: path.to_path_buf(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
