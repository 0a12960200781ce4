use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DictLoadError {
    #[error("cannot read dictionary {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("dictionary line {line}: {reason}")]
    Format { line: usize, reason: String },
}
