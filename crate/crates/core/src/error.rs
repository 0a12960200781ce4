use thiserror::Error;

use crate::pool::AttrId;

/// Everything that can be wrong with a changeset or its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChangesetError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("ops {index} and {} are mergeable (non-canonical)", index + 1)]
    NonCanonical { index: usize },
    #[error("attribute id {id} does not resolve")]
    BadAttributeId { id: AttrId },
    #[error("op {index} carries key {key:?} more than once")]
    DuplicateKeyInOpAttrs { index: usize, key: String },
    #[error("op {index} has zero length")]
    EmptyOp { index: usize },
    #[error("newPool entry [{key:?}, {value:?}] already exists")]
    DuplicatePoolEntry { key: String, value: String },
    #[error("document attributes invalid at character {index}: {detail}")]
    BadDocument { index: usize, detail: String },
    #[error("rule {index} ({begin}..={end}) lies outside a document of length {len}")]
    RuleOutOfBounds {
        index: usize,
        begin: usize,
        end: usize,
        len: usize,
    },
}

impl ChangesetError {
    pub(crate) fn length(msg: impl Into<String>) -> Self {
        ChangesetError::LengthMismatch(msg.into())
    }
}
