use redsys_core::wire::DecodeError;
use redsys_core::ChangesetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrokerError {
    #[error("unknown document {0:?}")]
    UnknownDoc(String),
    #[error("document {0:?} already exists")]
    DuplicateDocId(String),
    #[error("invalid document id {0:?}")]
    BadDocId(String),
    #[error("base revision {base_rev} is older than the retained history (oldest {oldest})")]
    StaleBeyondHistory { base_rev: u64, oldest: u64 },
    #[error("base revision {base_rev} is ahead of head revision {head_rev}")]
    FutureRevision { base_rev: u64, head_rev: u64 },
    #[error("invalid changeset: {0}")]
    Validation(#[from] ChangesetError),
    #[error("no service subscribes to {0:?}")]
    NoSubscriber(String),
    #[error("peer has not joined document {0:?}")]
    NotJoined(String),
    #[error("peer already joined document {0:?}")]
    AlreadyJoined(String),
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt log at line {line}: {source}")]
    CorruptLog { line: usize, source: DecodeError },
    #[error("log line {line} holds revision {found}, expected {expected}")]
    Gap { line: usize, expected: u64, found: u64 },
    #[error("log line {line} does not apply: {source}")]
    Apply { line: usize, source: ChangesetError },
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("restoring {doc_id:?}: {source}")]
    Restore { doc_id: String, source: BrokerError },
}
