use redsys_core::wire::ErrorCode;
use redsys_core::ChangesetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdkError {
    #[error("connection: {0}")]
    Connection(#[from] std::io::Error),
    #[error("connection closed")]
    Closed,
    #[error("timed out waiting for {0}")]
    Timeout(&'static str),
    #[error("invalid changeset from broker: {0}")]
    Changeset(#[from] ChangesetError),
    #[error("no open sync event {0:?}")]
    UnknownCorrelation(String),
    #[error("revision {base_rev} is not available locally (have {oldest}..={head})")]
    UnknownRevision { base_rev: u64, oldest: u64, head: u64 },
    #[error("not initialized yet")]
    NotInitialized,
    #[error("broker error {code:?}: {detail}")]
    Broker { code: ErrorCode, detail: String },
    #[error("action is based on revision {action_rev} but the client is at {server_rev}")]
    StaleAction { action_rev: u64, server_rev: u64 },
}
