//! The document broker: holds each shared document, serializes revisions,
//! merges stale submissions and routes interaction events between editors
//! and services.
//!
//! [`Broker`] is the protocol state machine and does no I/O. [`Server`]
//! runs it behind TCP and WebSocket listeners speaking newline-delimited
//! JSON.

mod error;
pub mod log;
mod server;
mod state;

pub use error::{BrokerError, LogError, ServerError};
pub use server::{now_ms, Server, ServerConfig};
pub use state::{Broker, BrokerConfig, Effects, PeerId, SubmitOutcome, DEFAULT_SYNC_TIMEOUT_MS};
