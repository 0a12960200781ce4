//! Newline-delimited JSON messages exchanged between the broker and its peers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::changeset::Changeset;
use crate::pool::AttributePool;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Editor,
    Service,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    MergeConflict,
    Validation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCode {
    UnknownDoc,
    DuplicateDocId,
    StaleBeyondHistory,
    NoSubscriber,
    UnknownCorrelation,
    UnknownMatchIndex,
    NotJoined,
    BadMessage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventMode {
    Sync,
    Async,
}

/// A URI-addressed interaction request. Sync events carry a correlation id
/// and expect an [`Message::EventResponse`]; async events carry none.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventMessage {
    pub uri: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub mode: EventMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_ms: Option<u64>,
}

impl EventMessage {
    pub fn sync(uri: impl Into<String>, correlation_id: impl Into<String>) -> Self {
        EventMessage {
            uri: uri.into(),
            params: BTreeMap::new(),
            mode: EventMode::Sync,
            correlation_id: Some(correlation_id.into()),
            timeout_ms: None,
        }
    }

    pub fn asynchronous(uri: impl Into<String>) -> Self {
        EventMessage {
            uri: uri.into(),
            params: BTreeMap::new(),
            mode: EventMode::Async,
            correlation_id: None,
            timeout_ms: None,
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    fn check(&self) -> Result<(), String> {
        match (self.mode, &self.correlation_id, self.timeout_ms) {
            (EventMode::Sync, None, _) => Err("sync event without correlationId".into()),
            (EventMode::Sync, _, Some(0)) => Err("timeoutMs must be positive".into()),
            (EventMode::Async, Some(_), _) => Err("async event with correlationId".into()),
            (EventMode::Async, _, Some(_)) => Err("async event with timeoutMs".into()),
            _ => Ok(()),
        }
    }
}

/// An edit offered by a service, expressed against the document at `base_rev`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventAction {
    pub base_rev: u64,
    pub changeset: Changeset,
}

/// One entry of an event response, e.g. an autocomplete suggestion or a
/// context-menu item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventItem {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<EventAction>,
}

impl EventItem {
    pub fn label(label: impl Into<String>) -> Self {
        EventItem {
            label: label.into(),
            action: None,
        }
    }
}

/// A committed changeset in a document's history.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Revision {
    pub rev: u64,
    pub changeset: Changeset,
    pub author_id: String,
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum Message {
    Hello {
        doc_id: String,
        client_id: String,
        role: Role,
        #[serde(default)]
        subscriptions: Vec<String>,
        /// Open the document empty if the broker does not know it.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        create: bool,
    },
    Init {
        doc_id: String,
        rev: u64,
        snapshot: Changeset,
        pool: AttributePool,
    },
    Submit {
        doc_id: String,
        base_rev: u64,
        changeset: Changeset,
    },
    Ack {
        doc_id: String,
        new_rev: u64,
    },
    Reject {
        doc_id: String,
        reason: RejectReason,
        head_rev: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
    Update {
        doc_id: String,
        rev: u64,
        changeset: Changeset,
        author_id: String,
    },
    Event {
        doc_id: String,
        event: EventMessage,
    },
    EventResponse {
        doc_id: String,
        correlation_id: String,
        items: Vec<EventItem>,
    },
    Error {
        doc_id: String,
        code: ErrorCode,
        detail: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correlation_id: Option<String>,
    },
}

impl Message {
    pub fn doc_id(&self) -> &str {
        match self {
            Message::Hello { doc_id, .. }
            | Message::Init { doc_id, .. }
            | Message::Submit { doc_id, .. }
            | Message::Ack { doc_id, .. }
            | Message::Reject { doc_id, .. }
            | Message::Update { doc_id, .. }
            | Message::Event { doc_id, .. }
            | Message::EventResponse { doc_id, .. }
            | Message::Error { doc_id, .. } => doc_id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "Hello",
            Message::Init { .. } => "Init",
            Message::Submit { .. } => "Submit",
            Message::Ack { .. } => "Ack",
            Message::Reject { .. } => "Reject",
            Message::Update { .. } => "Update",
            Message::Event { .. } => "Event",
            Message::EventResponse { .. } => "EventResponse",
            Message::Error { .. } => "Error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot decode message at byte {offset}: {message}")]
pub struct DecodeError {
    pub offset: usize,
    pub message: String,
}

/// One JSON record, without the trailing newline.
pub fn encode(msg: &Message) -> String {
    serde_json::to_string(msg).expect("messages always serialize")
}

/// Encodes a history record in the same form as on the wire.
pub fn encode_revision(rev: &Revision) -> String {
    serde_json::to_string(rev).expect("revisions always serialize")
}

pub fn decode(bytes: &[u8]) -> Result<Message, DecodeError> {
    let msg: Message = parse(bytes)?;
    if let Message::Event { event, .. } = &msg {
        event.check().map_err(|message| DecodeError { offset: 0, message })?;
    }
    Ok(msg)
}

pub fn decode_revision(bytes: &[u8]) -> Result<Revision, DecodeError> {
    parse(bytes)
}

fn parse<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T, DecodeError> {
    let bytes = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    serde_json::from_slice(bytes).map_err(|e| DecodeError {
        offset: if e.is_eof() {
            bytes.len()
        } else {
            byte_offset(bytes, e.line(), e.column())
        },
        message: e.to_string(),
    })
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let line_start: usize = bytes
        .split(|&b| b == b'\n')
        .take(line.saturating_sub(1))
        .map(|l| l.len() + 1)
        .sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}
