//! Blocking editor client, used by the command-line tool and tests.

use std::net::SocketAddr;
use std::ops::Range;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use redsys_core::wire::{EventAction, EventItem, EventMessage, Message};
use redsys_core::{Changeset, ChangesetBuilder, Document};

use crate::connection::{channel, Connection, Inbound, Transcript};
use crate::editor::{EditorNotice, EditorState};
use crate::error::SdkError;

pub struct EditorClient {
    state: EditorState,
    conn: Arc<Connection>,
    rx: Receiver<Inbound>,
    next_corr: u64,
    notices: Vec<EditorNotice>,
}

impl EditorClient {
    pub fn connect(addr: SocketAddr, doc_id: &str, client_id: &str) -> Result<Self, SdkError> {
        Self::connect_with(addr, EditorState::new(doc_id, client_id), None)
    }

    /// Connects with a prepared state and waits for `Init`.
    pub fn connect_with(
        addr: SocketAddr,
        state: EditorState,
        transcript: Option<Transcript>,
    ) -> Result<Self, SdkError> {
        let (tx, rx) = channel();
        let conn = Connection::open(addr, transcript, tx, |i| i)?;
        conn.send(&state.hello())?;
        let mut client = EditorClient {
            state,
            conn,
            rx,
            next_corr: 0,
            notices: Vec::new(),
        };
        let deadline = Instant::now() + Duration::from_secs(10);
        while !client.state.is_ready() {
            let left = deadline.saturating_duration_since(Instant::now());
            match client.rx.recv_timeout(left) {
                Ok(item) => {
                    client.process(item)?;
                }
                Err(RecvTimeoutError::Timeout) => return Err(SdkError::Timeout("init")),
                Err(RecvTimeoutError::Disconnected) => return Err(SdkError::Closed),
            }
            if let Some(EditorNotice::Error { code, detail }) = client.notices.pop() {
                return Err(SdkError::Broker { code, detail });
            }
        }
        Ok(client)
    }

    pub fn doc(&self) -> &Document {
        self.state.displayed()
    }

    pub fn state(&self) -> &EditorState {
        &self.state
    }

    /// Notices collected since the last call.
    pub fn take_notices(&mut self) -> Vec<EditorNotice> {
        std::mem::take(&mut self.notices)
    }

    pub fn edit(&mut self, cs: &Changeset) -> Result<(), SdkError> {
        let out = self.state.edit(cs)?;
        self.conn.send_all(&out)
    }

    pub fn insert(&mut self, pos: usize, text: &str) -> Result<(), SdkError> {
        let doc = self.doc();
        let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
        b.keep(pos, &[]).insert(text, &[]);
        let cs = b.finish()?;
        self.edit(&cs)
    }

    pub fn delete(&mut self, pos: usize, len: usize) -> Result<(), SdkError> {
        let doc = self.doc();
        let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
        b.keep(pos, &[]).remove(len);
        let cs = b.finish()?;
        self.edit(&cs)
    }

    /// Sets `key = value` on `range`; an empty value removes the key.
    pub fn set_attr(&mut self, range: Range<usize>, key: &str, value: &str) -> Result<(), SdkError> {
        let doc = self.doc();
        let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
        b.keep(range.start, &[]).keep(range.len(), &[(key, value)]);
        let cs = b.finish()?;
        self.edit(&cs)
    }

    pub fn choose(&mut self, action: &EventAction) -> Result<(), SdkError> {
        let out = self.state.choose(action)?;
        self.conn.send_all(&out)
    }

    fn process(&mut self, item: Inbound) -> Result<Option<Message>, SdkError> {
        match item {
            Inbound::Closed => Err(SdkError::Closed),
            Inbound::Garbage(e) => {
                log::warn!("dropping undecodable line: {e}");
                Ok(None)
            }
            Inbound::Message(m @ Message::EventResponse { .. })
            | Inbound::Message(m @ Message::Error { correlation_id: Some(_), .. }) => Ok(Some(m)),
            Inbound::Message(m) => {
                let (out, notice) = self.state.handle(m)?;
                self.conn.send_all(&out)?;
                self.notices.extend(notice);
                Ok(None)
            }
        }
    }

    /// Processes whatever arrives within `dur`.
    pub fn pump(&mut self, dur: Duration) -> Result<(), SdkError> {
        let deadline = Instant::now() + dur;
        loop {
            match self.rx.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
                Ok(item) => {
                    self.process(item)?;
                }
                Err(RecvTimeoutError::Timeout) => return Ok(()),
                Err(RecvTimeoutError::Disconnected) => return Err(SdkError::Closed),
            }
        }
    }

    /// Processes messages until `pred` holds.
    pub fn wait_until(
        &mut self,
        timeout: Duration,
        mut pred: impl FnMut(&EditorState) -> bool,
    ) -> Result<(), SdkError> {
        let deadline = Instant::now() + timeout;
        while !pred(&self.state) {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.rx.recv_timeout(left) {
                Ok(item) => {
                    self.process(item)?;
                }
                Err(RecvTimeoutError::Timeout) => return Err(SdkError::Timeout("condition")),
                Err(RecvTimeoutError::Disconnected) => return Err(SdkError::Closed),
            }
        }
        Ok(())
    }

    /// Waits until every local edit is acknowledged.
    pub fn wait_idle(&mut self, timeout: Duration) -> Result<(), SdkError> {
        self.wait_until(timeout, |s| s.is_idle())
    }

    /// Sends a sync event and waits for its response.
    pub fn event(&mut self, mut event: EventMessage, timeout: Duration) -> Result<Vec<EventItem>, SdkError> {
        self.next_corr += 1;
        let corr = format!("{}-{}", self.client_id(), self.next_corr);
        event.correlation_id = Some(corr.clone());
        self.conn.send(&Message::Event {
            doc_id: self.doc_id(),
            event,
        })?;
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let item = match self.rx.recv_timeout(left) {
                Ok(item) => item,
                Err(RecvTimeoutError::Timeout) => return Err(SdkError::Timeout("event response")),
                Err(RecvTimeoutError::Disconnected) => return Err(SdkError::Closed),
            };
            match self.process(item)? {
                Some(Message::EventResponse { correlation_id, items, .. }) if correlation_id == corr => {
                    return Ok(items)
                }
                Some(Message::Error {
                    correlation_id: Some(c),
                    code,
                    detail,
                    ..
                }) if c == corr => return Err(SdkError::Broker { code, detail }),
                Some(other) => log::debug!("ignoring unrelated {}", other.kind()),
                None => {}
            }
        }
    }

    /// Sends an async event.
    pub fn notify(&mut self, event: EventMessage) -> Result<(), SdkError> {
        self.conn.send(&Message::Event {
            doc_id: self.doc_id(),
            event,
        })
    }

    fn doc_id(&self) -> String {
        match self.state.hello() {
            Message::Hello { doc_id, .. } => doc_id,
            _ => unreachable!(),
        }
    }

    fn client_id(&self) -> String {
        match self.state.hello() {
            Message::Hello { client_id, .. } => client_id,
            _ => unreachable!(),
        }
    }
}

impl Drop for EditorClient {
    fn drop(&mut self) {
        self.conn.close();
    }
}
