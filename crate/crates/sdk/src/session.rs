//! The service side of the protocol, without I/O.

use std::collections::{HashSet, VecDeque};
use std::ops::Range;

use redsys_core::wire::{ErrorCode, EventItem, EventMessage, EventMode, Message, RejectReason, Role};
use redsys_core::{compose, follow, Changeset, Document};

use crate::error::SdkError;
use crate::token::ProcessingToken;

/// Updates kept for transforming late submits and acks.
const HISTORY: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubmitResult {
    Ack {
        base_rev: u64,
        new_rev: u64,
    },
    Rejected {
        base_rev: u64,
        reason: RejectReason,
        head_rev: u64,
        detail: Option<String>,
    },
}

/// Something the service should react to.
#[derive(Clone, Debug)]
pub enum SessionEvent {
    Init,
    Update { changeset: Changeset, author_id: String },
    Event(EventMessage),
    Submitted(SubmitResult),
    Error { code: ErrorCode, detail: String },
}

struct Applied {
    rev: u64,
    changeset: Changeset,
    pool_before: usize,
}

pub struct ServiceSession {
    doc_id: String,
    client_id: String,
    subscriptions: Vec<String>,
    doc: Option<Document>,
    rev: u64,
    history: VecDeque<Applied>,
    in_flight: Option<(u64, Changeset)>,
    queue: VecDeque<(u64, Changeset)>,
    tokens: Vec<ProcessingToken>,
    open_events: HashSet<String>,
    resyncing: bool,
}

impl ServiceSession {
    pub fn new(doc_id: &str, client_id: &str, subscriptions: Vec<String>) -> Self {
        ServiceSession {
            doc_id: doc_id.to_owned(),
            client_id: client_id.to_owned(),
            subscriptions,
            doc: None,
            rev: 0,
            history: VecDeque::new(),
            in_flight: None,
            queue: VecDeque::new(),
            tokens: Vec::new(),
            open_events: HashSet::new(),
            resyncing: false,
        }
    }

    pub fn hello(&self) -> Message {
        Message::Hello {
            doc_id: self.doc_id.clone(),
            client_id: self.client_id.clone(),
            role: Role::Service,
            subscriptions: self.subscriptions.clone(),
            create: false,
        }
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn client_id(&self) -> &str {
        &self.client_id
    }

    pub fn doc(&self) -> Option<&Document> {
        self.doc.as_ref()
    }

    pub fn rev(&self) -> u64 {
        self.rev
    }

    pub fn has_in_flight(&self) -> bool {
        self.in_flight.is_some()
    }

    /// A token over `ranges` of the current document.
    pub fn token(&mut self, ranges: Vec<Range<usize>>) -> ProcessingToken {
        let t = ProcessingToken::new(self.rev, ranges);
        self.tokens.push(t.clone());
        t
    }

    /// Queues `cs`, made against revision `base_rev`; returns what to send now.
    pub fn submit(&mut self, base_rev: u64, cs: Changeset) -> Vec<Message> {
        self.queue.push_back((base_rev, cs));
        self.flush()
    }

    fn flush(&mut self) -> Vec<Message> {
        if self.in_flight.is_some() || self.resyncing {
            return Vec::new();
        }
        let Some((base_rev, changeset)) = self.queue.pop_front() else {
            return Vec::new();
        };
        self.in_flight = Some((base_rev, changeset.clone()));
        vec![Message::Submit {
            doc_id: self.doc_id.clone(),
            base_rev,
            changeset,
        }]
    }

    /// Answers a sync event once; later or repeated answers are refused.
    pub fn respond(&mut self, correlation_id: &str, items: Vec<EventItem>) -> Result<Message, SdkError> {
        if !self.open_events.remove(correlation_id) {
            return Err(SdkError::UnknownCorrelation(correlation_id.to_owned()));
        }
        Ok(Message::EventResponse {
            doc_id: self.doc_id.clone(),
            correlation_id: correlation_id.to_owned(),
            items,
        })
    }

    fn pool_len_after(&self, rev: u64) -> Option<usize> {
        let doc = self.doc.as_ref()?;
        if rev == self.rev {
            return Some(doc.pool().entries().len());
        }
        let oldest = self.history.front()?.rev;
        let idx = (rev + 1).checked_sub(oldest)? as usize;
        self.history.get(idx).map(|a| a.pool_before)
    }

    /// What the broker commits for `cs` made at `base_rev`, given the
    /// updates received since.
    fn rebase_own(&self, base_rev: u64, cs: &Changeset) -> Result<Changeset, SdkError> {
        if base_rev == self.rev {
            return Ok(cs.clone());
        }
        let unknown = || SdkError::UnknownRevision {
            base_rev,
            oldest: self.history.front().map_or(self.rev, |a| a.rev.saturating_sub(1)),
            head: self.rev,
        };
        let pool_len = self.pool_len_after(base_rev).ok_or_else(unknown)?;
        let doc = self.doc.as_ref().ok_or(SdkError::NotInitialized)?;
        let pool = doc.pool().prefix_view(pool_len);
        let oldest = self.history.front().ok_or_else(unknown)?.rev;
        let mut between: Option<Changeset> = None;
        for a in self.history.iter().skip((base_rev + 1 - oldest) as usize) {
            between = Some(match between {
                None => a.changeset.clone(),
                Some(acc) => compose(&acc, &a.changeset, &pool)?,
            });
        }
        let between = between.ok_or_else(unknown)?;
        Ok(follow(&between, cs, true, &pool)?)
    }

    fn advance(&mut self, rev: u64, cs: Changeset) -> Result<(), SdkError> {
        let doc = self.doc.as_mut().ok_or(SdkError::NotInitialized)?;
        let next = doc.apply(&cs)?;
        for t in &self.tokens {
            t.observe(&cs, doc.pool());
        }
        self.tokens.retain(|t| t.is_shared() && !t.is_cancelled());
        self.history.push_back(Applied {
            rev,
            changeset: cs,
            pool_before: doc.pool().entries().len(),
        });
        if self.history.len() > HISTORY {
            self.history.pop_front();
        }
        *doc = next;
        self.rev = rev;
        Ok(())
    }

    /// Processes one message from the broker.
    pub fn handle(&mut self, msg: Message) -> Result<(Vec<Message>, Vec<SessionEvent>), SdkError> {
        let mut out = Vec::new();
        let mut events = Vec::new();
        match msg {
            Message::Init {
                rev, snapshot, pool, ..
            } => {
                self.doc = Some(Document::from_snapshot(pool, &snapshot)?);
                self.rev = rev;
                self.history.clear();
                for t in self.tokens.drain(..) {
                    t.cancel();
                }
                self.resyncing = false;
                events.push(SessionEvent::Init);
                out.extend(self.flush());
            }
            Message::Update {
                rev,
                changeset,
                author_id,
                ..
            } => {
                if self.resyncing {
                    return Ok((out, events));
                }
                if rev != self.rev + 1 {
                    self.resyncing = true;
                    out.push(self.hello());
                    return Ok((out, events));
                }
                self.advance(rev, changeset.clone())?;
                events.push(SessionEvent::Update {
                    changeset,
                    author_id,
                });
            }
            Message::Ack { new_rev, .. } => {
                let Some((base_rev, cs)) = self.in_flight.take() else {
                    return Ok((out, events));
                };
                if !self.resyncing && new_rev == self.rev + 1 {
                    let committed = self.rebase_own(base_rev, &cs)?;
                    self.advance(new_rev, committed)?;
                } else if !self.resyncing && new_rev > self.rev {
                    self.resyncing = true;
                    out.push(self.hello());
                }
                events.push(SessionEvent::Submitted(SubmitResult::Ack { base_rev, new_rev }));
                out.extend(self.flush());
            }
            Message::Reject {
                reason,
                head_rev,
                detail,
                ..
            } => {
                if let Some((base_rev, _)) = self.in_flight.take() {
                    events.push(SessionEvent::Submitted(SubmitResult::Rejected {
                        base_rev,
                        reason,
                        head_rev,
                        detail,
                    }));
                }
                out.extend(self.flush());
            }
            Message::Event { event, .. } => {
                if event.mode == EventMode::Sync {
                    if let Some(c) = &event.correlation_id {
                        self.open_events.insert(c.clone());
                    }
                }
                events.push(SessionEvent::Event(event));
            }
            Message::Error { code, detail, .. } => {
                if code == ErrorCode::StaleBeyondHistory && self.in_flight.take().is_some() {
                    out.extend(self.flush());
                }
                events.push(SessionEvent::Error { code, detail });
            }
            Message::Hello { .. } | Message::Submit { .. } | Message::EventResponse { .. } => {}
        }
        Ok((out, events))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use redsys_core::ChangesetBuilder;

    fn init(text: &str) -> Message {
        let doc = Document::from_text(text);
        Message::Init {
            doc_id: "d".into(),
            rev: 5,
            snapshot: doc.snapshot(),
            pool: doc.pool().clone(),
        }
    }

    fn update(rev: u64, cs: Changeset) -> Message {
        Message::Update {
            doc_id: "d".into(),
            rev,
            changeset: cs,
            author_id: "ed".into(),
        }
    }

    #[test]
    fn init_then_identity_update() {
        let mut s = ServiceSession::new("d", "svc", vec![]);
        s.handle(init("Math is great")).unwrap();
        assert_eq!(s.doc().unwrap().text(), "Math is great");
        let t = s.token(vec![0..4]);
        s.handle(update(6, Changeset::identity(13))).unwrap();
        assert_eq!(s.rev(), 6);
        assert!(!t.is_cancelled());
    }

    #[test]
    fn gap_triggers_resync_hello() {
        let mut s = ServiceSession::new("d", "svc", vec![]);
        s.handle(init("ab")).unwrap();
        let (out, _) = s.handle(update(9, Changeset::identity(2))).unwrap();
        assert!(matches!(out[0], Message::Hello { .. }));
        let (out, _) = s.handle(update(10, Changeset::identity(2))).unwrap();
        assert!(out.is_empty());
        s.handle(init("abc")).unwrap();
        assert_eq!(s.doc().unwrap().text(), "abc");
    }

    #[test]
    fn one_submit_in_flight_and_stale_ack_mirrors_broker() {
        let mut s = ServiceSession::new("d", "svc", vec![]);
        s.handle(init("hello world")).unwrap();
        let doc = s.doc().unwrap().clone();
        let mut b = ChangesetBuilder::new(11, doc.pool());
        b.keep(6, &[]).keep(5, &[("spot", "1")]);
        let cs = b.finish().unwrap();
        let out = s.submit(5, cs.clone());
        assert_eq!(out.len(), 1);
        assert!(s.submit(5, Changeset::identity(11)).is_empty());

        let mut e = ChangesetBuilder::new(11, doc.pool());
        e.insert(">", &[]);
        s.handle(update(6, e.finish().unwrap())).unwrap();
        let (out, events) = s
            .handle(Message::Ack {
                doc_id: "d".into(),
                new_rev: 7,
            })
            .unwrap();
        assert!(matches!(
            events[0],
            SessionEvent::Submitted(SubmitResult::Ack { base_rev: 5, new_rev: 7 })
        ));
        assert_eq!(s.doc().unwrap().to_string(), ">hello [spot=1]world[/]");
        // queued identity goes out next
        assert!(matches!(out[0], Message::Submit { base_rev: 5, .. }));
    }

    #[test]
    fn respond_once_per_correlation() {
        let mut s = ServiceSession::new("d", "svc", vec!["autocomplete.".into()]);
        s.handle(Message::Event {
            doc_id: "d".into(),
            event: EventMessage::sync("autocomplete.stex", "e1"),
        })
        .unwrap();
        assert!(s.respond("e1", vec![]).is_ok());
        assert!(matches!(
            s.respond("e1", vec![]),
            Err(SdkError::UnknownCorrelation(_))
        ));
    }
}
