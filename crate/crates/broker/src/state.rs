//! The broker state machine. It performs no I/O: every call returns the
//! messages to send and the revisions to persist.

use std::collections::{BTreeMap, HashMap, VecDeque};

use redsys_core::wire::{
    ErrorCode, EventItem, EventMessage, EventMode, Message, RejectReason, Revision, Role,
};
use redsys_core::{compose, follow, overlaps, Changeset, Document};

use crate::error::BrokerError;

/// Identifies one connection.
pub type PeerId = u64;

pub const DEFAULT_SYNC_TIMEOUT_MS: u64 = 1000;

#[derive(Clone, Debug)]
pub struct BrokerConfig {
    /// Used for sync events that carry no `timeoutMs`.
    pub sync_timeout_ms: u64,
    /// Number of revisions kept in memory; `None` keeps everything.
    pub history_limit: Option<usize>,
}

impl Default for BrokerConfig {
    fn default() -> Self {
        BrokerConfig {
            sync_timeout_ms: DEFAULT_SYNC_TIMEOUT_MS,
            history_limit: None,
        }
    }
}

/// What the caller must do after a state transition.
#[derive(Debug, Default)]
pub struct Effects {
    pub sends: Vec<(PeerId, Message)>,
    pub commits: Vec<(String, Revision)>,
}

impl Effects {
    fn send(&mut self, peer: PeerId, msg: Message) {
        self.sends.push((peer, msg));
    }

    /// Messages addressed to `peer`, in order.
    pub fn to(&self, peer: PeerId) -> Vec<&Message> {
        self.sends
            .iter()
            .filter(|(p, _)| *p == peer)
            .map(|(_, m)| m)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubmitOutcome {
    Ack(u64),
    Reject {
        reason: RejectReason,
        head_rev: u64,
        detail: Option<String>,
    },
}

struct Record {
    revision: Revision,
    pool_before: usize,
    len_before: usize,
}

struct DocState {
    head: Document,
    history: VecDeque<Record>,
    /// Joined peers in connection order.
    members: Vec<PeerId>,
}

impl DocState {
    fn head_rev(&self) -> u64 {
        self.history.back().map_or(0, |r| r.revision.rev)
    }

    fn oldest_rev(&self) -> u64 {
        self.history.front().map_or(0, |r| r.revision.rev)
    }

    fn record(&self, rev: u64) -> Option<&Record> {
        let idx = rev.checked_sub(self.oldest_rev())? as usize;
        self.history.get(idx)
    }

    /// Pool length and text length right after revision `rev`.
    fn shape_after(&self, rev: u64) -> Option<(usize, usize)> {
        if rev == self.head_rev() {
            Some((self.head.pool().entries().len(), self.head.len()))
        } else {
            self.record(rev + 1).map(|r| (r.pool_before, r.len_before))
        }
    }
}

struct Peer {
    doc_id: String,
    client_id: String,
    role: Role,
    subscriptions: Vec<String>,
}

struct PendingEvent {
    doc_id: String,
    origin: PeerId,
    origin_correlation: String,
    deadline: u64,
    expected: Vec<PeerId>,
    answers: Vec<Option<Vec<EventItem>>>,
}

impl PendingEvent {
    fn complete(&self) -> bool {
        self.answers.iter().all(Option::is_some)
    }

    fn response(self) -> (PeerId, Message) {
        let items = self.answers.into_iter().flatten().flatten().collect();
        (
            self.origin,
            Message::EventResponse {
                doc_id: self.doc_id,
                correlation_id: self.origin_correlation,
                items,
            },
        )
    }
}

fn valid_doc_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn error_msg(doc_id: &str, code: ErrorCode, detail: impl Into<String>) -> Message {
    Message::Error {
        doc_id: doc_id.to_owned(),
        code,
        detail: detail.into(),
        correlation_id: None,
    }
}

pub struct Broker {
    config: BrokerConfig,
    docs: HashMap<String, DocState>,
    peers: HashMap<PeerId, Peer>,
    // keyed by the broker-side correlation id handed to services
    events: BTreeMap<String, PendingEvent>,
    next_event: u64,
}

impl Broker {
    pub fn new(config: BrokerConfig) -> Self {
        Broker {
            config,
            docs: HashMap::new(),
            peers: HashMap::new(),
            events: BTreeMap::new(),
            next_event: 0,
        }
    }

    pub fn config(&self) -> &BrokerConfig {
        &self.config
    }

    /// Creates `doc_id` with revision 0 inserting `initial_text`.
    pub fn open_document(
        &mut self,
        doc_id: &str,
        initial_text: &str,
        now: u64,
    ) -> Result<Revision, BrokerError> {
        if !valid_doc_id(doc_id) {
            return Err(BrokerError::BadDocId(doc_id.to_owned()));
        }
        if self.docs.contains_key(doc_id) {
            return Err(BrokerError::DuplicateDocId(doc_id.to_owned()));
        }
        let revision = Revision {
            rev: 0,
            changeset: Changeset::insertion(initial_text),
            author_id: String::new(),
            timestamp: now,
        };
        self.restore(doc_id, vec![revision.clone()])?;
        Ok(revision)
    }

    /// Rebuilds `doc_id` from a full revision history starting at 0.
    pub fn restore(&mut self, doc_id: &str, revisions: Vec<Revision>) -> Result<(), BrokerError> {
        if self.docs.contains_key(doc_id) {
            return Err(BrokerError::DuplicateDocId(doc_id.to_owned()));
        }
        let mut head = Document::new();
        let mut history = VecDeque::new();
        for (i, revision) in revisions.into_iter().enumerate() {
            if revision.rev != i as u64 {
                return Err(BrokerError::FutureRevision {
                    base_rev: revision.rev,
                    head_rev: i as u64,
                });
            }
            let next = head.apply(&revision.changeset)?;
            history.push_back(Record {
                revision,
                pool_before: head.pool().entries().len(),
                len_before: head.len(),
            });
            head = next;
        }
        if history.is_empty() {
            history.push_back(Record {
                revision: Revision {
                    rev: 0,
                    changeset: Changeset::identity(0),
                    author_id: String::new(),
                    timestamp: 0,
                },
                pool_before: 0,
                len_before: 0,
            });
        }
        let mut state = DocState {
            head,
            history,
            members: Vec::new(),
        };
        self.trim(&mut state);
        self.docs.insert(doc_id.to_owned(), state);
        Ok(())
    }

    fn trim(&self, state: &mut DocState) {
        if let Some(limit) = self.config.history_limit {
            while state.history.len() > limit.max(1) {
                state.history.pop_front();
            }
        }
    }

    pub fn head(&self, doc_id: &str) -> Option<(&Document, u64)> {
        self.docs.get(doc_id).map(|d| (&d.head, d.head_rev()))
    }

    /// Retained revisions of `doc_id`, oldest first.
    pub fn history(&self, doc_id: &str) -> Option<Vec<&Revision>> {
        self.docs
            .get(doc_id)
            .map(|d| d.history.iter().map(|r| &r.revision).collect())
    }

    pub fn snapshot_for(&self, doc_id: &str) -> Result<Message, BrokerError> {
        let doc = self
            .docs
            .get(doc_id)
            .ok_or_else(|| BrokerError::UnknownDoc(doc_id.to_owned()))?;
        Ok(Message::Init {
            doc_id: doc_id.to_owned(),
            rev: doc.head_rev(),
            snapshot: doc.head.snapshot(),
            pool: doc.head.pool().clone(),
        })
    }

    /// Commits `cs`, made against `base_rev`, on behalf of `author_id`.
    /// Every joined peer except `exclude` receives the resulting Update.
    pub fn submit(
        &mut self,
        doc_id: &str,
        author_id: &str,
        exclude: Option<PeerId>,
        base_rev: u64,
        cs: &Changeset,
        now: u64,
        fx: &mut Effects,
    ) -> Result<SubmitOutcome, BrokerError> {
        let doc = self
            .docs
            .get_mut(doc_id)
            .ok_or_else(|| BrokerError::UnknownDoc(doc_id.to_owned()))?;
        let head_rev = doc.head_rev();
        if base_rev > head_rev {
            return Err(BrokerError::FutureRevision { base_rev, head_rev });
        }
        let (pool_len, base_len) = doc.shape_after(base_rev).ok_or(BrokerError::StaleBeyondHistory {
            base_rev,
            oldest: doc.oldest_rev(),
        })?;
        let reject = |reason, detail: Option<String>| SubmitOutcome::Reject {
            reason,
            head_rev,
            detail,
        };
        let base_pool = doc.head.pool().prefix_view(pool_len);
        if cs.base_len() != base_len {
            return Ok(reject(
                RejectReason::Validation,
                Some(format!(
                    "changeset base length {} but revision {base_rev} has {base_len} characters",
                    cs.base_len()
                )),
            ));
        }
        if let Err(e) = cs.validate(&base_pool) {
            return Ok(reject(RejectReason::Validation, Some(e.to_string())));
        }

        let committed = if base_rev == head_rev {
            cs.clone()
        } else {
            let mut between = doc.record(base_rev + 1).expect("shape_after found it").revision.changeset.clone();
            for rev in base_rev + 2..=head_rev {
                let next = &doc.record(rev).expect("history is contiguous").revision.changeset;
                between = compose(&between, next, &base_pool)?;
            }
            if overlaps(&between, cs)? {
                return Ok(reject(RejectReason::MergeConflict, None));
            }
            follow(&between, cs, true, &base_pool)?
        };

        let next = doc.head.apply(&committed)?;
        let rev = head_rev + 1;
        let revision = Revision {
            rev,
            changeset: committed,
            author_id: author_id.to_owned(),
            timestamp: now,
        };
        doc.history.push_back(Record {
            revision: revision.clone(),
            pool_before: doc.head.pool().entries().len(),
            len_before: doc.head.len(),
        });
        doc.head = next;
        if let Some(limit) = self.config.history_limit {
            while doc.history.len() > limit.max(1) {
                doc.history.pop_front();
            }
        }
        for &member in &doc.members {
            if Some(member) != exclude {
                fx.send(
                    member,
                    Message::Update {
                        doc_id: doc_id.to_owned(),
                        rev,
                        changeset: revision.changeset.clone(),
                        author_id: author_id.to_owned(),
                    },
                );
            }
        }
        fx.commits.push((doc_id.to_owned(), revision));
        Ok(SubmitOutcome::Ack(rev))
    }

    /// Routes an event from `origin`. Async events are forwarded and
    /// forgotten; sync events are answered once every matching service has
    /// responded or the timeout passes (see [`Broker::tick`]).
    pub fn dispatch_event(
        &mut self,
        origin: PeerId,
        doc_id: &str,
        event: EventMessage,
        now: u64,
        fx: &mut Effects,
    ) -> Result<(), BrokerError> {
        let doc = self
            .docs
            .get(doc_id)
            .ok_or_else(|| BrokerError::UnknownDoc(doc_id.to_owned()))?;
        let targets: Vec<PeerId> = doc
            .members
            .iter()
            .copied()
            .filter(|p| *p != origin)
            .filter(|p| {
                let peer = &self.peers[p];
                peer.role == Role::Service
                    && peer.subscriptions.iter().any(|s| event.uri.starts_with(s.as_str()))
            })
            .collect();
        match event.mode {
            EventMode::Async => {
                for t in targets {
                    fx.send(
                        t,
                        Message::Event {
                            doc_id: doc_id.to_owned(),
                            event: event.clone(),
                        },
                    );
                }
                Ok(())
            }
            EventMode::Sync => {
                if targets.is_empty() {
                    return Err(BrokerError::NoSubscriber(event.uri));
                }
                let id = format!("e{}", self.next_event);
                self.next_event += 1;
                let timeout = event.timeout_ms.unwrap_or(self.config.sync_timeout_ms);
                let forwarded = EventMessage {
                    correlation_id: Some(id.clone()),
                    ..event.clone()
                };
                for &t in &targets {
                    fx.send(
                        t,
                        Message::Event {
                            doc_id: doc_id.to_owned(),
                            event: forwarded.clone(),
                        },
                    );
                }
                self.events.insert(
                    id,
                    PendingEvent {
                        doc_id: doc_id.to_owned(),
                        origin,
                        origin_correlation: event.correlation_id.unwrap_or_default(),
                        deadline: now + timeout,
                        answers: vec![None; targets.len()],
                        expected: targets,
                    },
                );
                Ok(())
            }
        }
    }

    fn event_response(
        &mut self,
        peer: PeerId,
        doc_id: &str,
        correlation_id: String,
        items: Vec<EventItem>,
        fx: &mut Effects,
    ) {
        let slot = self.events.get_mut(&correlation_id).and_then(|ev| {
            let i = ev.expected.iter().position(|p| *p == peer)?;
            ev.answers[i].is_none().then_some((ev, i))
        });
        let Some((ev, i)) = slot else {
            fx.send(
                peer,
                Message::Error {
                    doc_id: doc_id.to_owned(),
                    code: ErrorCode::UnknownCorrelation,
                    detail: format!("no open event {correlation_id:?} awaits this peer"),
                    correlation_id: Some(correlation_id),
                },
            );
            return;
        };
        ev.answers[i] = Some(items);
        if ev.complete() {
            let ev = self.events.remove(&correlation_id).expect("present");
            let (to, msg) = ev.response();
            fx.sends.push((to, msg));
        }
    }

    /// Earliest pending sync-event deadline.
    pub fn next_deadline(&self) -> Option<u64> {
        self.events.values().map(|e| e.deadline).min()
    }

    /// Answers every sync event whose deadline has passed with the items
    /// collected so far.
    pub fn tick(&mut self, now: u64) -> Effects {
        let mut fx = Effects::default();
        let expired: Vec<String> = self
            .events
            .iter()
            .filter(|(_, e)| e.deadline <= now)
            .map(|(id, _)| id.clone())
            .collect();
        for id in expired {
            let ev = self.events.remove(&id).expect("listed above");
            let (to, msg) = ev.response();
            fx.sends.push((to, msg));
        }
        fx
    }

    /// Forgets a closed connection.
    pub fn disconnect(&mut self, peer: PeerId) -> Effects {
        let mut fx = Effects::default();
        if let Some(p) = self.peers.remove(&peer) {
            if let Some(doc) = self.docs.get_mut(&p.doc_id) {
                doc.members.retain(|m| *m != peer);
            }
        }
        self.events.retain(|_, e| e.origin != peer);
        let mut done = Vec::new();
        for (id, ev) in self.events.iter_mut() {
            if let Some(i) = ev.expected.iter().position(|p| *p == peer) {
                if ev.answers[i].is_none() {
                    ev.answers[i] = Some(Vec::new());
                }
                if ev.complete() {
                    done.push(id.clone());
                }
            }
        }
        for id in done {
            let (to, msg) = self.events.remove(&id).expect("listed above").response();
            fx.sends.push((to, msg));
        }
        fx
    }

    /// Processes one message from `peer`.
    pub fn handle(&mut self, peer: PeerId, msg: Message, now: u64) -> Effects {
        let mut fx = Effects::default();
        let doc_id = msg.doc_id().to_owned();
        match msg {
            Message::Hello {
                doc_id,
                client_id,
                role,
                subscriptions,
                create,
            } => self.hello(peer, doc_id, client_id, role, subscriptions, create, now, &mut fx),
            Message::Submit {
                doc_id,
                base_rev,
                changeset,
            } => {
                let Some(author) = self.joined(peer, &doc_id) else {
                    fx.send(peer, error_msg(&doc_id, ErrorCode::NotJoined, "send Hello first"));
                    return fx;
                };
                let author = author.client_id.clone();
                let outcome = self.submit(&doc_id, &author, Some(peer), base_rev, &changeset, now, &mut fx);
                let head_rev = self.docs.get(&doc_id).map_or(0, DocState::head_rev);
                let reply = match outcome {
                    Ok(SubmitOutcome::Ack(new_rev)) => Message::Ack { doc_id, new_rev },
                    Ok(SubmitOutcome::Reject {
                        reason,
                        head_rev,
                        detail,
                    }) => Message::Reject {
                        doc_id,
                        reason,
                        head_rev,
                        detail,
                    },
                    Err(BrokerError::StaleBeyondHistory { base_rev, oldest }) => error_msg(
                        &doc_id,
                        ErrorCode::StaleBeyondHistory,
                        format!("base revision {base_rev} predates retained history (oldest {oldest})"),
                    ),
                    Err(e) => Message::Reject {
                        doc_id,
                        reason: RejectReason::Validation,
                        head_rev,
                        detail: Some(e.to_string()),
                    },
                };
                fx.send(peer, reply);
            }
            Message::Event { doc_id, event } => {
                if self.joined(peer, &doc_id).is_none() {
                    fx.send(peer, error_msg(&doc_id, ErrorCode::NotJoined, "send Hello first"));
                    return fx;
                }
                let correlation_id = event.correlation_id.clone();
                if let Err(e) = self.dispatch_event(peer, &doc_id, event, now, &mut fx) {
                    let code = match e {
                        BrokerError::NoSubscriber(_) => ErrorCode::NoSubscriber,
                        BrokerError::UnknownDoc(_) => ErrorCode::UnknownDoc,
                        _ => ErrorCode::BadMessage,
                    };
                    fx.send(
                        peer,
                        Message::Error {
                            doc_id,
                            code,
                            detail: e.to_string(),
                            correlation_id,
                        },
                    );
                }
            }
            Message::EventResponse {
                doc_id,
                correlation_id,
                items,
            } => self.event_response(peer, &doc_id, correlation_id, items, &mut fx),
            other => fx.send(
                peer,
                error_msg(
                    &doc_id,
                    ErrorCode::BadMessage,
                    format!("{} is not accepted by the broker", other.kind()),
                ),
            ),
        }
        fx
    }

    fn joined(&self, peer: PeerId, doc_id: &str) -> Option<&Peer> {
        self.peers.get(&peer).filter(|p| p.doc_id == doc_id)
    }

    #[allow(clippy::too_many_arguments)]
    fn hello(
        &mut self,
        peer: PeerId,
        doc_id: String,
        client_id: String,
        role: Role,
        subscriptions: Vec<String>,
        create: bool,
        now: u64,
        fx: &mut Effects,
    ) {
        if let Some(existing) = self.peers.get(&peer) {
            if existing.doc_id != doc_id {
                fx.send(
                    peer,
                    error_msg(&doc_id, ErrorCode::BadMessage, "a connection serves one document"),
                );
                return;
            }
        }
        if !self.docs.contains_key(&doc_id) {
            if !create {
                fx.send(
                    peer,
                    error_msg(&doc_id, ErrorCode::UnknownDoc, format!("unknown document {doc_id:?}")),
                );
                return;
            }
            match self.open_document(&doc_id, "", now) {
                Ok(rev) => fx.commits.push((doc_id.clone(), rev)),
                Err(e) => {
                    fx.send(peer, error_msg(&doc_id, ErrorCode::BadMessage, e.to_string()));
                    return;
                }
            }
        }
        let rejoin = self.peers.contains_key(&peer);
        self.peers.insert(
            peer,
            Peer {
                doc_id: doc_id.clone(),
                client_id,
                role,
                subscriptions,
            },
        );
        let doc = self.docs.get_mut(&doc_id).expect("created above");
        if !rejoin {
            doc.members.push(peer);
        }
        let init = self.snapshot_for(&doc_id).expect("document exists");
        fx.send(peer, init);
    }
}
