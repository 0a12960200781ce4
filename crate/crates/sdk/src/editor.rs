//! Editor-side sync state: committed, sent and pending buffers.

use redsys_core::wire::{ErrorCode, EventAction, Message, Role};
use redsys_core::{compose, follow, remap_pool, Changeset, ChangesetError, Document, PoolView};

use crate::error::SdkError;

#[derive(Clone, Debug)]
struct Sent {
    changeset: Changeset,
    base_pool_len: usize,
    /// Updates received since `base_rev`, composed.
    since: Option<Changeset>,
}

/// What happened to the editor's own submission.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EditorNotice {
    Init,
    Remote { rev: u64, author_id: String },
    Acked(u64),
    Rejected(u64),
    Error { code: ErrorCode, detail: String },
}

/// Sans-IO client state. The displayed document is
/// `committed.apply(sent rebased).apply(pending)`.
#[derive(Clone, Debug)]
pub struct EditorState {
    doc_id: String,
    client_id: String,
    create: bool,
    committed: Option<Document>,
    rev: u64,
    sent: Option<Sent>,
    pending: Changeset,
    displayed: Document,
    resyncing: bool,
}

impl EditorState {
    pub fn new(doc_id: &str, client_id: &str) -> Self {
        EditorState {
            doc_id: doc_id.to_owned(),
            client_id: client_id.to_owned(),
            create: false,
            committed: None,
            rev: 0,
            sent: None,
            pending: Changeset::identity(0),
            displayed: Document::new(),
            resyncing: false,
        }
    }

    /// Ask the broker to open the document empty if it does not exist.
    pub fn creating(mut self) -> Self {
        self.create = true;
        self
    }

    pub fn hello(&self) -> Message {
        Message::Hello {
            doc_id: self.doc_id.clone(),
            client_id: self.client_id.clone(),
            role: Role::Editor,
            subscriptions: Vec::new(),
            create: self.create,
        }
    }

    pub fn is_ready(&self) -> bool {
        self.committed.is_some() && !self.resyncing
    }

    /// True when every local edit has been acknowledged.
    pub fn is_idle(&self) -> bool {
        self.is_ready() && self.sent.is_none() && self.pending.is_identity()
    }

    pub fn displayed(&self) -> &Document {
        &self.displayed
    }

    pub fn committed(&self) -> Option<&Document> {
        self.committed.as_ref()
    }

    pub fn server_rev(&self) -> u64 {
        self.rev
    }

    /// Committed plus the in-flight change as the broker will commit it.
    fn sent_rebased(&self, sent: &Sent) -> Result<Changeset, ChangesetError> {
        let committed = self.committed.as_ref().expect("sent implies init");
        match &sent.since {
            None => Ok(sent.changeset.clone()),
            Some(since) => follow(
                since,
                &sent.changeset,
                true,
                &committed.pool().prefix_view(sent.base_pool_len),
            ),
        }
    }

    fn view(&self) -> Result<Document, ChangesetError> {
        let committed = self.committed.as_ref().expect("view implies init");
        match &self.sent {
            None => Ok(committed.clone()),
            Some(s) => committed.apply(&self.sent_rebased(s)?),
        }
    }

    /// Applies a local edit made against the displayed document.
    pub fn edit(&mut self, cs: &Changeset) -> Result<Vec<Message>, SdkError> {
        if self.committed.is_none() {
            return Err(SdkError::NotInitialized);
        }
        let next = self.displayed.apply(cs)?;
        if !self.resyncing {
            let view = self.view()?;
            self.pending = compose(&self.pending, cs, view.pool())?;
        }
        self.displayed = next;
        Ok(self.flush())
    }

    /// Applies a service-offered action made against the committed document.
    pub fn choose(&mut self, action: &EventAction) -> Result<Vec<Message>, SdkError> {
        if !self.is_ready() {
            return Err(SdkError::NotInitialized);
        }
        if action.base_rev != self.rev {
            return Err(SdkError::StaleAction {
                action_rev: action.base_rev,
                server_rev: self.rev,
            });
        }
        let committed = self.committed.as_ref().expect("ready");
        let mut cs = action.changeset.clone();
        if let Some(s) = &self.sent {
            cs = follow(&self.sent_rebased(s)?, &cs, true, committed.pool())?;
        }
        let view = self.view()?;
        let cs = follow(&self.pending, &cs, true, view.pool())?;
        self.edit(&cs)
    }

    fn flush(&mut self) -> Vec<Message> {
        if self.resyncing || self.sent.is_some() || self.pending.is_identity() {
            return Vec::new();
        }
        let committed = self.committed.as_ref().expect("flush implies init");
        let changeset = std::mem::replace(&mut self.pending, Changeset::identity(self.displayed.len()));
        self.sent = Some(Sent {
            changeset: changeset.clone(),
            base_pool_len: committed.pool().entries().len(),
            since: None,
        });
        vec![Message::Submit {
            doc_id: self.doc_id.clone(),
            base_rev: self.rev,
            changeset,
        }]
    }

    fn resync(&mut self) -> Vec<Message> {
        self.resyncing = true;
        self.sent = None;
        vec![self.hello()]
    }

    fn remote(&mut self, cs: &Changeset) -> Result<(), SdkError> {
        let committed = self.committed.clone().expect("update implies init");
        let old_view = self.view()?;
        let x = match &self.sent {
            None => cs.clone(),
            Some(s) => follow(&self.sent_rebased(s)?, cs, false, committed.pool())?,
        };
        let next = committed.apply(cs)?;
        if let Some(s) = &mut self.sent {
            let base_pool = committed.pool().prefix_view(s.base_pool_len);
            s.since = Some(match s.since.take() {
                None => cs.clone(),
                Some(since) => compose(&since, cs, &base_pool)?,
            });
        }
        self.committed = Some(next);
        let view = self.view()?;

        let moved = follow(&x, &self.pending, true, old_view.pool())?;
        let from = PoolView::new(old_view.pool()).with(x.new_pool());
        let wanted = old_view.apply(&x)?.apply(&moved)?;
        self.pending = match remap_pool(&moved, &from, view.pool()) {
            Ok(p) if view.apply(&p).is_ok_and(|d| d.content_eq(&wanted)) => p,
            _ => view.diff_to(&wanted),
        };
        self.displayed = view.apply(&self.pending)?;
        Ok(())
    }

    pub fn handle(&mut self, msg: Message) -> Result<(Vec<Message>, Option<EditorNotice>), SdkError> {
        match msg {
            Message::Init {
                rev, snapshot, pool, ..
            } => {
                let fresh = Document::from_snapshot(pool, &snapshot)?;
                self.pending = if self.committed.is_some() {
                    fresh.diff_to(&self.displayed)
                } else {
                    Changeset::identity(fresh.len())
                };
                self.displayed = fresh.apply(&self.pending)?;
                self.committed = Some(fresh);
                self.rev = rev;
                self.sent = None;
                self.resyncing = false;
                Ok((self.flush(), Some(EditorNotice::Init)))
            }
            Message::Update {
                rev,
                changeset,
                author_id,
                ..
            } => {
                if self.resyncing || self.committed.is_none() {
                    return Ok((Vec::new(), None));
                }
                if rev != self.rev + 1 {
                    return Ok((self.resync(), None));
                }
                self.remote(&changeset)?;
                self.rev = rev;
                Ok((Vec::new(), Some(EditorNotice::Remote { rev, author_id })))
            }
            Message::Ack { new_rev, .. } => {
                let Some(sent) = self.sent.clone() else {
                    return Ok((Vec::new(), None));
                };
                if self.resyncing {
                    return Ok((Vec::new(), None));
                }
                if new_rev != self.rev + 1 {
                    return Ok((self.resync(), None));
                }
                let committed = self.committed.as_ref().expect("ack implies init");
                let next = committed.apply(&self.sent_rebased(&sent)?)?;
                self.committed = Some(next);
                self.rev = new_rev;
                self.sent = None;
                Ok((self.flush(), Some(EditorNotice::Acked(new_rev))))
            }
            Message::Reject { head_rev, .. } => {
                if self.sent.is_none() || self.resyncing {
                    return Ok((Vec::new(), None));
                }
                Ok((self.resync(), Some(EditorNotice::Rejected(head_rev))))
            }
            Message::Error { code, detail, .. } => Ok((Vec::new(), Some(EditorNotice::Error { code, detail }))),
            _ => Ok((Vec::new(), None)),
        }
    }
}
