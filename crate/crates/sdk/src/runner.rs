//! Runs a [`Service`] against a broker on one callback thread.

use std::net::SocketAddr;
use std::ops::Range;
use std::sync::mpsc::{Receiver, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use redsys_core::wire::{ErrorCode, EventItem, EventMessage, EventMode, Message};
use redsys_core::{Changeset, Document};

use crate::connection::{channel, Connection, Inbound, Transcript};
use crate::error::SdkError;
use crate::session::{ServiceSession, SessionEvent, SubmitResult};
use crate::token::ProcessingToken;

/// Callbacks are never invoked concurrently; long work belongs on another
/// thread, guarded by a [`ProcessingToken`] and reported back through a
/// [`ServiceHandle`].
#[allow(unused_variables)]
pub trait Service: Send + 'static {
    fn on_init(&mut self, ctx: &mut Context<'_>) {}

    fn on_update(&mut self, ctx: &mut Context<'_>, changeset: &Changeset, author_id: &str) {}

    /// Returning `Some` answers a sync event immediately; `None` leaves it
    /// to a later [`Context::respond`] or [`ServiceHandle::respond`].
    fn on_event(&mut self, ctx: &mut Context<'_>, event: &EventMessage) -> Option<Vec<EventItem>> {
        None
    }

    fn on_submit_result(&mut self, ctx: &mut Context<'_>, result: &SubmitResult) {}

    fn on_wake(&mut self, ctx: &mut Context<'_>, tag: u64) {}

    fn on_error(&mut self, ctx: &mut Context<'_>, code: ErrorCode, detail: &str) {
        log::warn!("broker error {code:?}: {detail}");
    }
}

enum Command {
    Inbound(Inbound),
    Submit { base_rev: u64, changeset: Changeset },
    Respond { correlation_id: String, items: Vec<EventItem> },
    Wake(u64),
    Shutdown,
}

/// Thread-safe way to reach a running service loop.
#[derive(Clone)]
pub struct ServiceHandle {
    tx: Sender<Command>,
}

impl ServiceHandle {
    /// Queues `changeset`, made against revision `base_rev`.
    pub fn submit(&self, base_rev: u64, changeset: Changeset) {
        let _ = self.tx.send(Command::Submit { base_rev, changeset });
    }

    pub fn respond(&self, correlation_id: &str, items: Vec<EventItem>) {
        let _ = self.tx.send(Command::Respond {
            correlation_id: correlation_id.to_owned(),
            items,
        });
    }

    /// Calls [`Service::on_wake`] with `tag` on the callback thread.
    pub fn wake(&self, tag: u64) {
        let _ = self.tx.send(Command::Wake(tag));
    }

    pub fn shutdown(&self) {
        let _ = self.tx.send(Command::Shutdown);
    }
}

/// What a callback can see and do.
pub struct Context<'a> {
    session: &'a mut ServiceSession,
    out: &'a mut Vec<Message>,
    handle: &'a ServiceHandle,
}

impl Context<'_> {
    pub fn doc(&self) -> &Document {
        self.session.doc().expect("callbacks run after init")
    }

    pub fn rev(&self) -> u64 {
        self.session.rev()
    }

    pub fn doc_id(&self) -> &str {
        self.session.doc_id()
    }

    /// Submits `changeset` against the current revision.
    pub fn submit(&mut self, changeset: Changeset) {
        let rev = self.session.rev();
        self.submit_at(rev, changeset);
    }

    pub fn submit_at(&mut self, base_rev: u64, changeset: Changeset) {
        let msgs = self.session.submit(base_rev, changeset);
        self.out.extend(msgs);
    }

    pub fn respond(&mut self, correlation_id: &str, items: Vec<EventItem>) -> Result<(), SdkError> {
        let msg = self.session.respond(correlation_id, items)?;
        self.out.push(msg);
        Ok(())
    }

    /// A token that is cancelled once an update touches `ranges`.
    pub fn token(&mut self, ranges: Vec<Range<usize>>) -> ProcessingToken {
        self.session.token(ranges)
    }

    pub fn handle(&self) -> ServiceHandle {
        self.handle.clone()
    }
}

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub doc_id: String,
    pub client_id: String,
    pub subscriptions: Vec<String>,
    pub transcript: Option<Transcript>,
}

impl ServiceConfig {
    pub fn new(addr: SocketAddr, doc_id: &str, client_id: &str) -> Self {
        ServiceConfig {
            addr,
            doc_id: doc_id.to_owned(),
            client_id: client_id.to_owned(),
            subscriptions: Vec::new(),
            transcript: None,
        }
    }

    pub fn subscribe(mut self, prefix: &str) -> Self {
        self.subscriptions.push(prefix.to_owned());
        self
    }

    pub fn transcript(mut self, t: Transcript) -> Self {
        self.transcript = Some(t);
        self
    }
}

/// A service loop running on its own thread.
pub struct RunningService {
    handle: ServiceHandle,
    thread: JoinHandle<Result<(), SdkError>>,
}

impl RunningService {
    pub fn handle(&self) -> ServiceHandle {
        self.handle.clone()
    }

    pub fn join(self) -> Result<(), SdkError> {
        self.thread.join().expect("service thread panicked")
    }

    pub fn stop(self) -> Result<(), SdkError> {
        self.handle.shutdown();
        self.join()
    }
}

/// Connects, waits for the first `Init` and runs the loop on a new thread.
pub fn spawn_service<S: Service>(config: ServiceConfig, service: S) -> Result<RunningService, SdkError> {
    let (tx, rx) = channel();
    let conn = Connection::open(config.addr, config.transcript.clone(), tx.clone(), Command::Inbound)?;
    let handle = ServiceHandle { tx };
    let (ready_tx, ready_rx) = channel();
    let mut svc = Loop {
        session: ServiceSession::new(&config.doc_id, &config.client_id, config.subscriptions),
        conn,
        handle: handle.clone(),
        service,
        ready: Some(ready_tx),
    };
    let thread = thread::Builder::new()
        .name(format!("service-{}", config.client_id))
        .spawn(move || {
            let r = svc.run(rx);
            svc.conn.close();
            r
        })?;
    match ready_rx.recv() {
        Ok(()) => Ok(RunningService { handle, thread }),
        Err(_) => Err(thread.join().expect("service thread panicked").err().unwrap_or(SdkError::Closed)),
    }
}

/// Runs `service` on the calling thread until the connection closes or the
/// service shuts down.
pub fn run_service<S: Service>(config: ServiceConfig, service: S) -> Result<(), SdkError> {
    spawn_service(config, service)?.join()
}

struct Loop<S> {
    session: ServiceSession,
    conn: Arc<Connection>,
    handle: ServiceHandle,
    service: S,
    ready: Option<Sender<()>>,
}

impl<S: Service> Loop<S> {
    fn run(&mut self, rx: Receiver<Command>) -> Result<(), SdkError> {
        self.conn.send(&self.session.hello())?;
        while let Ok(cmd) = rx.recv() {
            let mut out = Vec::new();
            match cmd {
                Command::Inbound(Inbound::Message(msg)) => {
                    let (msgs, events) = self.session.handle(msg)?;
                    out.extend(msgs);
                    for ev in events {
                        self.dispatch(ev, &mut out);
                    }
                }
                Command::Inbound(Inbound::Garbage(e)) => log::warn!("dropping undecodable line: {e}"),
                Command::Inbound(Inbound::Closed) => return Ok(()),
                Command::Submit { base_rev, changeset } => {
                    out.extend(self.session.submit(base_rev, changeset));
                }
                Command::Respond { correlation_id, items } => match self.session.respond(&correlation_id, items) {
                    Ok(m) => out.push(m),
                    Err(e) => log::debug!("{e}"),
                },
                Command::Wake(tag) => {
                    if self.session.doc().is_some() {
                        let mut ctx = Context {
                            session: &mut self.session,
                            out: &mut out,
                            handle: &self.handle,
                        };
                        self.service.on_wake(&mut ctx, tag);
                    }
                }
                Command::Shutdown => return Ok(()),
            }
            self.conn.send_all(&out)?;
        }
        Ok(())
    }

    fn dispatch(&mut self, ev: SessionEvent, out: &mut Vec<Message>) {
        let Loop { session, service, handle, ready, .. } = self;
        let mut ctx = Context { session, out, handle };
        match ev {
            SessionEvent::Init => {
                service.on_init(&mut ctx);
                if let Some(r) = ready.take() {
                    let _ = r.send(());
                }
            }
            SessionEvent::Update { changeset, author_id } => service.on_update(&mut ctx, &changeset, &author_id),
            SessionEvent::Event(event) => {
                let answer = service.on_event(&mut ctx, &event);
                if let (Some(items), EventMode::Sync, Some(corr)) = (answer, event.mode, &event.correlation_id) {
                    if let Err(e) = ctx.respond(corr, items) {
                        log::debug!("{e}");
                    }
                }
            }
            SessionEvent::Submitted(result) => service.on_submit_result(&mut ctx, &result),
            SessionEvent::Error { code, detail } => service.on_error(&mut ctx, code, &detail),
        }
    }
}
