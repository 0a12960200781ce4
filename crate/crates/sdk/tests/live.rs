//! Services and editors against a real broker over TCP.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use redsys_broker::{Server, ServerConfig};
use redsys_core::wire::{EventItem, EventMessage};
use redsys_core::{Changeset, ChangesetBuilder, Document};
use redsys_sdk::{spawn_service, Context, EditorClient, EditorState, Service, ServiceConfig, SubmitResult};

const T: Duration = Duration::from_secs(10);

fn start(text: &str) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    let text = text.to_owned();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let mut server = Server::bind(ServerConfig::new("127.0.0.1:0".parse().unwrap()))
                .await
                .unwrap();
            server.open_document("d", &text).unwrap();
            tx.send(server.local_addr()).unwrap();
            server.run().await.unwrap();
        });
    });
    rx.recv().unwrap()
}

/// The broker head, as a fresh client sees it.
fn head(addr: SocketAddr) -> (Document, u64) {
    let c = EditorClient::connect(addr, "d", "probe").unwrap();
    (c.state().committed().unwrap().clone(), c.state().server_rev())
}

#[derive(Default)]
struct Shared {
    docs: Mutex<Vec<(u64, Document)>>,
    results: Mutex<Vec<SubmitResult>>,
    in_callback: AtomicBool,
    overlaps: AtomicUsize,
    calls: AtomicUsize,
}

/// Records every state it sees and marks each word ending in `!` bold,
/// submitting from a worker thread against a possibly stale revision.
struct Probe(Arc<Shared>);

impl Probe {
    fn enter(&self) {
        if self.0.in_callback.swap(true, Ordering::SeqCst) {
            self.0.overlaps.fetch_add(1, Ordering::SeqCst);
        }
        self.0.calls.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(Duration::from_micros(200));
    }

    fn leave(&self, ctx: &Context<'_>) {
        self.0.docs.lock().unwrap().push((ctx.rev(), ctx.doc().clone()));
        self.0.in_callback.store(false, Ordering::SeqCst);
    }
}

impl Service for Probe {
    fn on_init(&mut self, ctx: &mut Context<'_>) {
        self.enter();
        self.leave(ctx);
    }

    fn on_update(&mut self, ctx: &mut Context<'_>, _cs: &Changeset, author: &str) {
        self.enter();
        if author != "probe-svc" {
            let doc = ctx.doc();
            if let Some(i) = doc.chars().iter().position(|&c| c == '!') {
                if doc.attr_value(i, "bold").is_none() {
                    let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
                    b.keep(i, &[]).keep(1, &[("bold", "true")]);
                    let cs = b.finish().unwrap();
                    let (rev, handle) = (ctx.rev(), ctx.handle());
                    std::thread::spawn(move || {
                        std::thread::sleep(Duration::from_millis(5));
                        handle.submit(rev, cs);
                    });
                }
            }
        }
        self.leave(ctx);
    }

    fn on_event(&mut self, ctx: &mut Context<'_>, ev: &EventMessage) -> Option<Vec<EventItem>> {
        self.enter();
        let prefix = ev.param("prefix").unwrap_or("").to_owned();
        self.leave(ctx);
        Some(vec![EventItem::label(format!("{prefix}ology"))])
    }

    fn on_submit_result(&mut self, ctx: &mut Context<'_>, r: &SubmitResult) {
        self.enter();
        self.0.results.lock().unwrap().push(r.clone());
        self.leave(ctx);
    }

    fn on_wake(&mut self, ctx: &mut Context<'_>, _tag: u64) {
        self.enter();
        self.leave(ctx);
    }
}

#[test]
fn service_mirrors_broker_and_callbacks_never_overlap() {
    let addr = start("hello");
    let shared = Arc::new(Shared::default());
    let svc = spawn_service(
        ServiceConfig::new(addr, "d", "probe-svc").subscribe("autocomplete."),
        Probe(shared.clone()),
    )
    .unwrap();

    let waker = svc.handle();
    let stop = Arc::new(AtomicBool::new(false));
    let stop2 = stop.clone();
    let wake_thread = std::thread::spawn(move || {
        let mut n = 0;
        while !stop2.load(Ordering::SeqCst) {
            waker.wake(n);
            n += 1;
            std::thread::sleep(Duration::from_micros(300));
        }
    });

    let editors: Vec<_> = (0..3)
        .map(|k| {
            std::thread::spawn(move || {
                let mut rng = StdRng::seed_from_u64(k);
                let mut ed = EditorClient::connect(addr, "d", &format!("ed{k}")).unwrap();
                for i in 0..40 {
                    let len = ed.doc().len();
                    let pos = rng.gen_range(0..=len);
                    if i % 10 == 9 {
                        ed.insert(pos, "!").unwrap();
                    } else if len > 3 && rng.gen_bool(0.3) {
                        ed.delete(pos.min(len - 1), 1).unwrap();
                    } else {
                        ed.insert(pos, "ab").unwrap();
                    }
                    ed.pump(Duration::from_millis(rng.gen_range(0..3))).unwrap();
                }
                ed.wait_idle(T).unwrap();
            })
        })
        .collect();
    for e in editors {
        e.join().unwrap();
    }

    let mut asker = EditorClient::connect(addr, "d", "asker").unwrap();
    let items = asker
        .event(EventMessage::sync("autocomplete.stex", "").with_param("prefix", "bi"), T)
        .unwrap();
    assert_eq!(items, vec![EventItem::label("biology")]);

    std::thread::sleep(Duration::from_millis(300));
    stop.store(true, Ordering::SeqCst);
    wake_thread.join().unwrap();
    let (head_doc, head_rev) = head(addr);
    svc.stop().unwrap();

    assert_eq!(shared.overlaps.load(Ordering::SeqCst), 0);
    assert!(shared.calls.load(Ordering::SeqCst) > 100);
    let docs = shared.docs.lock().unwrap();
    let (rev, last) = docs.last().unwrap();
    assert_eq!(*rev, head_rev);
    assert_eq!(last, &head_doc);
    assert!(shared
        .results
        .lock()
        .unwrap()
        .iter()
        .any(|r| matches!(r, SubmitResult::Ack { .. })));
}

#[test]
fn editors_converge_on_the_broker_head() {
    let addr = start("");
    let editors: Vec<_> = (0..3)
        .map(|k| {
            std::thread::spawn(move || {
                let mut rng = StdRng::seed_from_u64(100 + k);
                let mut ed =
                    EditorClient::connect_with(addr, EditorState::new("d", &format!("ed{k}")), None).unwrap();
                for _ in 0..60 {
                    let len = ed.doc().len();
                    match rng.gen_range(0..4) {
                        0 if len > 0 => {
                            let p = rng.gen_range(0..len);
                            ed.delete(p, 1.min(len - p)).unwrap()
                        }
                        1 if len > 1 => {
                            let p = rng.gen_range(0..len - 1);
                            ed.set_attr(p..p + 2, "em", if rng.gen() { "1" } else { "" }).unwrap()
                        }
                        _ => ed.insert(rng.gen_range(0..=len), "xy").unwrap(),
                    }
                    ed.pump(Duration::from_millis(rng.gen_range(0..2))).unwrap();
                }
                ed.wait_idle(T).unwrap();
                ed
            })
        })
        .collect();
    let mut eds: Vec<EditorClient> = editors.into_iter().map(|h| h.join().unwrap()).collect();
    let (head_doc, head_rev) = head(addr);
    for ed in &mut eds {
        ed.wait_until(T, |s| s.server_rev() == head_rev).unwrap();
        assert!(ed.doc().content_eq(&head_doc), "{} vs {}", ed.doc(), head_doc);
    }
}
