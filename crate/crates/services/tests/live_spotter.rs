//! The spotter's stale submits, merges, conflicts and cancellation against a
//! real broker.

use std::io::Write;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use redsys_broker::{Server, ServerConfig};
use redsys_sdk::{spawn_service, EditorClient, ServiceConfig, Transcript};
use redsys_services::{Dictionary, Spotter, SpotterOptions};

const LATENCY: Duration = Duration::from_millis(150);

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

#[derive(Clone, Default)]
struct Buf(Arc<Mutex<Vec<u8>>>);

impl Write for Buf {
    fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().write(b)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl Buf {
    fn lines(&self, prefix: &str) -> Vec<String> {
        String::from_utf8(self.0.lock().unwrap().clone())
            .unwrap()
            .lines()
            .filter(|l| l.starts_with(prefix))
            .map(str::to_owned)
            .collect()
    }
}

struct Setup {
    editor: EditorClient,
    log: Buf,
    spotter: redsys_sdk::RunningService,
}

fn setup(text: &str, ignore_cancellation: bool) -> Setup {
    let addr = start(text);
    let mut dict = Dictionary::new();
    dict.add("gravitational constant", "physics-constants", "grav-constant");
    let log = Buf::default();
    let spotter = spawn_service(
        ServiceConfig::new(addr, "d", "spotter")
            .subscribe("contextmenu.spotter_plugin.")
            .transcript(Transcript::new(log.clone())),
        Spotter::new(
            dict,
            SpotterOptions {
                latency: LATENCY,
                ignore_cancellation,
            },
        ),
    )
    .unwrap();
    let editor = EditorClient::connect(addr, "d", "ed").unwrap();
    Setup { editor, log, spotter }
}

fn settle(ed: &mut EditorClient) {
    ed.pump(LATENCY * 2 + Duration::from_millis(100)).unwrap();
    ed.wait_idle(Duration::from_secs(5)).unwrap();
}

#[test]
fn stale_disjoint_submit_is_merged() {
    let Setup { mut editor, log, spotter } = setup("x", false);
    editor.insert(1, " gravitational constant").unwrap();
    editor.wait_idle(Duration::from_secs(5)).unwrap();
    std::thread::sleep(Duration::from_millis(30));
    editor.insert(0, "Intro ").unwrap();
    settle(&mut editor);
    let doc = editor.doc().clone();
    assert_eq!(doc.text(), "Intro x gravitational constant");
    assert_eq!(doc.attr_value(8, "spot"), Some("1"));
    assert_eq!(doc.attr_value(7, "spot"), None);
    let submits = log.lines("send {\"kind\":\"Submit\"");
    assert_eq!(submits.len(), 1);
    assert!(submits[0].contains("\"baseRev\":1"), "{}", submits[0]);
    assert_eq!(log.lines("recv {\"kind\":\"Ack\"").len(), 1);
    spotter.stop().unwrap();
}

#[test]
fn overlapping_edit_cancels_the_run() {
    let Setup { mut editor, log, spotter } = setup("x", false);
    editor.insert(1, " gravitational constant").unwrap();
    editor.wait_idle(Duration::from_secs(5)).unwrap();
    std::thread::sleep(Duration::from_millis(30));
    editor.insert(8, "Q").unwrap();
    settle(&mut editor);
    assert!(log.lines("send {\"kind\":\"Submit\"").is_empty());
    assert_eq!(editor.doc().attr_value(3, "spot"), None);

    // fixing the word spots it again
    editor.delete(8, 1).unwrap();
    settle(&mut editor);
    assert_eq!(editor.doc().attr_value(3, "spot"), Some("1"));
    assert_eq!(log.lines("send {\"kind\":\"Submit\"").len(), 1);
    spotter.stop().unwrap();
}

#[test]
fn without_cancellation_the_stale_submit_conflicts() {
    let Setup { mut editor, log, spotter } = setup("x", true);
    editor.insert(1, " gravitational constant").unwrap();
    editor.wait_idle(Duration::from_secs(5)).unwrap();
    std::thread::sleep(Duration::from_millis(30));
    editor.insert(8, "Q").unwrap();
    settle(&mut editor);
    let rejects = log.lines("recv {\"kind\":\"Reject\"");
    assert_eq!(rejects.len(), 1);
    assert!(rejects[0].contains("MergeConflict"));
    assert_eq!(editor.doc().attr_value(3, "spot"), None);
    spotter.stop().unwrap();
}
