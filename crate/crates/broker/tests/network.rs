//! End-to-end checks over real sockets: raw TCP, WebSocket and the log file.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::PathBuf;
use std::time::Duration;

use redsys_broker::log::{read_log, replay, RevisionLog};
use redsys_broker::{Server, ServerConfig};
use redsys_core::wire::{decode, encode, Message, Role};
use redsys_core::{ChangesetBuilder, Document};

fn start(log_dir: Option<PathBuf>, text: &str) -> (SocketAddr, SocketAddr) {
    let (tx, rx) = std::sync::mpsc::channel();
    let text = text.to_owned();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let mut config = ServerConfig::new("127.0.0.1:0".parse().unwrap());
            config.ws = Some("127.0.0.1:0".parse().unwrap());
            config.log_dir = log_dir;
            let mut server = Server::bind(config).await.unwrap();
            server.open_document("d", &text).unwrap();
            tx.send((server.local_addr(), server.ws_addr().unwrap())).unwrap();
            server.run().await.unwrap();
        });
    });
    rx.recv().unwrap()
}

struct Line {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Line {
    fn connect(addr: SocketAddr) -> Self {
        let s = TcpStream::connect(addr).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
        Line {
            reader: BufReader::new(s.try_clone().unwrap()),
            writer: s,
        }
    }

    fn send(&mut self, m: &Message) {
        writeln!(self.writer, "{}", encode(m)).unwrap();
    }

    fn send_raw(&mut self, raw: &str) {
        writeln!(self.writer, "{raw}").unwrap();
    }

    fn recv(&mut self) -> Message {
        let mut line = String::new();
        self.reader.read_line(&mut line).unwrap();
        decode(line.as_bytes()).unwrap()
    }
}

fn hello(client: &str) -> Message {
    Message::Hello {
        doc_id: "d".into(),
        client_id: client.into(),
        role: Role::Editor,
        subscriptions: vec![],
        create: false,
    }
}

fn init_doc(m: Message) -> (Document, u64) {
    match m {
        Message::Init {
            rev, snapshot, pool, ..
        } => (Document::from_snapshot(pool, &snapshot).unwrap(), rev),
        other => panic!("expected Init, got {other:?}"),
    }
}

#[test]
fn tcp_and_websocket_peers_share_a_document() {
    let (tcp, ws_addr) = start(None, "hello");
    let mut a = Line::connect(tcp);
    a.send(&hello("a"));
    let (doc, rev) = init_doc(a.recv());
    assert_eq!((doc.text().as_str(), rev), ("hello", 0));

    let (mut ws, _) = tungstenite::connect(format!("ws://{ws_addr}/?doc=d&user=b")).unwrap();
    ws.send(tungstenite::Message::Text(encode(&hello("b")))).unwrap();
    let first = ws.read().unwrap().into_text().unwrap();
    let (wdoc, _) = init_doc(decode(first.as_bytes()).unwrap());
    assert_eq!(wdoc.text(), "hello");

    let mut b = ChangesetBuilder::new(5, doc.pool());
    b.keep(5, &[]).insert(" world", &[]);
    let cs = b.finish().unwrap();
    a.send(&Message::Submit {
        doc_id: "d".into(),
        base_rev: 0,
        changeset: cs.clone(),
    });
    assert_eq!(
        a.recv(),
        Message::Ack {
            doc_id: "d".into(),
            new_rev: 1
        }
    );
    let update = ws.read().unwrap().into_text().unwrap();
    assert_eq!(
        decode(update.as_bytes()).unwrap(),
        Message::Update {
            doc_id: "d".into(),
            rev: 1,
            changeset: cs,
            author_id: "a".into()
        }
    );
}

#[test]
fn garbage_line_gets_bad_message_and_connection_survives() {
    let (tcp, _) = start(None, "");
    let mut a = Line::connect(tcp);
    a.send_raw(r#"{"kind":"Ack","docId":"d""#);
    assert!(matches!(a.recv(), Message::Error { .. }));
    a.send(&hello("a"));
    assert!(matches!(a.recv(), Message::Init { .. }));
}

#[test]
fn log_replays_to_live_head() {
    let dir = tempfile::tempdir().unwrap();
    let (tcp, _) = start(Some(dir.path().to_path_buf()), "ab");
    let mut a = Line::connect(tcp);
    a.send(&hello("a"));
    let (mut doc, mut rev) = init_doc(a.recv());
    for (i, piece) in ["x", "y", "z"].iter().enumerate() {
        let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
        b.keep(i, &[]).insert(piece, &[("author", "a")]);
        let cs = b.finish().unwrap();
        a.send(&Message::Submit {
            doc_id: "d".into(),
            base_rev: rev,
            changeset: cs.clone(),
        });
        assert!(matches!(a.recv(), Message::Ack { .. }));
        doc = doc.apply(&cs).unwrap();
        rev += 1;
    }
    // writes happen on the broker task; give it a moment to flush
    std::thread::sleep(Duration::from_millis(100));
    let revs = read_log(&RevisionLog::path_for(dir.path(), "d")).unwrap();
    assert_eq!(revs.len(), 4);
    assert_eq!(replay(&revs).unwrap(), doc);
    assert_eq!(doc.text(), "xyzab");
}
