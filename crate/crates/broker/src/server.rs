//! TCP and WebSocket front end. One task owns the [`Broker`]; connection
//! tasks only decode, encode and move bytes.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use futures_util::{SinkExt, StreamExt};
use log::{debug, info, warn};
use redsys_core::wire::{decode, encode, ErrorCode, Message};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};
use tokio_tungstenite::tungstenite::Message as WsMessage;

use crate::error::ServerError;
use crate::log::RevisionLog;
use crate::state::{Broker, BrokerConfig, Effects, PeerId};

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub ws: Option<SocketAddr>,
    pub log_dir: Option<PathBuf>,
    pub broker: BrokerConfig,
}

impl ServerConfig {
    pub fn new(listen: SocketAddr) -> Self {
        ServerConfig {
            listen,
            ws: None,
            log_dir: None,
            broker: BrokerConfig::default(),
        }
    }
}

enum Command {
    Connect(PeerId, UnboundedSender<String>),
    Incoming(PeerId, Message),
    Closed(PeerId),
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub struct Server {
    tcp: TcpListener,
    ws: Option<TcpListener>,
    broker: Broker,
    log: Option<RevisionLog>,
}

impl Server {
    /// Binds the listeners and restores documents found in the log directory.
    pub async fn bind(config: ServerConfig) -> Result<Server, ServerError> {
        let tcp = TcpListener::bind(config.listen).await?;
        let ws = match config.ws {
            Some(addr) => Some(TcpListener::bind(addr).await?),
            None => None,
        };
        let mut broker = Broker::new(config.broker);
        let log = match config.log_dir {
            Some(dir) => {
                let log = RevisionLog::open(dir)?;
                for (doc_id, revisions) in log.load_all()? {
                    info!("restoring {doc_id} ({} revisions)", revisions.len());
                    broker
                        .restore(&doc_id, revisions)
                        .map_err(|source| ServerError::Restore {
                            doc_id: doc_id.clone(),
                            source,
                        })?;
                }
                Some(log)
            }
            None => None,
        };
        Ok(Server {
            tcp,
            ws,
            broker,
            log,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.tcp.local_addr().expect("bound listener has an address")
    }

    pub fn ws_addr(&self) -> Option<SocketAddr> {
        self.ws
            .as_ref()
            .map(|l| l.local_addr().expect("bound listener has an address"))
    }

    pub fn has_document(&self, doc_id: &str) -> bool {
        self.broker.head(doc_id).is_some()
    }

    /// Opens a document before serving, writing revision 0 to the log.
    pub fn open_document(&mut self, doc_id: &str, text: &str) -> Result<(), ServerError> {
        let rev = self
            .broker
            .open_document(doc_id, text, now_ms())
            .map_err(|source| ServerError::Restore {
                doc_id: doc_id.to_owned(),
                source,
            })?;
        if let Some(log) = &mut self.log {
            log.append(doc_id, &rev)?;
        }
        Ok(())
    }

    /// Serves until the process ends.
    pub async fn run(self) -> Result<(), ServerError> {
        let Server {
            tcp,
            ws,
            mut broker,
            mut log,
        } = self;
        let (tx, mut rx) = unbounded_channel::<Command>();
        let ids = Arc::new(AtomicU64::new(1));

        tokio::spawn(accept_loop(tcp, tx.clone(), ids.clone(), false));
        if let Some(ws) = ws {
            tokio::spawn(accept_loop(ws, tx.clone(), ids, true));
        }
        drop(tx);

        let mut writers: HashMap<PeerId, UnboundedSender<String>> = HashMap::new();
        loop {
            let wait = broker
                .next_deadline()
                .map(|d| Duration::from_millis(d.saturating_sub(now_ms())));
            let fx = tokio::select! {
                cmd = rx.recv() => match cmd {
                    Some(Command::Connect(peer, w)) => {
                        writers.insert(peer, w);
                        continue;
                    }
                    Some(Command::Incoming(peer, msg)) => {
                        debug!("peer {peer} -> {}", msg.kind());
                        broker.handle(peer, msg, now_ms())
                    }
                    Some(Command::Closed(peer)) => {
                        writers.remove(&peer);
                        broker.disconnect(peer)
                    }
                    None => return Ok(()),
                },
                _ = tokio::time::sleep(wait.unwrap_or_default()), if wait.is_some() => broker.tick(now_ms()),
            };
            deliver(fx, &writers, &mut log);
        }
    }
}

fn deliver(fx: Effects, writers: &HashMap<PeerId, UnboundedSender<String>>, log: &mut Option<RevisionLog>) {
    if let Some(log) = log {
        for (doc_id, rev) in &fx.commits {
            if let Err(e) = log.append(doc_id, rev) {
                warn!("cannot log revision {} of {doc_id}: {e}", rev.rev);
            }
        }
    }
    for (peer, msg) in fx.sends {
        if let Some(w) = writers.get(&peer) {
            let _ = w.send(encode(&msg));
        }
    }
}

async fn accept_loop(
    listener: TcpListener,
    tx: UnboundedSender<Command>,
    ids: Arc<AtomicU64>,
    websocket: bool,
) {
    loop {
        let (stream, addr) = match listener.accept().await {
            Ok(conn) => conn,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let _ = stream.set_nodelay(true);
        let peer = ids.fetch_add(1, Ordering::Relaxed);
        debug!("peer {peer} connected from {addr}");
        let tx = tx.clone();
        if websocket {
            tokio::spawn(serve_ws(stream, peer, tx));
        } else {
            tokio::spawn(serve_tcp(stream, peer, tx));
        }
    }
}

fn bad_message(detail: String) -> String {
    encode(&Message::Error {
        doc_id: String::new(),
        code: ErrorCode::BadMessage,
        detail,
        correlation_id: None,
    })
}

fn forward_line(line: &[u8], peer: PeerId, tx: &UnboundedSender<Command>, out: &UnboundedSender<String>) {
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    if line.iter().all(u8::is_ascii_whitespace) {
        return;
    }
    match decode(line) {
        Ok(msg) => {
            let _ = tx.send(Command::Incoming(peer, msg));
        }
        Err(e) => {
            let _ = out.send(bad_message(e.to_string()));
        }
    }
}

async fn serve_tcp(stream: TcpStream, peer: PeerId, tx: UnboundedSender<Command>) {
    let (rd, mut wr) = stream.into_split();
    let (out, mut out_rx): (UnboundedSender<String>, UnboundedReceiver<String>) = unbounded_channel();
    let _ = tx.send(Command::Connect(peer, out.clone()));
    tokio::spawn(async move {
        while let Some(mut line) = out_rx.recv().await {
            line.push('\n');
            if wr.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut reader = BufReader::new(rd);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        match reader.read_until(b'\n', &mut buf).await {
            Ok(0) | Err(_) => break,
            Ok(_) => {
                let line = buf.strip_suffix(b"\n").unwrap_or(&buf);
                forward_line(line, peer, &tx, &out);
            }
        }
    }
    let _ = tx.send(Command::Closed(peer));
}

async fn serve_ws(stream: TcpStream, peer: PeerId, tx: UnboundedSender<Command>) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            warn!("websocket handshake with peer {peer} failed: {e}");
            return;
        }
    };
    let (mut sink, mut frames) = ws.split();
    let (out, mut out_rx) = unbounded_channel::<String>();
    let _ = tx.send(Command::Connect(peer, out.clone()));
    tokio::spawn(async move {
        while let Some(line) = out_rx.recv().await {
            if sink.send(WsMessage::Text(line)).await.is_err() {
                break;
            }
        }
    });
    while let Some(frame) = frames.next().await {
        let data = match frame {
            Ok(WsMessage::Text(t)) => t.into_bytes(),
            Ok(WsMessage::Binary(b)) => b,
            Ok(WsMessage::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        for line in data.split(|&b| b == b'\n') {
            forward_line(line, peer, &tx, &out);
        }
    }
    let _ = tx.send(Command::Closed(peer));
}
