//! Blocking newline-delimited JSON transport with an optional transcript.

use std::fs::File;
use std::io::{BufRead, BufReader, LineWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::mpsc::{Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;

use redsys_core::wire::{self, Message};

use crate::error::SdkError;

/// Shared log of every message sent and received, one `send <json>` or
/// `recv <json>` line each.
#[derive(Clone)]
pub struct Transcript(Arc<Mutex<Box<dyn Write + Send>>>);

impl Transcript {
    pub fn new(out: impl Write + Send + 'static) -> Self {
        Transcript(Arc::new(Mutex::new(Box::new(out))))
    }

    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(Self::new(LineWriter::new(File::create(path)?)))
    }

    fn record(&self, dir: &str, line: &str) {
        let mut out = self.0.lock().expect("transcript lock");
        let _ = writeln!(out, "{dir} {line}");
        let _ = out.flush();
    }
}

impl std::fmt::Debug for Transcript {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Transcript")
    }
}

/// Items delivered by the reader thread.
#[derive(Debug)]
pub(crate) enum Inbound {
    Message(Message),
    Garbage(String),
    Closed,
}

/// Sending half; receiving happens on a background thread.
pub(crate) struct Connection {
    writer: Mutex<TcpStream>,
    transcript: Option<Transcript>,
}

impl Connection {
    /// Connects and starts a reader thread that converts each inbound line
    /// with `wrap` and pushes it into `tx`.
    pub(crate) fn open<T: Send + 'static>(
        addr: impl ToSocketAddrs,
        transcript: Option<Transcript>,
        tx: Sender<T>,
        wrap: fn(Inbound) -> T,
    ) -> Result<Arc<Connection>, SdkError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        let conn = Arc::new(Connection {
            writer: Mutex::new(stream),
            transcript: transcript.clone(),
        });
        thread::Builder::new()
            .name("redsys-reader".into())
            .spawn(move || read_loop(reader, transcript, tx, wrap))?;
        Ok(conn)
    }

    pub(crate) fn send(&self, msg: &Message) -> Result<(), SdkError> {
        let line = wire::encode(msg);
        if let Some(t) = &self.transcript {
            t.record("send", &line);
        }
        let mut w = self.writer.lock().expect("writer lock");
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub(crate) fn send_all(&self, msgs: &[Message]) -> Result<(), SdkError> {
        msgs.iter().try_for_each(|m| self.send(m))
    }

    pub(crate) fn close(&self) {
        let w = self.writer.lock().expect("writer lock");
        let _ = w.shutdown(std::net::Shutdown::Both);
    }
}

fn read_loop<T>(
    mut reader: BufReader<TcpStream>,
    transcript: Option<Transcript>,
    tx: Sender<T>,
    wrap: fn(Inbound) -> T,
) {
    let mut line = String::new();
    loop {
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) | Err(_) => {
                let _ = tx.send(wrap(Inbound::Closed));
                return;
            }
            Ok(_) => {}
        }
        let text = line.trim_end_matches(['\n', '\r']);
        if text.is_empty() {
            continue;
        }
        if let Some(t) = &transcript {
            t.record("recv", text);
        }
        let item = match wire::decode(text.as_bytes()) {
            Ok(m) => Inbound::Message(m),
            Err(e) => Inbound::Garbage(e.to_string()),
        };
        if tx.send(wrap(item)).is_err() {
            return;
        }
    }
}

pub(crate) fn channel<T>() -> (Sender<T>, Receiver<T>) {
    std::sync::mpsc::channel()
}
