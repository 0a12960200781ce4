//! Edit scripts for the headless client: one command per line, `#` comments.
//!
//! ```text
//! insert 0 "Hello"
//! attr 0 5 bold true
//! wait 100
//! event autocomplete.stex sync pos=3
//! choose 0
//! expectText "Hello"
//! ```

use std::collections::BTreeMap;
use std::time::Duration;

use redsys_core::wire::{EventItem, EventMessage};
use redsys_sdk::{EditorClient, SdkError};
use thiserror::Error;

const SETTLE: Duration = Duration::from_secs(5);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Insert { pos: usize, text: String },
    Delete { pos: usize, len: usize },
    Attr { pos: usize, len: usize, key: String, value: String },
    Wait(u64),
    /// Until every local edit is acknowledged.
    Idle,
    ExpectText(String),
    /// An empty value expects the key to be absent.
    ExpectAttr { pos: usize, key: String, value: String },
    Event { uri: String, sync: bool, params: BTreeMap<String, String> },
    /// Applies the action of item `n` of the last event response.
    Choose(usize),
    ExpectItems(Vec<String>),
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expectation failed: {message}")]
    Expectation { line: usize, message: String },
    #[error("line {line}: {source}")]
    Client { line: usize, source: SdkError },
}

/// Splits a line into words; double-quoted words use JSON string escapes.
fn words(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut rest = line.trim_start();
    while !rest.is_empty() {
        if rest.starts_with('"') {
            let mut end = None;
            let mut escaped = false;
            for (i, c) in rest.char_indices().skip(1) {
                match c {
                    _ if escaped => escaped = false,
                    '\\' => escaped = true,
                    '"' => {
                        end = Some(i);
                        break;
                    }
                    _ => {}
                }
            }
            let end = end.ok_or("unterminated string")?;
            let s: String = serde_json::from_str(&rest[..=end]).map_err(|e| e.to_string())?;
            out.push(s);
            rest = rest[end + 1..].trim_start();
        } else {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            out.push(rest[..end].to_owned());
            rest = rest[end..].trim_start();
        }
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(w: &str) -> Result<T, String> {
    w.parse().map_err(|_| format!("expected a number, found {w:?}"))
}

fn parse_line(w: &[String]) -> Result<Command, String> {
    let arity = |n: usize| {
        if w.len() == n + 1 {
            Ok(())
        } else {
            Err(format!("{} takes {n} arguments", w[0]))
        }
    };
    Ok(match w[0].as_str() {
        "insert" => {
            arity(2)?;
            Command::Insert { pos: number(&w[1])?, text: w[2].clone() }
        }
        "delete" => {
            arity(2)?;
            Command::Delete { pos: number(&w[1])?, len: number(&w[2])? }
        }
        "attr" => {
            arity(4)?;
            Command::Attr {
                pos: number(&w[1])?,
                len: number(&w[2])?,
                key: w[3].clone(),
                value: w[4].clone(),
            }
        }
        "wait" => {
            arity(1)?;
            Command::Wait(number(&w[1])?)
        }
        "idle" => {
            arity(0)?;
            Command::Idle
        }
        "expectText" => {
            arity(1)?;
            Command::ExpectText(w[1].clone())
        }
        "expectAttr" => {
            arity(3)?;
            Command::ExpectAttr { pos: number(&w[1])?, key: w[2].clone(), value: w[3].clone() }
        }
        "event" => {
            if w.len() < 3 {
                return Err("event takes a uri, sync|async and key=value params".into());
            }
            let sync = match w[2].as_str() {
                "sync" => true,
                "async" => false,
                m => return Err(format!("unknown event mode {m:?}")),
            };
            let mut params = BTreeMap::new();
            for p in &w[3..] {
                let (k, v) = p.split_once('=').ok_or_else(|| format!("expected key=value, found {p:?}"))?;
                params.insert(k.to_owned(), v.to_owned());
            }
            Command::Event { uri: w[1].clone(), sync, params }
        }
        "choose" => {
            arity(1)?;
            Command::Choose(number(&w[1])?)
        }
        "expectItems" => Command::ExpectItems(w[1..].to_vec()),
        other => return Err(format!("unknown command {other:?}")),
    })
}

/// Parses a script into `(line number, command)` pairs.
pub fn parse(text: &str) -> Result<Vec<(usize, Command)>, ScriptError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let w = words(trimmed).map_err(|message| ScriptError::Parse { line: line_no, message })?;
        let cmd = parse_line(&w).map_err(|message| ScriptError::Parse { line: line_no, message })?;
        out.push((line_no, cmd));
    }
    Ok(out)
}

/// Runs `script` on `client`, writing event responses to `out`.
pub fn run(
    client: &mut EditorClient,
    script: &[(usize, Command)],
    out: &mut dyn std::io::Write,
) -> Result<(), ScriptError> {
    let mut last_items: Vec<EventItem> = Vec::new();
    for (line, cmd) in script {
        let line = *line;
        let client_err = |source| ScriptError::Client { line, source };
        let failed = |message: String| ScriptError::Expectation { line, message };
        match cmd {
            Command::Insert { pos, text } => client.insert(*pos, text).map_err(client_err)?,
            Command::Delete { pos, len } => client.delete(*pos, *len).map_err(client_err)?,
            Command::Attr { pos, len, key, value } => {
                client.set_attr(*pos..pos + len, key, value).map_err(client_err)?
            }
            Command::Wait(ms) => client.pump(Duration::from_millis(*ms)).map_err(client_err)?,
            Command::Idle => client.wait_idle(SETTLE).map_err(client_err)?,
            Command::ExpectText(want) => {
                client.wait_idle(SETTLE).map_err(client_err)?;
                let got = client.doc().text();
                if &got != want {
                    return Err(failed(format!("text is {got:?}, expected {want:?}")));
                }
            }
            Command::ExpectAttr { pos, key, value } => {
                client.wait_idle(SETTLE).map_err(client_err)?;
                let doc = client.doc();
                if *pos >= doc.len() {
                    return Err(failed(format!("position {pos} is past the end ({})", doc.len())));
                }
                let got = doc.attr_value(*pos, key).unwrap_or("");
                if got != value {
                    return Err(failed(format!("{key} at {pos} is {got:?}, expected {value:?}")));
                }
            }
            Command::Event { uri, sync, params } => {
                if *sync {
                    let mut ev = EventMessage::sync(uri.clone(), "");
                    ev.params = params.clone();
                    last_items = client.event(ev, SETTLE).map_err(client_err)?;
                    for item in &last_items {
                        let _ = writeln!(out, "item {}", item.label);
                    }
                } else {
                    let mut ev = EventMessage::asynchronous(uri.clone());
                    ev.params = params.clone();
                    client.notify(ev).map_err(client_err)?;
                }
            }
            Command::Choose(n) => {
                let action = last_items
                    .get(*n)
                    .and_then(|i| i.action.clone())
                    .ok_or_else(|| failed(format!("no item {n} with an action")))?;
                client.choose(&action).map_err(client_err)?;
            }
            Command::ExpectItems(want) => {
                let got: Vec<&str> = last_items.iter().map(|i| i.label.as_str()).collect();
                if got != *want {
                    return Err(failed(format!("items are {got:?}, expected {want:?}")));
                }
            }
        }
    }
    Ok(())
}
