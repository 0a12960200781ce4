//! `redsys`: run the broker and services, drive a scripted editor, inspect
//! documents.

mod script;

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use redsys_broker::log::{read_log, replay, RevisionLog};
use redsys_broker::{BrokerConfig, Server, ServerConfig};
use redsys_sdk::{EditorClient, EditorState, Service, ServiceConfig, Transcript};
use redsys_services::{
    Autocomplete, Dictionary, Highlighter, Hider, Reactive, Spotter, SpotterOptions, Transclusion,
};

#[derive(Parser)]
#[command(name = "redsys", version, about = "Real-time document sync and service broker")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the broker.
    Broker {
        #[arg(long, default_value = "127.0.0.1:7070")]
        listen: SocketAddr,
        /// Also accept WebSocket connections here.
        #[arg(long)]
        ws: Option<SocketAddr>,
        /// Persist revisions as `<dir>/<docId>.log` and restore them on start.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Open a document from a file, `id=path`; repeatable.
        #[arg(long = "doc", value_parser = parse_doc)]
        docs: Vec<(String, PathBuf)>,
        #[arg(long, default_value_t = redsys_broker::DEFAULT_SYNC_TIMEOUT_MS)]
        sync_timeout_ms: u64,
        /// Revisions kept in memory per document.
        #[arg(long)]
        history: Option<usize>,
    },
    /// Run one of the bundled services.
    Service {
        kind: ServiceKind,
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        client_id: Option<String>,
        /// Term dictionary (`surface<TAB>cd<TAB>name` lines) for the spotter.
        #[arg(long)]
        dict: Option<PathBuf>,
        /// Simulated processing time of the spotter, in milliseconds.
        #[arg(long, default_value_t = 0)]
        latency: u64,
        /// Let the spotter submit results even after an overlapping edit.
        #[arg(long)]
        no_cancel: bool,
        /// Log every wire message to this file.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run an edit script as a headless editor.
    Client {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value = "client")]
        client_id: String,
        /// Create the document empty if it does not exist.
        #[arg(long)]
        create: bool,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Print a document's current text.
    Dump {
        #[command(flatten)]
        target: Target,
        /// Mark attributed runs as `[key=value|...]text[/]`.
        #[arg(long)]
        attrs: bool,
    },
    /// Rebuild a document from its revision log.
    Replay {
        #[arg(long)]
        log_dir: PathBuf,
        #[arg(long)]
        doc: String,
        #[arg(long)]
        attrs: bool,
    },
}

#[derive(clap::Args)]
struct Target {
    #[arg(long, env = "REDSYS_ADDR", default_value = "127.0.0.1:7070")]
    connect: SocketAddr,
    #[arg(long)]
    doc: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ServiceKind {
    Highlighter,
    Spotter,
    Hider,
    Transclusion,
    Autocomplete,
}

fn parse_doc(s: &str) -> Result<(String, PathBuf), String> {
    let (id, path) = s.split_once('=').ok_or("expected id=path")?;
    Ok((id.to_owned(), PathBuf::from(path)))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn run(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Broker {
            listen,
            ws,
            log_dir,
            docs,
            sync_timeout_ms,
            history,
        } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let mut config = ServerConfig::new(listen);
                config.ws = ws;
                config.log_dir = log_dir;
                config.broker = BrokerConfig {
                    sync_timeout_ms,
                    history_limit: history,
                };
                let mut server = Server::bind(config).await?;
                for (id, path) in docs {
                    if server.has_document(&id) {
                        log::info!("{id} restored from the log; ignoring {}", path.display());
                        continue;
                    }
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    server.open_document(&id, &text)?;
                }
                say(&format!("listening {}", server.local_addr()));
                if let Some(ws) = server.ws_addr() {
                    say(&format!("ws {ws}"));
                }
                say("ready");
                server.run().await?;
                Ok(ExitCode::SUCCESS)
            })
        }
        Cmd::Service {
            kind,
            target,
            client_id,
            dict,
            latency,
            no_cancel,
            transcript,
        } => {
            let name = match kind {
                ServiceKind::Highlighter => "highlighter",
                ServiceKind::Spotter => "spotter",
                ServiceKind::Hider => "hider",
                ServiceKind::Transclusion => "transclusion",
                ServiceKind::Autocomplete => "autocomplete",
            };
            let mut config = ServiceConfig::new(target.connect, &target.doc, client_id.as_deref().unwrap_or(name));
            if let Some(path) = transcript {
                config = config.transcript(Transcript::create(&path)?);
            }
            match kind {
                ServiceKind::Highlighter => serve(config, Reactive::new(Highlighter)),
                ServiceKind::Hider => serve(config, Reactive::new(Hider)),
                ServiceKind::Transclusion => serve(config, Reactive::new(Transclusion)),
                ServiceKind::Autocomplete => serve(config.subscribe(redsys_services::autocomplete::URI), Autocomplete),
                ServiceKind::Spotter => {
                    let dict = match dict {
                        Some(path) => Dictionary::load(&path)?,
                        None => Dictionary::new(),
                    };
                    let options = SpotterOptions {
                        latency: Duration::from_millis(latency),
                        ignore_cancellation: no_cancel,
                    };
                    serve(
                        config.subscribe(redsys_services::spotter::MENU_PREFIX),
                        Spotter::new(dict, options),
                    )
                }
            }
        }
        Cmd::Client {
            target,
            script,
            client_id,
            create,
            transcript,
        } => {
            let text = std::fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let commands = script::parse(&text)?;
            let transcript = transcript.map(|p| Transcript::create(&p)).transpose()?;
            let mut state = EditorState::new(&target.doc, &client_id);
            if create {
                state = state.creating();
            }
            let mut client = EditorClient::connect_with(target.connect, state, transcript)?;
            match script::run(&mut client, &commands, &mut std::io::stdout()) {
                Ok(()) => {
                    client.wait_idle(Duration::from_secs(5))?;
                    say("ok");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ script::ScriptError::Expectation { .. }) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Dump { target, attrs } => {
            let client = EditorClient::connect(target.connect, &target.doc, "dump")?;
            let doc = client.state().committed().expect("connected clients are initialized");
            print_doc(doc, attrs);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Replay { log_dir, doc, attrs } => {
            let path = RevisionLog::path_for(&log_dir, &doc);
            if !path.exists() {
                bail!("no log for {doc} in {}", log_dir.display());
            }
            let revisions = read_log(&path)?;
            let document = replay(&revisions)?;
            print_doc(&document, attrs);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_doc(doc: &redsys_core::Document, attrs: bool) {
    let mut out = std::io::stdout().lock();
    let _ = if attrs {
        write!(out, "{doc}")
    } else {
        write!(out, "{}", doc.text())
    };
    let _ = out.flush();
}

fn serve<S: Service>(config: ServiceConfig, service: S) -> Result<ExitCode> {
    let running = redsys_sdk::spawn_service(config, service)?;
    say("ready");
    running.join()?;
    Ok(ExitCode::SUCCESS)
}

