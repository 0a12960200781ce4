//! Client library for services and editors talking to a broker.
//!
//! [`ServiceSession`] and [`EditorState`] are the protocol state machines
//! without any I/O. [`spawn_service`] and [`EditorClient`] drive them over TCP.

mod client;
mod connection;
mod editor;
mod error;
mod runner;
mod session;
mod token;

pub use client::EditorClient;
pub use connection::Transcript;
pub use editor::{EditorNotice, EditorState};
pub use error::SdkError;
pub use runner::{
    run_service, spawn_service, Context, RunningService, Service, ServiceConfig, ServiceHandle,
};
pub use session::{ServiceSession, SessionEvent, SubmitResult};
pub use token::{rebase_ranges, ProcessingToken};
