//! The example services: syntax highlighting, term spotting, `\termref`
//! folding, transclusion and command completion.

pub mod autocomplete;
pub mod dict;
mod error;
pub mod fold;
pub mod highlighter;
pub mod lexer;
mod reactive;
pub mod render;
pub mod spotter;
pub mod stex;

pub use autocomplete::Autocomplete;
pub use dict::{Dictionary, TermDictionaryEntry};
pub use error::DictLoadError;
pub use fold::{Hider, Transclusion};
pub use highlighter::Highlighter;
pub use reactive::{Layer, Reactive};
pub use render::render;
pub use spotter::{Spotter, SpotterOptions};
