//! Attributed text documents, changesets and the wire protocol shared by the
//! broker, services and editors.
//!
//! A [`Document`] is text plus one attribute set per character. Every edit is
//! a [`Changeset`]; changesets are validated against a pool, applied,
//! composed into one, and transformed against concurrent changesets with
//! [`follow`].

mod algebra;
mod attrs;
mod builder;
mod changeset;
mod document;
mod error;
mod pool;
mod sweep;
pub mod wire;

pub use algebra::{compose, follow, overlaps, ranges_intersect, remap_pool, touched_ranges};
pub use attrs::{apply_attrs, AttrSet};
pub use builder::ChangesetBuilder;
pub use changeset::{ChangeOp, Changeset, OpKind};
pub use document::Document;
pub use error::ChangesetError;
pub use pool::{AttrId, AttrLookup, Attribute, AttributePool, PoolPrefix, PoolView};
pub use sweep::{diff_layer, diff_layer_at, ranges_to_ops, AttributeRangeRule};
