//! Changesets: `(baseLen, newLen, newPool, ops)`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::attrs::{duplicate_key, AttrSet};
use crate::error::ChangesetError;
use crate::pool::{AttrLookup, Attribute, PoolView};

/// Kind of a [`ChangeOp`], with its wire symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Insert,
    Delete,
    Keep,
}

impl OpKind {
    pub fn symbol(self) -> &'static str {
        match self {
            OpKind::Insert => "+",
            OpKind::Delete => "-",
            OpKind::Keep => "=",
        }
    }
}

/// One primitive of a changeset. Lengths count Unicode scalar values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ChangeOp {
    /// Inserts `text`, giving every inserted character `attrs`.
    Insert { text: String, attrs: AttrSet },
    /// Removes characters together with their attributes.
    Delete(usize),
    /// Leaves characters in place; a non-empty `attrs` is applied to each.
    Keep { len: usize, attrs: AttrSet },
}

impl ChangeOp {
    pub fn insert(text: impl Into<String>, attrs: AttrSet) -> Self {
        ChangeOp::Insert {
            text: text.into(),
            attrs,
        }
    }

    pub fn keep(len: usize, attrs: AttrSet) -> Self {
        ChangeOp::Keep { len, attrs }
    }

    pub fn kind(&self) -> OpKind {
        match self {
            ChangeOp::Insert { .. } => OpKind::Insert,
            ChangeOp::Delete(_) => OpKind::Delete,
            ChangeOp::Keep { .. } => OpKind::Keep,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ChangeOp::Insert { text, .. } => text.chars().count(),
            ChangeOp::Delete(n) => *n,
            ChangeOp::Keep { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            ChangeOp::Insert { text, .. } => text.is_empty(),
            ChangeOp::Delete(n) => *n == 0,
            ChangeOp::Keep { len, .. } => *len == 0,
        }
    }

    pub fn attrs(&self) -> Option<&AttrSet> {
        match self {
            ChangeOp::Insert { attrs, .. } | ChangeOp::Keep { attrs, .. } => Some(attrs),
            ChangeOp::Delete(_) => None,
        }
    }

    /// A keep that changes nothing.
    pub fn is_plain_keep(&self) -> bool {
        matches!(self, ChangeOp::Keep { attrs, .. } if attrs.is_empty())
    }

    fn mergeable_with(&self, next: &ChangeOp) -> bool {
        match (self, next) {
            (ChangeOp::Insert { attrs: a, .. }, ChangeOp::Insert { attrs: b, .. }) => a == b,
            (ChangeOp::Delete(_), ChangeOp::Delete(_)) => true,
            (ChangeOp::Keep { attrs: a, .. }, ChangeOp::Keep { attrs: b, .. }) => a == b,
            _ => false,
        }
    }
}

/// Accumulates ops, coalescing neighbours with equal type and attributes.
#[derive(Debug, Default)]
pub(crate) struct OpAssembler {
    ops: Vec<ChangeOp>,
}

impl OpAssembler {
    pub fn push(&mut self, op: ChangeOp) {
        if op.is_empty() {
            return;
        }
        if let Some(last) = self.ops.last_mut() {
            if last.mergeable_with(&op) {
                match (last, op) {
                    (ChangeOp::Insert { text, .. }, ChangeOp::Insert { text: more, .. }) => {
                        text.push_str(&more)
                    }
                    (ChangeOp::Delete(n), ChangeOp::Delete(m)) => *n += m,
                    (ChangeOp::Keep { len, .. }, ChangeOp::Keep { len: m, .. }) => *len += m,
                    _ => unreachable!("mergeable ops share a kind"),
                }
                return;
            }
        }
        self.ops.push(op);
    }

    pub fn finish(mut self) -> Vec<ChangeOp> {
        while self.ops.last().is_some_and(ChangeOp::is_plain_keep) {
            self.ops.pop();
        }
        self.ops
    }
}

/// A description of one edit to a document of length `base_len`.
///
/// Characters past the last consumed position are implicitly kept. Ids in op
/// attribute sets refer to the target document's pool, with `new_pool`
/// entries numbered directly after it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Changeset {
    base_len: usize,
    new_len: usize,
    new_pool: Vec<Attribute>,
    ops: Vec<ChangeOp>,
}

impl Changeset {
    /// Assembles a changeset without checking anything; see [`Changeset::validate`].
    pub fn from_parts(
        base_len: usize,
        new_len: usize,
        new_pool: Vec<Attribute>,
        ops: Vec<ChangeOp>,
    ) -> Self {
        Changeset {
            base_len,
            new_len,
            new_pool,
            ops,
        }
    }

    /// The changeset that leaves a document of length `len` untouched.
    pub fn identity(len: usize) -> Self {
        Changeset::from_parts(len, len, Vec::new(), Vec::new())
    }

    /// Inserts `text` into an empty document.
    pub fn insertion(text: &str) -> Self {
        let len = text.chars().count();
        let mut asm = OpAssembler::default();
        asm.push(ChangeOp::insert(text, AttrSet::new()));
        Changeset::from_parts(0, len, Vec::new(), asm.finish())
    }

    pub fn base_len(&self) -> usize {
        self.base_len
    }

    pub fn new_len(&self) -> usize {
        self.new_len
    }

    pub fn new_pool(&self) -> &[Attribute] {
        &self.new_pool
    }

    pub fn ops(&self) -> &[ChangeOp] {
        &self.ops
    }

    /// No op changes anything.
    pub fn is_identity(&self) -> bool {
        self.base_len == self.new_len && self.ops.iter().all(ChangeOp::is_plain_keep)
    }

    /// Only keeps: the text is preserved and at most attributes change.
    pub fn is_attribute_only(&self) -> bool {
        self.ops
            .iter()
            .all(|op| matches!(op, ChangeOp::Keep { .. }))
    }

    /// The same edit in canonical form.
    pub fn canonicalize(&self) -> Changeset {
        let mut asm = OpAssembler::default();
        for op in &self.ops {
            asm.push(op.clone());
        }
        Changeset {
            ops: asm.finish(),
            ..self.clone()
        }
    }

    /// Checks every changeset invariant against the pool of the document the
    /// changeset will be applied to.
    pub fn validate<P: AttrLookup + ?Sized>(&self, pool: &P) -> Result<(), ChangesetError> {
        let mut consumed = 0usize;
        let mut deleted = 0usize;
        let mut inserted = 0usize;
        for (index, op) in self.ops.iter().enumerate() {
            let len = op.len();
            if len == 0 {
                return Err(ChangesetError::EmptyOp { index });
            }
            match op {
                ChangeOp::Insert { .. } => inserted += len,
                ChangeOp::Delete(_) => {
                    consumed += len;
                    deleted += len;
                }
                ChangeOp::Keep { .. } => consumed += len,
            }
            if index > 0 && self.ops[index - 1].mergeable_with(op) {
                return Err(ChangesetError::NonCanonical { index: index - 1 });
            }
        }
        if consumed > self.base_len {
            return Err(ChangesetError::length(format!(
                "ops consume {consumed} characters of a {}-character base",
                self.base_len
            )));
        }
        if self.base_len - deleted + inserted != self.new_len {
            return Err(ChangesetError::length(format!(
                "newLen {} but base {} - {deleted} deleted + {inserted} inserted = {}",
                self.new_len,
                self.base_len,
                self.base_len - deleted + inserted
            )));
        }
        for (i, attr) in self.new_pool.iter().enumerate() {
            let dup_in_pool = pool.find(&attr.key, &attr.value).is_some();
            let dup_in_new = self.new_pool[..i].contains(attr);
            if dup_in_pool || dup_in_new {
                return Err(ChangesetError::DuplicatePoolEntry {
                    key: attr.key.clone(),
                    value: attr.value.clone(),
                });
            }
        }
        let view = PoolView::new(pool).with(&self.new_pool);
        for (index, op) in self.ops.iter().enumerate() {
            if let Some(attrs) = op.attrs() {
                for id in attrs.iter() {
                    if view.get(id).is_none() {
                        return Err(ChangesetError::BadAttributeId { id });
                    }
                }
                if let Some(key) = duplicate_key(attrs, &view)? {
                    return Err(ChangesetError::DuplicateKeyInOpAttrs {
                        index,
                        key: key.to_owned(),
                    });
                }
            }
        }
        Ok(())
    }
}

// Wire form: {"op":"+","len":2,"attrs":[],"text":"KM"}

#[derive(Serialize, Deserialize)]
struct WireOp {
    op: String,
    len: usize,
    #[serde(default)]
    attrs: AttrSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

impl Serialize for ChangeOp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = match self {
            ChangeOp::Insert { text, attrs } => WireOp {
                op: "+".into(),
                len: text.chars().count(),
                attrs: attrs.clone(),
                text: Some(text.clone()),
            },
            ChangeOp::Delete(n) => WireOp {
                op: "-".into(),
                len: *n,
                attrs: AttrSet::new(),
                text: None,
            },
            ChangeOp::Keep { len, attrs } => WireOp {
                op: "=".into(),
                len: *len,
                attrs: attrs.clone(),
                text: None,
            },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChangeOp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let w = WireOp::deserialize(deserializer)?;
        match w.op.as_str() {
            "+" => {
                let text = w.text.ok_or_else(|| D::Error::custom("insert op without text"))?;
                let count = text.chars().count();
                if count != w.len {
                    return Err(D::Error::custom(format!(
                        "insert len {} but text has {count} characters",
                        w.len
                    )));
                }
                Ok(ChangeOp::Insert {
                    text,
                    attrs: w.attrs,
                })
            }
            "-" => {
                if !w.attrs.is_empty() || w.text.as_deref().is_some_and(|t| !t.is_empty()) {
                    return Err(D::Error::custom("delete op must carry no text and no attributes"));
                }
                Ok(ChangeOp::Delete(w.len))
            }
            "=" => {
                if w.text.as_deref().is_some_and(|t| !t.is_empty()) {
                    return Err(D::Error::custom("keep op must carry no text"));
                }
                Ok(ChangeOp::Keep {
                    len: w.len,
                    attrs: w.attrs,
                })
            }
            other => Err(D::Error::custom(format!("unknown op {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct WireChangeset {
    base_len: usize,
    new_len: usize,
    new_pool: Vec<Attribute>,
    ops: Vec<ChangeOp>,
}

impl Serialize for Changeset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Changeset", 4)?;
        s.serialize_field("baseLen", &self.base_len)?;
        s.serialize_field("newLen", &self.new_len)?;
        s.serialize_field("newPool", &self.new_pool)?;
        s.serialize_field("ops", &self.ops)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Changeset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = WireChangeset::deserialize(deserializer)?;
        Ok(Changeset::from_parts(w.base_len, w.new_len, w.new_pool, w.ops))
    }
}
