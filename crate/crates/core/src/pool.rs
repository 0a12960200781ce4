//! Append-only attribute pools.

use std::collections::HashMap;
use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Index of an attribute inside an [`AttributePool`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttrId(pub u32);

impl AttrId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A `(key, value)` pair. An empty value means "remove this key" when the
/// attribute is applied to existing characters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Attribute {
    pub key: String,
    pub value: String,
}

impl Attribute {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Attribute {
            key: key.into(),
            value: value.into(),
        }
    }

    pub fn is_removal(&self) -> bool {
        self.value.is_empty()
    }
}

impl Serialize for Attribute {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(2)?;
        tup.serialize_element(&self.key)?;
        tup.serialize_element(&self.value)?;
        tup.end()
    }
}

impl<'de> Deserialize<'de> for Attribute {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PairVisitor;

        impl<'de> Visitor<'de> for PairVisitor {
            type Value = Attribute;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a [key, value] pair")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Attribute, A::Error> {
                let key: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let value: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Attribute { key, value })
            }
        }

        deserializer.deserialize_tuple(2, PairVisitor)
    }
}

/// Read access to a numbered set of attributes.
///
/// Implemented by [`AttributePool`] and by [`PoolView`], which layers the
/// `newPool` entries of one or more changesets over a base pool without
/// copying it.
pub trait AttrLookup {
    fn len(&self) -> usize;
    fn get(&self, id: AttrId) -> Option<&Attribute>;
    fn find(&self, key: &str, value: &str) -> Option<AttrId>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense, append-only table of attributes. Entry `i` has id `i` and every
/// `(key, value)` pair occurs at most once.
#[derive(Clone, Debug, Default)]
pub struct AttributePool {
    entries: Vec<Attribute>,
    index: HashMap<Attribute, AttrId>,
}

impl PartialEq for AttributePool {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for AttributePool {}

impl AttributePool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a pool from pairs, rejecting duplicates.
    pub fn from_entries<I>(entries: I) -> Result<Self, Attribute>
    where
        I: IntoIterator<Item = Attribute>,
    {
        let mut pool = AttributePool::new();
        for attr in entries {
            if pool.index.contains_key(&attr) {
                return Err(attr);
            }
            pool.push_unchecked(attr);
        }
        Ok(pool)
    }

    /// Returns the id of `(key, value)`, appending it if absent.
    pub fn intern(&mut self, key: &str, value: &str) -> AttrId {
        if let Some(id) = self.find(key, value) {
            return id;
        }
        self.push_unchecked(Attribute::new(key, value))
    }

    fn push_unchecked(&mut self, attr: Attribute) -> AttrId {
        let id = AttrId(self.entries.len() as u32);
        self.index.insert(attr.clone(), id);
        self.entries.push(attr);
        id
    }

    /// Appends the `newPool` entries of a changeset. Entries already present
    /// are skipped; validated changesets never carry those.
    pub fn extend_new(&mut self, new_entries: &[Attribute]) {
        for attr in new_entries {
            if !self.index.contains_key(attr) {
                self.push_unchecked(attr.clone());
            }
        }
    }

    pub fn entries(&self) -> &[Attribute] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (AttrId, &Attribute)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, a)| (AttrId(i as u32), a))
    }

    /// The pool as it was when it held `len` entries.
    pub fn prefix(&self, len: usize) -> AttributePool {
        let mut pool = AttributePool::new();
        for attr in &self.entries[..len.min(self.entries.len())] {
            pool.push_unchecked(attr.clone());
        }
        pool
    }

    /// The first `len` entries, without copying them.
    pub fn prefix_view(&self, len: usize) -> PoolPrefix<'_> {
        PoolPrefix {
            pool: self,
            len: len.min(self.entries.len()),
        }
    }

    /// Is `self` an append-only extension of `other`?
    pub fn extends(&self, other: &AttributePool) -> bool {
        self.entries.len() >= other.entries.len()
            && self.entries[..other.entries.len()] == other.entries[..]
    }
}

impl AttrLookup for AttributePool {
    fn len(&self) -> usize {
        self.entries.len()
    }

    fn get(&self, id: AttrId) -> Option<&Attribute> {
        self.entries.get(id.index())
    }

    fn find(&self, key: &str, value: &str) -> Option<AttrId> {
        // Avoids allocating a probe `Attribute` for the common miss on short pools.
        if self.entries.len() < 16 {
            return self
                .entries
                .iter()
                .position(|a| a.key == key && a.value == value)
                .map(|i| AttrId(i as u32));
        }
        self.index.get(&Attribute::new(key, value)).copied()
    }
}

impl Serialize for AttributePool {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AttributePool {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<Attribute>::deserialize(deserializer)?;
        AttributePool::from_entries(entries).map_err(|dup| {
            de::Error::custom(format!(
                "duplicate pool entry [{:?}, {:?}]",
                dup.key, dup.value
            ))
        })
    }
}

/// The pool as it was when it held `len` entries; see [`AttributePool::prefix_view`].
#[derive(Clone, Copy, Debug)]
pub struct PoolPrefix<'a> {
    pool: &'a AttributePool,
    len: usize,
}

impl AttrLookup for PoolPrefix<'_> {
    fn len(&self) -> usize {
        self.len
    }

    fn get(&self, id: AttrId) -> Option<&Attribute> {
        self.pool.entries[..self.len].get(id.index())
    }

    fn find(&self, key: &str, value: &str) -> Option<AttrId> {
        self.pool.find(key, value).filter(|id| id.index() < self.len)
    }
}

/// A base pool followed by extra entries, numbered after the base.
#[derive(Debug)]
pub struct PoolView<'a, P: ?Sized = AttributePool> {
    base: &'a P,
    extra: Vec<&'a Attribute>,
}

impl<'a, P: AttrLookup + ?Sized> PoolView<'a, P> {
    pub fn new(base: &'a P) -> Self {
        PoolView {
            base,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, entries: &'a [Attribute]) -> Self {
        self.extra.extend(entries.iter());
        self
    }
}

impl<P: AttrLookup + ?Sized> AttrLookup for PoolView<'_, P> {
    fn len(&self) -> usize {
        self.base.len() + self.extra.len()
    }

    fn get(&self, id: AttrId) -> Option<&Attribute> {
        let i = id.index();
        let n = self.base.len();
        if i < n {
            self.base.get(id)
        } else {
            self.extra.get(i - n).copied()
        }
    }

    fn find(&self, key: &str, value: &str) -> Option<AttrId> {
        self.base.find(key, value).or_else(|| {
            self.extra
                .iter()
                .position(|a| a.key == key && a.value == value)
                .map(|i| AttrId((self.base.len() + i) as u32))
        })
    }
}
