//! Left-to-right changeset construction.

use crate::attrs::AttrSet;
use crate::changeset::{ChangeOp, Changeset, OpAssembler};
use crate::error::ChangesetError;
use crate::pool::{AttrId, AttrLookup, Attribute, AttributePool};

/// Builds a canonical changeset by walking the base document from left to
/// right: keep the first 10 characters, remove the next 5, insert a string,
/// restyle the next 2, and so on.
///
/// Attribute pairs that do not exist in the base pool are interned into the
/// changeset's `newPool`. Zero-length calls are ignored.
#[derive(Debug)]
pub struct ChangesetBuilder<'p, P: AttrLookup + ?Sized = AttributePool> {
    pool: &'p P,
    base_len: usize,
    new_pool: Vec<Attribute>,
    asm: OpAssembler,
    consumed: usize,
    deleted: usize,
    inserted: usize,
}

impl<'p, P: AttrLookup + ?Sized> ChangesetBuilder<'p, P> {
    pub fn new(base_len: usize, pool: &'p P) -> Self {
        ChangesetBuilder {
            pool,
            base_len,
            new_pool: Vec::new(),
            asm: OpAssembler::default(),
            consumed: 0,
            deleted: 0,
            inserted: 0,
        }
    }

    /// Id for `(key, value)`, adding it to `newPool` when the base lacks it.
    pub fn intern(&mut self, key: &str, value: &str) -> AttrId {
        if let Some(id) = self.pool.find(key, value) {
            return id;
        }
        let base = self.pool.len();
        if let Some(i) = self
            .new_pool
            .iter()
            .position(|a| a.key == key && a.value == value)
        {
            return AttrId((base + i) as u32);
        }
        self.new_pool.push(Attribute::new(key, value));
        AttrId((base + self.new_pool.len() - 1) as u32)
    }

    fn intern_all(&mut self, attrs: &[(&str, &str)]) -> AttrSet {
        attrs.iter().map(|(k, v)| self.intern(k, v)).collect()
    }

    /// Keeps `n` characters, applying `attrs` to them (empty value removes a key).
    pub fn keep(&mut self, n: usize, attrs: &[(&str, &str)]) -> &mut Self {
        let set = self.intern_all(attrs);
        self.keep_ids(n, set)
    }

    pub fn keep_ids(&mut self, n: usize, attrs: AttrSet) -> &mut Self {
        self.consumed += n;
        self.asm.push(ChangeOp::keep(n, attrs));
        self
    }

    pub fn insert(&mut self, text: &str, attrs: &[(&str, &str)]) -> &mut Self {
        let set = self.intern_all(attrs);
        self.insert_ids(text, set)
    }

    pub fn insert_ids(&mut self, text: &str, attrs: AttrSet) -> &mut Self {
        self.inserted += text.chars().count();
        self.asm.push(ChangeOp::insert(text, attrs));
        self
    }

    pub fn remove(&mut self, n: usize) -> &mut Self {
        self.consumed += n;
        self.deleted += n;
        self.asm.push(ChangeOp::Delete(n));
        self
    }

    /// Characters of the base consumed so far.
    pub fn position(&self) -> usize {
        self.consumed
    }

    pub fn finish(self) -> Result<Changeset, ChangesetError> {
        if self.consumed > self.base_len {
            return Err(ChangesetError::length(format!(
                "builder consumed {} characters of a {}-character base",
                self.consumed, self.base_len
            )));
        }
        let new_len = self.base_len - self.deleted + self.inserted;
        let cs = Changeset::from_parts(self.base_len, new_len, self.new_pool, self.asm.finish());
        cs.validate(self.pool)?;
        Ok(cs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_calls_is_identity() {
        let pool = AttributePool::new();
        let cs = ChangesetBuilder::new(7, &pool).finish().unwrap();
        assert_eq!(cs, Changeset::identity(7));
    }

    #[test]
    fn adjacent_plain_keeps_coalesce() {
        let pool = AttributePool::new();
        let mut b = ChangesetBuilder::new(9, &pool);
        b.keep(2, &[]).keep(3, &[]).insert("x", &[]);
        let cs = b.finish().unwrap();
        assert_eq!(
            cs.ops(),
            &[ChangeOp::keep(5, AttrSet::new()), ChangeOp::insert("x", AttrSet::new())]
        );
    }

    #[test]
    fn over_consumption_fails_at_finish() {
        let pool = AttributePool::new();
        let mut b = ChangesetBuilder::new(3, &pool);
        b.keep(2, &[]).remove(2);
        assert!(matches!(b.finish(), Err(ChangesetError::LengthMismatch(_))));
    }

    #[test]
    fn new_attributes_are_interned_once() {
        let mut pool = AttributePool::new();
        pool.intern("bold", "true");
        let mut b = ChangesetBuilder::new(4, &pool);
        b.keep(1, &[("bold", "true")])
            .keep(1, &[("bold", "")])
            .keep(1, &[("bold", "")]);
        let cs = b.finish().unwrap();
        assert_eq!(cs.new_pool(), &[Attribute::new("bold", "")]);
        assert_eq!(
            cs.ops(),
            &[
                ChangeOp::keep(1, AttrSet::from_ids([AttrId(0)])),
                ChangeOp::keep(2, AttrSet::from_ids([AttrId(1)])),
            ]
        );
    }
}
