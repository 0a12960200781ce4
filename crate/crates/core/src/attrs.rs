//! Attribute sets and their per-key overwrite semantics.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::ChangesetError;
use crate::pool::{AttrId, AttrLookup};

/// A sorted, duplicate-free set of attribute ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrSet(SmallVec<[AttrId; 4]>);

impl AttrSet {
    pub fn new() -> Self {
        AttrSet(SmallVec::new())
    }

    pub fn from_ids<I: IntoIterator<Item = AttrId>>(ids: I) -> Self {
        let mut v: SmallVec<[AttrId; 4]> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        AttrSet(v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, id: AttrId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[AttrId] {
        &self.0
    }

    pub(crate) fn map_ids(&self, mut f: impl FnMut(AttrId) -> AttrId) -> AttrSet {
        AttrSet::from_ids(self.iter().map(&mut f))
    }
}

impl FromIterator<AttrId> for AttrSet {
    fn from_iter<T: IntoIterator<Item = AttrId>>(iter: T) -> Self {
        AttrSet::from_ids(iter)
    }
}

impl Serialize for AttrSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AttrSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ids = Vec::<AttrId>::deserialize(deserializer)?;
        Ok(AttrSet::from_ids(ids))
    }
}

fn key_of<'p>(pool: &'p impl AttrLookup, id: AttrId) -> Result<&'p str, ChangesetError> {
    pool.get(id)
        .map(|a| a.key.as_str())
        .ok_or(ChangesetError::BadAttributeId { id })
}

/// Applies `applied` on top of `existing`: for each key the applied id wins,
/// and keys whose resulting value is empty are dropped.
pub fn apply_attrs(
    existing: &AttrSet,
    applied: &AttrSet,
    pool: &impl AttrLookup,
) -> Result<AttrSet, ChangesetError> {
    let merged = overlay(existing, applied, pool)?;
    let mut out = SmallVec::<[AttrId; 4]>::new();
    for id in merged {
        let attr = pool.get(id).ok_or(ChangesetError::BadAttributeId { id })?;
        if !attr.is_removal() {
            out.push(id);
        }
    }
    Ok(AttrSet::from_ids(out))
}

/// Key-wise overwrite that keeps empty-valued entries. This is what two
/// consecutive keeps over the same characters amount to.
pub(crate) fn compose_keep_attrs(
    first: &AttrSet,
    second: &AttrSet,
    pool: &impl AttrLookup,
) -> Result<AttrSet, ChangesetError> {
    Ok(AttrSet::from_ids(overlay(first, second, pool)?))
}

fn overlay(
    base: &AttrSet,
    top: &AttrSet,
    pool: &impl AttrLookup,
) -> Result<SmallVec<[AttrId; 4]>, ChangesetError> {
    if top.is_empty() {
        for id in base.iter() {
            key_of(pool, id)?;
        }
        return Ok(base.0.clone());
    }
    let mut out: SmallVec<[AttrId; 4]> = SmallVec::new();
    let top_keys = top
        .iter()
        .map(|id| key_of(pool, id))
        .collect::<Result<SmallVec<[&str; 4]>, _>>()?;
    for id in base.iter() {
        let key = key_of(pool, id)?;
        if !top_keys.contains(&key) {
            out.push(id);
        }
    }
    out.extend(top.iter());
    Ok(out)
}

/// Removes from `set` every id whose key also occurs in `mask`.
pub(crate) fn without_keys_of(
    set: &AttrSet,
    set_pool: &impl AttrLookup,
    mask: &AttrSet,
    mask_pool: &impl AttrLookup,
) -> Result<AttrSet, ChangesetError> {
    let mask_keys = mask
        .iter()
        .map(|id| key_of(mask_pool, id))
        .collect::<Result<SmallVec<[&str; 4]>, _>>()?;
    let mut out = SmallVec::<[AttrId; 4]>::new();
    for id in set.iter() {
        if !mask_keys.contains(&key_of(set_pool, id)?) {
            out.push(id);
        }
    }
    Ok(AttrSet(out))
}

/// Returns the first key that occurs twice in `set`, if any.
pub(crate) fn duplicate_key<'p>(
    set: &AttrSet,
    pool: &'p impl AttrLookup,
) -> Result<Option<&'p str>, ChangesetError> {
    let mut seen = SmallVec::<[&str; 4]>::new();
    for id in set.iter() {
        let key = key_of(pool, id)?;
        if seen.contains(&key) {
            return Ok(Some(key));
        }
        seen.push(key);
    }
    Ok(None)
}
