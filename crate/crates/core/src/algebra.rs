//! Composition, transformation and overlap detection.

use std::ops::Range;

use crate::attrs::{apply_attrs, compose_keep_attrs, without_keys_of, AttrSet};
use crate::changeset::{ChangeOp, Changeset, OpAssembler, OpKind};
use crate::error::ChangesetError;
use crate::pool::{AttrId, AttrLookup, Attribute, PoolView};

/// Walks an op list piece by piece, followed by an implicit plain keep
/// covering the unconsumed part of the base.
struct Cursor<'a> {
    ops: &'a [ChangeOp],
    idx: usize,
    off: usize,
    byte: usize,
    tail: usize,
}

impl<'a> Cursor<'a> {
    fn new(cs: &'a Changeset) -> Result<Self, ChangesetError> {
        let consumed: usize = cs
            .ops()
            .iter()
            .filter(|op| op.kind() != OpKind::Insert)
            .map(ChangeOp::len)
            .sum();
        let tail = cs.base_len().checked_sub(consumed).ok_or_else(|| {
            ChangesetError::length(format!(
                "ops consume {consumed} characters of a {}-character base",
                cs.base_len()
            ))
        })?;
        Ok(Cursor {
            ops: cs.ops(),
            idx: 0,
            off: 0,
            byte: 0,
            tail,
        })
    }

    fn peek(&self) -> Option<(OpKind, usize)> {
        match self.ops.get(self.idx) {
            Some(op) => Some((op.kind(), op.len() - self.off)),
            None if self.tail > 0 => Some((OpKind::Keep, self.tail)),
            None => None,
        }
    }

    fn kind(&self) -> Option<OpKind> {
        self.peek().map(|(k, _)| k)
    }

    /// Takes `n` characters (at most what remains) of the current op.
    fn take(&mut self, n: usize) -> ChangeOp {
        let Some(op) = self.ops.get(self.idx) else {
            let n = n.min(self.tail);
            self.tail -= n;
            return ChangeOp::keep(n, AttrSet::new());
        };
        let n = n.min(op.len() - self.off);
        let piece = match op {
            ChangeOp::Insert { text, attrs } => {
                let rest = &text[self.byte..];
                let end = rest.char_indices().nth(n).map_or(rest.len(), |(b, _)| b);
                self.byte += end;
                ChangeOp::insert(&rest[..end], attrs.clone())
            }
            ChangeOp::Delete(_) => ChangeOp::Delete(n),
            ChangeOp::Keep { attrs, .. } => ChangeOp::keep(n, attrs.clone()),
        };
        self.off += n;
        if self.off == op.len() {
            self.idx += 1;
            self.off = 0;
            self.byte = 0;
        }
        piece
    }

    fn take_all(&mut self) -> ChangeOp {
        self.take(usize::MAX)
    }
}

/// The changeset equivalent to applying `a` and then `b`.
///
/// `pool` is the pool `a` applies to; `b`'s ids resolve in `pool` followed by
/// `a`'s new entries. The result applies to `pool` and carries both sets of
/// new entries, so it produces exactly the same document as the sequence.
pub fn compose(
    a: &Changeset,
    b: &Changeset,
    pool: &impl AttrLookup,
) -> Result<Changeset, ChangesetError> {
    if a.new_len() != b.base_len() {
        return Err(ChangesetError::length(format!(
            "cannot compose: first changeset produces {} characters, second expects {}",
            a.new_len(),
            b.base_len()
        )));
    }
    let view = PoolView::new(pool).with(a.new_pool()).with(b.new_pool());
    let mut ca = Cursor::new(a)?;
    let mut cb = Cursor::new(b)?;
    let mut out = OpAssembler::default();
    loop {
        match (ca.peek(), cb.peek()) {
            (Some((OpKind::Delete, _)), _) => out.push(ca.take_all()),
            (_, Some((OpKind::Insert, _))) => out.push(cb.take_all()),
            (None, None) => break,
            (Some((_, na)), Some((_, nb))) => {
                let n = na.min(nb);
                match (ca.take(n), cb.take(n)) {
                    (ChangeOp::Insert { .. }, ChangeOp::Delete(_)) => {}
                    (ChangeOp::Insert { text, attrs: s }, ChangeOp::Keep { attrs: t, .. }) => {
                        out.push(ChangeOp::insert(text, apply_attrs(&s, &t, &view)?))
                    }
                    (ChangeOp::Keep { .. }, ChangeOp::Delete(m)) => out.push(ChangeOp::Delete(m)),
                    (ChangeOp::Keep { attrs: s, .. }, ChangeOp::Keep { attrs: t, .. }) => {
                        out.push(ChangeOp::keep(n, compose_keep_attrs(&s, &t, &view)?))
                    }
                    _ => unreachable!("delete and insert heads are handled above"),
                }
            }
            _ => {
                return Err(ChangesetError::length(
                    "composed changesets disagree on the intermediate length",
                ))
            }
        }
    }
    let mut new_pool = a.new_pool().to_vec();
    new_pool.extend(b.new_pool().iter().cloned());
    Ok(Changeset::from_parts(
        a.base_len(),
        b.new_len(),
        new_pool,
        out.finish(),
    ))
}

/// Rewrites `b` so that it applies after `a`, where both were made against
/// the same document whose pool is `base_pool`.
///
/// `apply(apply(d, a), follow(a, b, false))` and
/// `apply(apply(d, b), follow(b, a, true))` have the same text and the same
/// resolved attributes. Where both insert at one position, `a`'s text comes
/// first unless `reverse` is set. Where both restyle a character, the
/// non-reversed side's changeset wins per key, so the result is the same
/// whichever side is transformed.
///
/// The result's ids resolve against `base_pool` followed by `a`'s new entries.
pub fn follow(
    a: &Changeset,
    b: &Changeset,
    reverse: bool,
    base_pool: &impl AttrLookup,
) -> Result<Changeset, ChangesetError> {
    if a.base_len() != b.base_len() {
        return Err(ChangesetError::length(format!(
            "cannot transform: base lengths {} and {} differ",
            a.base_len(),
            b.base_len()
        )));
    }
    let base = base_pool.len();
    let a_view = PoolView::new(base_pool).with(a.new_pool());
    let b_view = PoolView::new(base_pool).with(b.new_pool());

    // b's new entries either already exist in a's or are appended after them.
    let mut new_pool: Vec<Attribute> = Vec::new();
    let mut remap_new: Vec<AttrId> = Vec::with_capacity(b.new_pool().len());
    for attr in b.new_pool() {
        let id = match a.new_pool().iter().position(|x| x == attr) {
            Some(j) => base + j,
            None => {
                new_pool.push(attr.clone());
                base + a.new_pool().len() + new_pool.len() - 1
            }
        };
        remap_new.push(AttrId(id as u32));
    }
    let remap = |set: &AttrSet| {
        set.map_ids(|id| {
            if id.index() < base {
                id
            } else {
                remap_new[id.index() - base]
            }
        })
    };

    let mut ca = Cursor::new(a)?;
    let mut cb = Cursor::new(b)?;
    let mut out = OpAssembler::default();
    loop {
        match (ca.kind(), cb.kind()) {
            (Some(OpKind::Insert), Some(OpKind::Insert)) if reverse => {
                push_insert(&mut out, cb.take_all(), &remap)
            }
            (Some(OpKind::Insert), _) => {
                let n = ca.take_all().len();
                out.push(ChangeOp::keep(n, AttrSet::new()));
            }
            (_, Some(OpKind::Insert)) => push_insert(&mut out, cb.take_all(), &remap),
            (None, None) => break,
            (Some(_), Some(_)) => {
                let (_, na) = ca.peek().expect("peeked above");
                let (_, nb) = cb.peek().expect("peeked above");
                let n = na.min(nb);
                match (ca.take(n), cb.take(n)) {
                    (ChangeOp::Delete(_), _) => {}
                    (ChangeOp::Keep { .. }, ChangeOp::Delete(m)) => out.push(ChangeOp::Delete(m)),
                    (ChangeOp::Keep { attrs: s, .. }, ChangeOp::Keep { attrs: t, .. }) => {
                        let t = if reverse {
                            without_keys_of(&t, &b_view, &s, &a_view)?
                        } else {
                            t
                        };
                        out.push(ChangeOp::keep(n, remap(&t)));
                    }
                    _ => unreachable!("insert heads are handled above"),
                }
            }
            _ => {
                return Err(ChangesetError::length(
                    "transformed changesets disagree on the base length",
                ))
            }
        }
    }
    let ops = out.finish();
    let inserted: usize = ops
        .iter()
        .filter(|op| op.kind() == OpKind::Insert)
        .map(ChangeOp::len)
        .sum();
    let deleted: usize = ops
        .iter()
        .filter(|op| op.kind() == OpKind::Delete)
        .map(ChangeOp::len)
        .sum();
    Ok(Changeset::from_parts(
        a.new_len(),
        a.new_len() + inserted - deleted,
        new_pool,
        ops,
    ))
}

fn push_insert(out: &mut OpAssembler, op: ChangeOp, remap: &impl Fn(&AttrSet) -> AttrSet) {
    if let ChangeOp::Insert { text, attrs } = op {
        out.push(ChangeOp::insert(text, remap(&attrs)));
    }
}

/// Base-document indices touched by `cs`, as sorted, disjoint ranges.
///
/// An insert at position `p` touches `p`; deletes and keeps that carry
/// attributes touch their whole range; plain keeps touch nothing.
pub fn touched_ranges(cs: &Changeset) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    let mut push = |r: Range<usize>| match out.last_mut() {
        Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
        _ => out.push(r),
    };
    let mut pos = 0;
    for op in cs.ops() {
        match op {
            ChangeOp::Insert { .. } => push(pos..pos + 1),
            ChangeOp::Delete(n) => {
                push(pos..pos + n);
                pos += n;
            }
            ChangeOp::Keep { len, attrs } => {
                if !attrs.is_empty() {
                    push(pos..pos + len);
                }
                pos += len;
            }
        }
    }
    out
}

/// Do `a` and `b`, made against the same base, touch a common index?
pub fn overlaps(a: &Changeset, b: &Changeset) -> Result<bool, ChangesetError> {
    if a.base_len() != b.base_len() {
        return Err(ChangesetError::length(format!(
            "cannot compare: base lengths {} and {} differ",
            a.base_len(),
            b.base_len()
        )));
    }
    Ok(ranges_intersect(&touched_ranges(a), &touched_ranges(b)))
}

/// Do two sorted, disjoint range lists share an index?
pub fn ranges_intersect(a: &[Range<usize>], b: &[Range<usize>]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].start < b[j].end && b[j].start < a[i].end {
            return true;
        }
        if a[i].end <= b[j].end {
            i += 1;
        } else {
            j += 1;
        }
    }
    false
}

/// Re-expresses `cs`, valid against pool `from`, against pool `to`. Every
/// attribute keeps its `(key, value)`; ids are looked up in `to` and pairs it
/// lacks move into the new pool.
pub fn remap_pool(
    cs: &Changeset,
    from: &impl AttrLookup,
    to: &impl AttrLookup,
) -> Result<Changeset, ChangesetError> {
    let view = PoolView::new(from).with(cs.new_pool());
    let mut new_pool: Vec<Attribute> = Vec::new();
    let mut map = |id: AttrId| -> Result<AttrId, ChangesetError> {
        let attr = view.get(id).ok_or(ChangesetError::BadAttributeId { id })?;
        if let Some(found) = to.find(&attr.key, &attr.value) {
            return Ok(found);
        }
        let k = match new_pool.iter().position(|x| x == attr) {
            Some(k) => k,
            None => {
                new_pool.push(attr.clone());
                new_pool.len() - 1
            }
        };
        Ok(AttrId((to.len() + k) as u32))
    };
    let mut ops = Vec::with_capacity(cs.ops().len());
    for op in cs.ops() {
        ops.push(match op {
            ChangeOp::Insert { text, attrs } => ChangeOp::insert(
                text.clone(),
                attrs.iter().map(&mut map).collect::<Result<_, _>>()?,
            ),
            ChangeOp::Delete(n) => ChangeOp::Delete(*n),
            ChangeOp::Keep { len, attrs } => ChangeOp::keep(
                *len,
                attrs.iter().map(&mut map).collect::<Result<_, _>>()?,
            ),
        });
    }
    Ok(Changeset::from_parts(cs.base_len(), cs.new_len(), new_pool, ops))
}
