//! Cancellation tokens for work that runs off the callback thread.

use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use redsys_core::{
    follow, ranges_intersect, touched_ranges, AttrLookup, ChangeOp, Changeset, ChangesetBuilder,
};

const MARKER_KEY: &str = "\u{0}watch";

/// Re-expresses `ranges` (sorted, disjoint, over the document `update`
/// applies to) on the document after `update`. Callers make sure `update`
/// does not touch the ranges.
pub fn rebase_ranges(
    ranges: &[Range<usize>],
    update: &Changeset,
    pool: &impl AttrLookup,
) -> Vec<Range<usize>> {
    if ranges.is_empty() {
        return Vec::new();
    }
    let mut b = ChangesetBuilder::new(update.base_len(), pool);
    let mut pos = 0;
    for r in ranges {
        b.keep(r.start - pos, &[]).keep(r.len(), &[(MARKER_KEY, "1")]);
        pos = r.end;
    }
    let marker = b.finish().expect("ranges lie inside the document");
    let moved = follow(update, &marker, false, pool).expect("same base length");
    let mut out = Vec::new();
    let mut pos = 0;
    for op in moved.ops() {
        match op {
            ChangeOp::Keep { len, attrs } => {
                if !attrs.is_empty() {
                    out.push(pos..pos + len);
                }
                pos += len;
            }
            ChangeOp::Insert { .. } | ChangeOp::Delete(_) => {
                unreachable!("a keep-only marker stays keep-only")
            }
        }
    }
    out
}

#[derive(Debug)]
struct Inner {
    start_rev: u64,
    cancelled: AtomicBool,
    ranges: Mutex<Vec<Range<usize>>>,
}

/// Watches character ranges of the document as it was at `start_rev`.
///
/// The session cancels the token as soon as an update touches one of the
/// ranges, and otherwise shifts the ranges to follow the document. Clones
/// share state, so a worker thread can poll [`ProcessingToken::is_cancelled`].
#[derive(Clone, Debug)]
pub struct ProcessingToken(Arc<Inner>);

impl ProcessingToken {
    pub(crate) fn new(start_rev: u64, mut ranges: Vec<Range<usize>>) -> Self {
        ranges.retain(|r| !r.is_empty());
        ranges.sort_by_key(|r| r.start);
        let mut merged: Vec<Range<usize>> = Vec::new();
        for r in ranges {
            match merged.last_mut() {
                Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
                _ => merged.push(r),
            }
        }
        ProcessingToken(Arc::new(Inner {
            start_rev,
            cancelled: AtomicBool::new(false),
            ranges: Mutex::new(merged),
        }))
    }

    pub fn start_rev(&self) -> u64 {
        self.0.start_rev
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.cancelled.load(Ordering::Acquire)
    }

    pub fn cancel(&self) {
        self.0.cancelled.store(true, Ordering::Release);
    }

    /// The watched ranges on the session's current document.
    pub fn ranges(&self) -> Vec<Range<usize>> {
        self.0.ranges.lock().expect("token lock").clone()
    }

    /// Applies one update: cancel on overlap, otherwise shift the ranges.
    pub(crate) fn observe(&self, update: &Changeset, pool: &impl AttrLookup) {
        if self.is_cancelled() {
            return;
        }
        let mut ranges = self.0.ranges.lock().expect("token lock");
        if ranges_intersect(&touched_ranges(update), &ranges) {
            self.cancel();
        } else {
            *ranges = rebase_ranges(&ranges, update, pool);
        }
    }

    pub(crate) fn is_shared(&self) -> bool {
        Arc::strong_count(&self.0) > 1
    }
}
