//! Attribute range rules and the event sweep that turns them into a changeset.

use std::collections::BTreeSet;

use crate::builder::ChangesetBuilder;
use crate::changeset::Changeset;
use crate::document::Document;
use crate::error::ChangesetError;
use crate::pool::AttrLookup;

/// Apply `key = value` to characters `begin..=end`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AttributeRangeRule {
    pub key: String,
    pub value: String,
    pub begin: usize,
    pub end: usize,
}

impl AttributeRangeRule {
    pub fn new(key: impl Into<String>, value: impl Into<String>, begin: usize, end: usize) -> Self {
        AttributeRangeRule {
            key: key.into(),
            value: value.into(),
            begin,
            end,
        }
    }

    /// Rule over the half-open range `range`, or `None` if it is empty.
    pub fn over(key: &str, value: &str, range: std::ops::Range<usize>) -> Option<Self> {
        (range.start < range.end).then(|| Self::new(key, value, range.start, range.end - 1))
    }
}

fn check_bounds(rules: &[AttributeRangeRule], doc_len: usize) -> Result<(), ChangesetError> {
    for (index, r) in rules.iter().enumerate() {
        if r.begin > r.end || r.end >= doc_len {
            return Err(ChangesetError::RuleOutOfBounds {
                index,
                begin: r.begin,
                end: r.end,
                len: doc_len,
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Remove,
    Add,
}

/// Converts range rules into a keep-only changeset over a document of length
/// `doc_len` whose pool is `pool`.
///
/// Builds an add event at `begin` and a remove event at `end + 1` for every
/// rule, sorts them by position (removes first at equal positions) and sweeps
/// left to right, emitting one keep per segment with the attributes active
/// there. When several active rules share a key, the later rule wins.
pub fn ranges_to_ops(
    rules: &[AttributeRangeRule],
    doc_len: usize,
    pool: &impl AttrLookup,
) -> Result<Changeset, ChangesetError> {
    check_bounds(rules, doc_len)?;
    let mut events: Vec<(usize, EventKind, usize)> = Vec::with_capacity(rules.len() * 2);
    for (i, r) in rules.iter().enumerate() {
        events.push((r.begin, EventKind::Add, i));
        events.push((r.end + 1, EventKind::Remove, i));
    }
    events.sort_by_key(|&(pos, kind, _)| (pos, kind));

    let mut builder = ChangesetBuilder::new(doc_len, pool);
    let mut active: BTreeSet<usize> = BTreeSet::new();
    let mut last = 0;
    for (pos, kind, rule) in events {
        if pos > last {
            let attrs = resolve(rules, &active);
            builder.keep(pos - last, &attrs);
            last = pos;
        }
        match kind {
            EventKind::Add => active.insert(rule),
            EventKind::Remove => active.remove(&rule),
        };
    }
    builder.finish()
}

/// Per key, the value of the highest-numbered active rule.
fn resolve<'r>(rules: &'r [AttributeRangeRule], active: &BTreeSet<usize>) -> Vec<(&'r str, &'r str)> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    for &i in active {
        let r = &rules[i];
        match out.iter_mut().find(|(k, _)| *k == r.key) {
            Some(slot) => slot.1 = &r.value,
            None => out.push((&r.key, &r.value)),
        }
    }
    out
}

/// The keep-only changeset that makes the keys selected by `owned` on `doc`
/// exactly what `rules` paint (later rules win per key), leaving every other
/// key alone. Characters already right are plain keeps, so an unchanged
/// layer yields the identity.
pub fn diff_layer(
    doc: &Document,
    owned: impl Fn(&str) -> bool,
    rules: &[AttributeRangeRule],
) -> Result<Changeset, ChangesetError> {
    diff_layer_at(doc, |_, key| owned(key), rules)
}

/// Like [`diff_layer`], with ownership decided per character: a key counts
/// as present at `i` only if `owned(i, key)`. Keys a rule paints are always
/// written.
pub fn diff_layer_at(
    doc: &Document,
    owned: impl Fn(usize, &str) -> bool,
    rules: &[AttributeRangeRule],
) -> Result<Changeset, ChangesetError> {
    let len = doc.len();
    check_bounds(rules, len)?;
    let mut want: Vec<Vec<(&str, &str)>> = vec![Vec::new(); len];
    for r in rules {
        for slot in &mut want[r.begin..=r.end] {
            match slot.iter_mut().find(|(k, _)| *k == r.key) {
                Some(kv) => kv.1 = &r.value,
                None => slot.push((&r.key, &r.value)),
            }
        }
    }
    let mut builder = ChangesetBuilder::new(len, doc.pool());
    let mut run: Vec<(&str, &str)> = Vec::new();
    let mut run_len = 0;
    for (i, want) in want.iter_mut().enumerate() {
        // an empty value means the key is absent
        want.retain(|(_, v)| !v.is_empty());
        want.sort_unstable();
        let have: Vec<(&str, &str)> = doc
            .resolved_attrs(i)
            .into_iter()
            .filter(|(k, _)| owned(i, k))
            .collect();
        let mut change: Vec<(&str, &str)> = want
            .iter()
            .filter(|kv| !have.contains(kv))
            .copied()
            .collect();
        for (k, _) in &have {
            if !want.iter().any(|(wk, _)| wk == k) {
                change.push((k, ""));
            }
        }
        change.sort_unstable();
        if change != run {
            builder.keep(run_len, &run);
            run = change;
            run_len = 0;
        }
        run_len += 1;
    }
    builder.keep(run_len, &run);
    builder.finish()
}
