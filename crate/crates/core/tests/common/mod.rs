//! Random documents and changesets for property tests.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use redsys_core::{AttrSet, AttributePool, Changeset, ChangesetBuilder, Document};

pub const KEYS: [&str; 8] = ["bold", "author", "hl", "spot", "fold", "ui", "lang", "color"];
const VALUES: [&str; 3] = ["a", "b", "c"];
const ALPHABET: [char; 6] = ['a', 'b', ' ', 'x', 'é', 'λ'];

pub fn text(rng: &mut StdRng, max: usize) -> String {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

/// Distinct keys with random values; `allow_empty` adds removals.
fn pairs(rng: &mut StdRng, allow_empty: bool) -> Vec<(&'static str, &'static str)> {
    let mut out = Vec::new();
    for key in KEYS {
        if rng.gen_bool(0.15) {
            let value = if allow_empty && rng.gen_bool(0.3) {
                ""
            } else {
                VALUES[rng.gen_range(0..VALUES.len())]
            };
            out.push((key, value));
        }
    }
    out
}

pub fn document(rng: &mut StdRng, max_len: usize) -> Document {
    let t = text(rng, max_len);
    let mut pool = AttributePool::new();
    // seed the pool with a few entries so ids below the base are exercised
    for _ in 0..rng.gen_range(0..6) {
        let (k, v) = (KEYS[rng.gen_range(0..KEYS.len())], VALUES[rng.gen_range(0..3)]);
        pool.intern(k, v);
    }
    let attrs = t
        .chars()
        .map(|_| {
            let ps = pairs(rng, false);
            AttrSet::from_ids(ps.iter().map(|(k, v)| pool.intern(k, v)))
        })
        .collect();
    Document::from_parts(&t, pool, attrs).unwrap()
}

/// A random valid changeset against `doc`.
pub fn changeset(rng: &mut StdRng, doc: &Document) -> Changeset {
    let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
    let mut left = doc.len();
    while left > 0 || rng.gen_bool(0.3) {
        match rng.gen_range(0..4) {
            0 => {
                let t = text(rng, 4);
                let ps = pairs(rng, false);
                b.insert(&t, &ps);
            }
            1 if left > 0 => {
                let n = rng.gen_range(1..=left.min(5));
                b.remove(n);
                left -= n;
            }
            _ if left > 0 => {
                let n = rng.gen_range(1..=left.min(8));
                let ps = if rng.gen_bool(0.5) { vec![] } else { pairs(rng, true) };
                b.keep(n, &ps);
                left -= n;
            }
            _ => break,
        }
        if left > 0 && rng.gen_bool(0.1) {
            break;
        }
    }
    b.finish().unwrap()
}
