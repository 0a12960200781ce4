//! Tokens are cancelled exactly when an update touches a watched character,
//! and surviving ranges track the same characters. Checked against a
//! brute-force walk that follows each character through the updates.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use redsys_core::{ChangeOp, Changeset, ChangesetBuilder, Document};
use redsys_sdk::ServiceSession;
use redsys_core::wire::Message;

fn random_update(rng: &mut StdRng, doc: &Document) -> Changeset {
    let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
    let mut left = doc.len();
    while left > 0 || rng.gen_bool(0.2) {
        match rng.gen_range(0..10) {
            0..=4 if left > 0 => {
                let n = rng.gen_range(1..=left);
                b.keep(n, &[]);
                left -= n;
            }
            5 | 6 if left > 0 => {
                let n = rng.gen_range(1..=left.min(3));
                b.remove(n);
                left -= n;
            }
            7 if left > 0 => {
                let n = rng.gen_range(1..=left.min(3));
                b.keep(n, &[("k", if rng.gen() { "a" } else { "" })]);
                left -= n;
            }
            _ => {
                b.insert(["x", "yz", "w"][rng.gen_range(0..3)], &[]);
            }
        }
        if left == 0 && rng.gen_bool(0.7) {
            break;
        }
    }
    b.finish().unwrap()
}

/// Positions touched by `cs`, walking its ops directly.
fn touched(cs: &Changeset) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut pos = 0;
    for op in cs.ops() {
        match op {
            ChangeOp::Insert { .. } => {
                out.insert(pos);
            }
            ChangeOp::Delete(n) => {
                out.extend(pos..pos + n);
                pos += n;
            }
            ChangeOp::Keep { len, attrs } => {
                if !attrs.is_empty() {
                    out.extend(pos..pos + len);
                }
                pos += len;
            }
        }
    }
    out
}

/// Where each surviving old position lands.
fn moved(cs: &Changeset, positions: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut map = Vec::new();
    let (mut old, mut new) = (0, 0);
    for op in cs.ops() {
        match op {
            ChangeOp::Insert { text, .. } => new += text.chars().count(),
            ChangeOp::Delete(n) => {
                map.extend(std::iter::repeat(None).take(*n));
                old += n;
            }
            ChangeOp::Keep { len, .. } => {
                for i in 0..*len {
                    map.push(Some(new + i));
                }
                old += len;
                new += len;
            }
        }
    }
    for i in old..cs.base_len() {
        map.push(Some(new + i - old));
    }
    positions.iter().filter_map(|&p| map[p]).collect()
}

fn init(doc: &Document) -> Message {
    Message::Init {
        doc_id: "d".into(),
        rev: 0,
        snapshot: doc.snapshot(),
        pool: doc.pool().clone(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn token_matches_brute_force(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let len = rng.gen_range(1..20);
        let text: String = (0..len).map(|_| rng.gen_range(b'a'..=b'f') as char).collect();
        let mut doc = Document::from_text(&text);
        let mut session = ServiceSession::new("d", "svc", vec![]);
        session.handle(init(&doc)).unwrap();

        let mut ranges = Vec::new();
        for _ in 0..rng.gen_range(1..3) {
            let a = rng.gen_range(0..len);
            let b = rng.gen_range(a + 1..=len);
            ranges.push(a..b);
        }
        let token = session.token(ranges.clone());
        let mut watched: BTreeSet<usize> = ranges.into_iter().flatten().collect();
        let mut expect_cancel = false;

        for rev in 1..=6u64 {
            let cs = random_update(&mut rng, &doc);
            if !expect_cancel {
                if touched(&cs).intersection(&watched).next().is_some() {
                    expect_cancel = true;
                } else {
                    watched = moved(&cs, &watched);
                }
            }
            doc = doc.apply(&cs).unwrap();
            session
                .handle(Message::Update { doc_id: "d".into(), rev, changeset: cs, author_id: "e".into() })
                .unwrap();
            prop_assert_eq!(token.is_cancelled(), expect_cancel);
            if !expect_cancel {
                let got: BTreeSet<usize> = token.ranges().into_iter().flatten().collect();
                prop_assert_eq!(&got, &watched);
            }
        }
        prop_assert_eq!(session.doc().unwrap(), &doc);
    }
}
