//! Property tests of the changeset algebra against sequential application
//! and brute-force oracles.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use redsys_core::wire::{decode, encode, Message};
use redsys_core::{
    compose, follow, overlaps, ranges_to_ops, AttributeRangeRule, ChangeOp, Changeset, Document,
};

/// Base indices a changeset touches, one by one.
fn touch_set(cs: &Changeset) -> BTreeSet<usize> {
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

fn paint(rules: &[AttributeRangeRule], len: usize) -> Vec<BTreeMap<String, String>> {
    let mut out = vec![BTreeMap::new(); len];
    for r in rules {
        for slot in &mut out[r.begin..=r.end] {
            slot.insert(r.key.clone(), r.value.clone());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn apply_yields_new_len(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let d = common::document(&mut rng, 50);
        let cs = common::changeset(&mut rng, &d);
        prop_assert_eq!(d.apply(&cs).unwrap().len(), cs.new_len());
        prop_assert_eq!(cs.canonicalize(), cs.clone());
    }

    #[test]
    fn compose_matches_sequential_apply(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let d = common::document(&mut rng, 50);
        let a = common::changeset(&mut rng, &d);
        let mid = d.apply(&a).unwrap();
        let b = common::changeset(&mut rng, &mid);
        let c = compose(&a, &b, d.pool()).unwrap();
        prop_assert_eq!(c.validate(d.pool()), Ok(()));
        prop_assert_eq!(d.apply(&c).unwrap(), mid.apply(&b).unwrap());
    }

    #[test]
    fn follow_converges(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let d = common::document(&mut rng, 50);
        let a = common::changeset(&mut rng, &d);
        let b = common::changeset(&mut rng, &d);
        let da = d.apply(&a).unwrap();
        let db = d.apply(&b).unwrap();
        let b2 = follow(&a, &b, false, d.pool()).unwrap();
        let a2 = follow(&b, &a, true, d.pool()).unwrap();
        let left = da.apply(&b2).unwrap();
        let right = db.apply(&a2).unwrap();
        prop_assert_eq!(left.text(), right.text());
        prop_assert!(left.content_eq(&right), "\n{}\n{}", left, right);
    }

    #[test]
    fn overlaps_matches_touch_sets(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let d = common::document(&mut rng, 30);
        let a = common::changeset(&mut rng, &d);
        let b = common::changeset(&mut rng, &d);
        let brute = !touch_set(&a).is_disjoint(&touch_set(&b));
        prop_assert_eq!(overlaps(&a, &b).unwrap(), brute);
    }

    #[test]
    fn ranges_to_ops_paints_like_brute_force(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let len = rng.gen_range(1..=40);
        let rules: Vec<AttributeRangeRule> = (0..rng.gen_range(0..6))
            .map(|_| {
                let begin = rng.gen_range(0..len);
                let end = rng.gen_range(begin..len);
                let key = common::KEYS[rng.gen_range(0..3)];
                let value = ["x", "y", "z"][rng.gen_range(0..3)];
                AttributeRangeRule::new(key, value, begin, end)
            })
            .collect();
        let d = Document::from_text(&"q".repeat(len));
        let cs = ranges_to_ops(&rules, len, d.pool()).unwrap();
        let out = d.apply(&cs).unwrap();
        let want = paint(&rules, len);
        for (i, w) in want.iter().enumerate() {
            let got: BTreeMap<String, String> = out
                .resolved_attrs(i)
                .into_iter()
                .map(|(k, v)| (k.to_owned(), v.to_owned()))
                .collect();
            prop_assert_eq!(&got, w, "character {}", i);
        }
    }

    #[test]
    fn update_messages_round_trip(seed in any::<u64>(), rev in any::<u64>(), author in "[a-z0-9\"\\\\é ]{0,8}") {
        let mut rng = StdRng::seed_from_u64(seed);
        let d = common::document(&mut rng, 20);
        let cs = common::changeset(&mut rng, &d);
        let msg = Message::Update { doc_id: "d".into(), rev, changeset: cs, author_id: author };
        let line = encode(&msg);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(decode(line.as_bytes()).unwrap(), msg);
    }

    #[test]
    fn decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = decode(&bytes);
    }
}

fn any_message(rng: &mut StdRng, s: String) -> Message {
    use redsys_core::wire::*;
    let d = common::document(rng, 10);
    let cs = common::changeset(rng, &d);
    let n: u64 = rng.gen();
    match rng.gen_range(0..9) {
        0 => Message::Hello {
            doc_id: s.clone(),
            client_id: s,
            role: if rng.gen() { Role::Editor } else { Role::Service },
            subscriptions: vec!["contextmenu.".into()],
            create: rng.gen(),
        },
        1 => Message::Init { doc_id: s, rev: n, snapshot: d.snapshot(), pool: d.pool().clone() },
        2 => Message::Submit { doc_id: s, base_rev: n, changeset: cs },
        3 => Message::Ack { doc_id: s, new_rev: n },
        4 => Message::Reject {
            doc_id: s,
            reason: RejectReason::MergeConflict,
            head_rev: n,
            detail: rng.gen::<bool>().then(|| "x".into()),
        },
        5 => Message::Update { doc_id: s.clone(), rev: n, changeset: cs, author_id: s },
        6 => {
            let ev = if rng.gen() {
                EventMessage::sync(s.clone(), "c1").with_param("pos", n.to_string())
            } else {
                EventMessage::asynchronous(s.clone())
            };
            Message::Event { doc_id: s, event: ev }
        }
        7 => Message::EventResponse {
            doc_id: s,
            correlation_id: n.to_string(),
            items: vec![
                EventItem::label("a"),
                EventItem { label: "b".into(), action: Some(EventAction { base_rev: n, changeset: cs }) },
            ],
        },
        _ => Message::Error {
            doc_id: s,
            code: ErrorCode::NoSubscriber,
            detail: "none".into(),
            correlation_id: rng.gen::<bool>().then(|| "c".into()),
        },
    }
}

proptest! {
    #[test]
    fn every_message_kind_round_trips(seed in any::<u64>(), s in "\\PC{0,10}") {
        let mut rng = StdRng::seed_from_u64(seed);
        let msg = any_message(&mut rng, s);
        let line = encode(&msg);
        prop_assert!(!line.contains('\n'));
        let back = decode(line.as_bytes()).unwrap();
        prop_assert_eq!(encode(&back), line);
        prop_assert_eq!(back, msg);
    }
}
