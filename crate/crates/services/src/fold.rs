//! Folding (`\termref`) and transclusion (`\STRlabel`/`\STRcopy`) layers.
//!
//! Both services write `fold=hidden`, so each also writes `fold.owner` and
//! only ever changes folds it owns.

use std::collections::HashMap;

use redsys_core::{diff_layer_at, AttributeRangeRule, Changeset, Document};

use crate::lexer::tokenize;
use crate::reactive::Layer;
use crate::stex;

pub const FOLD: &str = "fold";
pub const FOLD_OWNER: &str = "fold.owner";
pub const HIDDEN: &str = "hidden";
pub const DISPLAY: &str = "display";
pub const DISPLAY_ERROR: &str = "display-error";

fn fold(owner: &str, range: std::ops::Range<usize>, out: &mut Vec<AttributeRangeRule>) {
    out.extend(AttributeRangeRule::over(FOLD, HIDDEN, range.clone()));
    out.extend(AttributeRangeRule::over(FOLD_OWNER, owner, range));
}

fn owns_fold(doc: &Document, i: usize, owner: &str) -> bool {
    doc.attr_value(i, FOLD_OWNER) == Some(owner)
}

/// Drops fold rules over characters another service has folded already, so
/// nested constructs go to whoever claimed them first instead of flipping
/// `fold.owner` back and forth.
fn unclaimed(doc: &Document, owner: &str, rules: Vec<AttributeRangeRule>) -> Vec<AttributeRangeRule> {
    let free = |i: usize| doc.attr_value(i, FOLD_OWNER).map_or(true, |o| o == owner);
    let mut out = Vec::with_capacity(rules.len());
    for r in rules {
        if !matches!(r.key.as_str(), FOLD | FOLD_OWNER) {
            out.push(r);
            continue;
        }
        let mut start = None;
        for i in r.begin..=r.end + 1 {
            match (start, i <= r.end && free(i)) {
                (None, true) => start = Some(i),
                (Some(b), false) => {
                    out.extend(AttributeRangeRule::over(&r.key, &r.value, b..i));
                    start = None;
                }
                _ => {}
            }
        }
    }
    out
}

/// Hides everything of `\termref{A}{B}` except `B`.
#[derive(Default)]
pub struct Hider;

impl Hider {
    pub const OWNER: &'static str = "hider";

    pub fn rules(text: &[char]) -> Vec<AttributeRangeRule> {
        let toks = tokenize(text);
        let mut out = Vec::new();
        for t in stex::termrefs(text, &toks) {
            fold(Self::OWNER, t.head, &mut out);
            fold(Self::OWNER, t.close, &mut out);
        }
        out
    }
}

impl Layer for Hider {
    fn recompute(&mut self, doc: &Document) -> Changeset {
        let owned = |i: usize, k: &str| {
            matches!(k, FOLD | FOLD_OWNER) && owns_fold(doc, i, Self::OWNER)
        };
        let rules = unclaimed(doc, Self::OWNER, Self::rules(doc.chars()));
        diff_layer_at(doc, owned, &rules).expect("rules lie inside the document")
    }
}

/// Hides label definitions and shows each `\STRcopy{id}` as the label's body.
#[derive(Default)]
pub struct Transclusion;

impl Transclusion {
    pub const OWNER: &'static str = "transclusion";

    pub fn rules(text: &[char]) -> Vec<AttributeRangeRule> {
        let toks = tokenize(text);
        let mut table: HashMap<String, String> = HashMap::new();
        let mut out = Vec::new();
        for l in stex::labels(text, &toks) {
            fold(Self::OWNER, l.span, &mut out);
            table.entry(l.id).or_insert(l.body);
        }
        for c in stex::copies(text, &toks) {
            match table.get(&c.id) {
                Some(body) => {
                    let shown = if c.math { strip_math(body) } else { body.as_str() };
                    fold(Self::OWNER, c.span.clone(), &mut out);
                    out.extend(AttributeRangeRule::over(DISPLAY, shown, c.span.start..c.span.start + 1));
                }
                None => out.extend(AttributeRangeRule::over(DISPLAY_ERROR, "unresolved", c.span)),
            }
        }
        out
    }
}

/// `$x$` becomes `x` when it is shown inside math already.
fn strip_math(body: &str) -> &str {
    let t = body.trim();
    for delim in ["$$", "$"] {
        if let Some(inner) = t.strip_prefix(delim).and_then(|r| r.strip_suffix(delim)) {
            return inner;
        }
    }
    body
}

impl Layer for Transclusion {
    fn recompute(&mut self, doc: &Document) -> Changeset {
        let owned = |i: usize, k: &str| match k {
            DISPLAY | DISPLAY_ERROR => true,
            FOLD | FOLD_OWNER => owns_fold(doc, i, Self::OWNER),
            _ => false,
        };
        let rules = unclaimed(doc, Self::OWNER, Self::rules(doc.chars()));
        diff_layer_at(doc, owned, &rules).expect("rules lie inside the document")
    }
}
