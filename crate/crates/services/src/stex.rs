//! The macros the folding and transclusion services look for.

use std::ops::Range;

use crate::lexer::{slice, StexToken, TokenKind};

/// `\termref{A}{B}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermRef {
    /// `\termref{A}{`
    pub head: Range<usize>,
    pub body: Range<usize>,
    /// The closing `}`.
    pub close: Range<usize>,
}

/// `\STRlabel[id]{body}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Label {
    pub id: String,
    pub span: Range<usize>,
    pub body: String,
}

/// `\STRcopy{id}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Copy {
    pub id: String,
    pub span: Range<usize>,
    pub math: bool,
}

fn is_command(text: &[char], t: &StexToken, name: &str) -> bool {
    t.kind == TokenKind::Command && slice(text, &t.span) == name
}

/// The closing token of a balanced group opening at `i`.
fn group_at(toks: &[StexToken], i: usize) -> Option<usize> {
    let t = toks.get(i)?;
    (t.kind == TokenKind::BeginGroup).then_some(t.partner).flatten()
}

pub fn termrefs(text: &[char], toks: &[StexToken]) -> Vec<TermRef> {
    let mut out = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if !is_command(text, t, "\\termref") {
            continue;
        }
        let Some(a_end) = group_at(toks, i + 1) else { continue };
        let Some(b_end) = group_at(toks, a_end + 1) else { continue };
        out.push(TermRef {
            head: t.span.start..toks[a_end + 1].span.end,
            body: toks[a_end + 1].span.end..toks[b_end].span.start,
            close: toks[b_end].span.clone(),
        });
    }
    out
}

pub fn labels(text: &[char], toks: &[StexToken]) -> Vec<Label> {
    let mut out = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if !is_command(text, t, "\\STRlabel") {
            continue;
        }
        let Some(open) = toks.get(i + 1).filter(|o| slice(text, &o.span) == "[") else {
            continue;
        };
        let Some(close_rel) = toks[i + 2..]
            .iter()
            .position(|c| slice(text, &c.span) == "]" || c.kind != TokenKind::Word)
        else {
            continue;
        };
        let close = i + 2 + close_rel;
        if slice(text, &toks[close].span) != "]" {
            continue;
        }
        let Some(end) = group_at(toks, close + 1) else { continue };
        out.push(Label {
            id: text[open.span.end..toks[close].span.start].iter().collect(),
            span: t.span.start..toks[end].span.end,
            body: text[toks[close + 1].span.end..toks[end].span.start].iter().collect(),
        });
    }
    out
}

pub fn copies(text: &[char], toks: &[StexToken]) -> Vec<Copy> {
    let mut out = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if !is_command(text, t, "\\STRcopy") {
            continue;
        }
        let Some(end) = group_at(toks, i + 1) else { continue };
        out.push(Copy {
            id: text[toks[i + 1].span.end..toks[end].span.start].iter().collect(),
            span: t.span.start..toks[end].span.end,
            math: t.math,
        });
    }
    out
}
