//! Syntax highlighting as the `hl` attribute.

use redsys_core::{diff_layer, AttributeRangeRule, Changeset, Document};

use crate::lexer::{tokenize, TokenKind};
use crate::reactive::Layer;

pub const KEY: &str = "hl";

/// The highlighting rules for `text`: math regions first, then individual
/// tokens, so a command inside math keeps its own kind.
pub fn rules(text: &[char]) -> Vec<AttributeRangeRule> {
    let toks = tokenize(text);
    let mut out = Vec::new();
    let mut math_start = None;
    for t in &toks {
        if t.kind == TokenKind::MathDelim {
            match math_start.take() {
                None => math_start = Some(t.span.start),
                Some(s) => out.extend(AttributeRangeRule::over(KEY, "MathDelim", s..t.span.end)),
            }
        }
    }
    if let Some(s) = math_start {
        out.extend(AttributeRangeRule::over(KEY, "MathDelim", s..text.len()));
    }
    let mut env_arg = false;
    for (i, t) in toks.iter().enumerate() {
        match t.kind {
            TokenKind::Word | TokenKind::Whitespace => {
                if env_arg {
                    out.extend(AttributeRangeRule::over(KEY, "Command", t.span.clone()));
                }
            }
            kind => {
                out.extend(AttributeRangeRule::over(KEY, kind.name(), t.span.clone()));
            }
        }
        // `\begin{name}` and `\end{name}` highlight the name with the command
        env_arg = match t.kind {
            TokenKind::BeginGroup => i > 0 && {
                let prev = &toks[i - 1];
                prev.kind == TokenKind::Command
                    && matches!(
                        text[prev.span.clone()].iter().collect::<String>().as_str(),
                        "\\begin" | "\\end"
                    )
            },
            TokenKind::EndGroup => false,
            _ => env_arg,
        };
    }
    out
}

#[derive(Default)]
pub struct Highlighter;

impl Layer for Highlighter {
    fn recompute(&mut self, doc: &Document) -> Changeset {
        diff_layer(doc, |k| k == KEY, &rules(doc.chars())).expect("rules lie inside the document")
    }
}
