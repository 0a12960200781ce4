//! Command completion for `autocomplete.stex` events.

use redsys_core::wire::{EventAction, EventItem, EventMessage};
use redsys_core::{ChangesetBuilder, Document};
use redsys_sdk::{Context, Service};

pub const URI: &str = "autocomplete.stex";

pub const COMMANDS: &[&str] = &[
    "begin", "end", "frac", "STRcopy", "STRlabel", "termref", "symref", "defi", "trefi", "importmodule",
];

/// Suggestions for the `\command` prefix ending at `pos`.
pub fn suggest(doc: &Document, rev: u64, pos: usize) -> Vec<EventItem> {
    let chars = doc.chars();
    let pos = pos.min(chars.len());
    let mut start = pos;
    while start > 0 && chars[start - 1].is_alphabetic() {
        start -= 1;
    }
    if start == 0 || chars[start - 1] != '\\' {
        return Vec::new();
    }
    let prefix: String = chars[start..pos].iter().collect();
    COMMANDS
        .iter()
        .filter(|c| c.starts_with(&prefix))
        .map(|c| {
            let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
            b.keep(pos, &[]).insert(&c[prefix.len()..], &[]);
            EventItem {
                label: format!("\\{c}"),
                action: Some(EventAction {
                    base_rev: rev,
                    changeset: b.finish().expect("position inside the document"),
                }),
            }
        })
        .collect()
}

#[derive(Default)]
pub struct Autocomplete;

impl Service for Autocomplete {
    fn on_event(&mut self, ctx: &mut Context<'_>, event: &EventMessage) -> Option<Vec<EventItem>> {
        if event.uri != URI {
            return Some(Vec::new());
        }
        let pos = event
            .param("pos")
            .and_then(|p| p.parse().ok())
            .unwrap_or(ctx.doc().len());
        Some(suggest(ctx.doc(), ctx.rev(), pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completes_command_prefix() {
        let doc = Document::from_text("a \\te b");
        let items = suggest(&doc, 3, 5);
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].label, "\\termref");
        let done = doc.apply(&items[0].action.as_ref().unwrap().changeset).unwrap();
        assert_eq!(done.text(), "a \\termref b");
        assert!(suggest(&doc, 3, 1).is_empty());
        assert_eq!(suggest(&doc, 3, 3).len(), COMMANDS.len());
    }
}
