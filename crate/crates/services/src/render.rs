//! Reference rendering of presentation attributes.

use redsys_core::Document;

use crate::fold::{DISPLAY, FOLD, HIDDEN};

/// Drops `fold=hidden` characters and shows `display` values in their place.
pub fn render(doc: &Document) -> String {
    let mut out = String::new();
    for (i, &c) in doc.chars().iter().enumerate() {
        if let Some(shown) = doc.attr_value(i, DISPLAY) {
            out.push_str(shown);
        } else if doc.attr_value(i, FOLD) != Some(HIDDEN) {
            out.push(c);
        }
    }
    out
}
