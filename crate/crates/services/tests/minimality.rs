//! A one-character edit in a large document yields a local highlight change.

use redsys_core::{touched_ranges, ChangesetBuilder, Document};
use redsys_services::{Highlighter, Layer};

fn large_document() -> String {
    let mut s = String::new();
    let mut i = 0;
    while s.len() < 10_000 {
        s.push_str(&format!(
            "Line {i} with $x_{i}$ and \\termref{{cd=a, name=b}}{{term {i}}} % note {i}\n"
        ));
        i += 1;
    }
    s
}

/// Applies an insert of `text` at char `pos` and returns the span touched
/// by the highlighter's follow-up changeset.
fn follow_up(doc: &Document, pos: usize, text: &str) -> Option<std::ops::Range<usize>> {
    let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
    b.keep(pos, &[]).insert(text, &[]);
    let edited = doc.apply(&b.finish().unwrap()).unwrap();
    let cs = Highlighter.recompute(&edited);
    let touched = touched_ranges(&cs);
    Some(touched.first()?.start..touched.last()?.end)
}

#[test]
fn single_character_edit_stays_on_its_line() {
    let text = large_document();
    let doc = Document::from_text(&text);
    let doc = doc.apply(&Highlighter.recompute(&doc)).unwrap();
    let chars = doc.chars();
    let line_start = chars.len() / 2 - (0..chars.len() / 2).rev().take_while(|&i| chars[i] != '\n').count();
    let line_end = line_start + chars[line_start..].iter().position(|&c| c == '\n').unwrap();

    // a letter inside a command name: the command grows by one character
    let cmd = line_start + text[..].chars().skip(line_start).collect::<String>().find("\\termref").unwrap();
    let span = follow_up(&doc, cmd + 2, "x").expect("the new character needs highlighting");
    println!("edit inside command at {}: highlight change spans {span:?} (line {line_start}..{line_end})", cmd + 2);
    assert!(span.start >= line_start && span.end <= line_end + 1);
    assert!(span.len() <= 1);

    // a plain letter in prose changes nothing
    assert_eq!(follow_up(&doc, line_start + 1, "x"), None);

    // an unbalanced `$` re-pairs every later delimiter: the change starts at
    // the edit and runs as far as the math state propagates
    let span = follow_up(&doc, line_start + 1, "$").unwrap();
    println!("unbalanced `$`: highlight change spans {span:?} (line {line_start}..{line_end})");
    assert_eq!(span.start, line_start + 1);

    // a balanced pair stays local
    let span = follow_up(&doc, line_start + 1, "$y$").unwrap();
    println!("balanced `$y$`: highlight change spans {span:?}");
    assert!(span.start >= line_start && span.end <= line_end + 3);
}
