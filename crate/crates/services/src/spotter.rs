//! Dictionary-based term spotting with simulated processing latency.

use std::ops::Range;
use std::time::Duration;

use redsys_core::wire::{EventAction, EventItem, EventMessage};
use redsys_core::{
    diff_layer_at, touched_ranges, AttributeRangeRule, Changeset, ChangesetBuilder, Document,
};
use redsys_sdk::{Context, ProcessingToken, Service, SubmitResult};

use crate::dict::{Dictionary, TermDictionaryEntry};
use crate::lexer::{slice, tokenize, TokenKind};

pub const SPOT: &str = "spot";
pub const UI: &str = "ui";
pub const MENU_PREFIX: &str = "contextmenu.spotter_plugin.";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermMatch {
    pub span: Range<usize>,
    pub senses: Vec<TermDictionaryEntry>,
}

/// Whole-word, case-insensitive matches outside math and command arguments,
/// longest first, left to right.
pub fn find_matches(text: &[char], dict: &Dictionary) -> Vec<TermMatch> {
    if dict.is_empty() {
        return Vec::new();
    }
    let toks = tokenize(text);
    // runs of eligible words separated only by whitespace
    let mut runs: Vec<Vec<(String, Range<usize>)>> = vec![Vec::new()];
    for t in &toks {
        match t.kind {
            TokenKind::Whitespace => {}
            TokenKind::Word if !t.math && !t.in_arg && text[t.span.start].is_alphanumeric() => {
                runs.last_mut().expect("non-empty").push((slice(text, &t.span).to_lowercase(), t.span.clone()));
            }
            _ => {
                if !runs.last().expect("non-empty").is_empty() {
                    runs.push(Vec::new());
                }
            }
        }
    }
    let mut out = Vec::new();
    for run in runs {
        let mut i = 0;
        while i < run.len() {
            let found = (1..=dict.longest().min(run.len() - i)).rev().find_map(|n| {
                let words: Vec<String> = run[i..i + n].iter().map(|(w, _)| w.clone()).collect();
                dict.senses(&words).map(|s| (n, s))
            });
            match found {
                Some((n, senses)) => {
                    out.push(TermMatch {
                        span: run[i].1.start..run[i + n - 1].1.end,
                        senses: senses.to_vec(),
                    });
                    i += n;
                }
                None => i += 1,
            }
        }
    }
    out
}

fn owns(doc: &Document, i: usize, key: &str) -> bool {
    match key {
        SPOT => true,
        UI => doc.attr_value(i, UI).is_some_and(|v| v.starts_with(MENU_PREFIX)),
        _ => false,
    }
}

/// The changeset that makes the spot layer match `dict` on `doc`.
pub fn spot_layer(doc: &Document, dict: &Dictionary) -> Changeset {
    let mut rules = Vec::new();
    for (n, m) in find_matches(doc.chars(), dict).into_iter().enumerate() {
        rules.extend(AttributeRangeRule::over(SPOT, "1", m.span.clone()));
        rules.extend(AttributeRangeRule::over(UI, &format!("{MENU_PREFIX}{n}"), m.span));
    }
    diff_layer_at(doc, |i, k| owns(doc, i, k), &rules).expect("matches lie inside the document")
}

/// The edit that wraps `span` in `\termref{cd=.., name=..}{..}`.
pub fn annotate(doc: &Document, span: Range<usize>, sense: &TermDictionaryEntry) -> Changeset {
    let mut b = ChangesetBuilder::new(doc.len(), doc.pool());
    b.keep(span.start, &[])
        .insert(&format!("\\termref{{cd={}, name={}}}{{", sense.cd, sense.name), &[])
        .keep(span.len(), &[])
        .insert("}", &[]);
    b.finish().expect("span lies inside the document")
}

/// Context-menu items for match `index` of the current document.
pub fn menu_items(doc: &Document, rev: u64, dict: &Dictionary, index: usize) -> Option<Vec<EventItem>> {
    let m = find_matches(doc.chars(), dict).into_iter().nth(index)?;
    Some(
        m.senses
            .iter()
            .map(|s| EventItem {
                label: format!("Annotate as {}/{}", s.cd, s.name),
                action: Some(EventAction {
                    base_rev: rev,
                    changeset: annotate(doc, m.span.clone(), s),
                }),
            })
            .collect(),
    )
}

struct Job {
    tag: u64,
    rev: u64,
    changeset: Changeset,
    token: ProcessingToken,
}

#[derive(Clone, Debug)]
pub struct SpotterOptions {
    pub latency: Duration,
    /// Submit stale results even when an edit touched them meanwhile.
    pub ignore_cancellation: bool,
}

impl Default for SpotterOptions {
    fn default() -> Self {
        SpotterOptions {
            latency: Duration::ZERO,
            ignore_cancellation: false,
        }
    }
}

/// Spots terms off the callback thread. Results are submitted against the
/// revision processing started from; an overlapping edit cancels the run and
/// a merge conflict restarts it on the current head.
pub struct Spotter {
    dict: Dictionary,
    options: SpotterOptions,
    job: Option<Job>,
    next_tag: u64,
    in_flight: bool,
    dirty: bool,
}

impl Spotter {
    pub fn new(dict: Dictionary, options: SpotterOptions) -> Self {
        Spotter {
            dict,
            options,
            job: None,
            next_tag: 0,
            in_flight: false,
            dirty: false,
        }
    }

    fn start(&mut self, ctx: &mut Context<'_>) {
        if self.job.is_some() || self.in_flight {
            self.dirty = true;
            return;
        }
        self.dirty = false;
        let changeset = spot_layer(ctx.doc(), &self.dict);
        if changeset.is_identity() {
            return;
        }
        self.next_tag += 1;
        let tag = self.next_tag;
        let token = ctx.token(touched_ranges(&changeset));
        self.job = Some(Job {
            tag,
            rev: ctx.rev(),
            changeset,
            token,
        });
        let handle = ctx.handle();
        let latency = self.options.latency;
        std::thread::spawn(move || {
            std::thread::sleep(latency);
            handle.wake(tag);
        });
    }
}

impl Service for Spotter {
    fn on_init(&mut self, ctx: &mut Context<'_>) {
        self.job = None;
        self.in_flight = false;
        self.start(ctx);
    }

    fn on_update(&mut self, ctx: &mut Context<'_>, _cs: &Changeset, _author: &str) {
        self.start(ctx);
    }

    fn on_wake(&mut self, ctx: &mut Context<'_>, tag: u64) {
        if self.job.as_ref().map(|j| j.tag) != Some(tag) {
            return;
        }
        let job = self.job.take().expect("checked");
        if job.token.is_cancelled() && !self.options.ignore_cancellation {
            log::debug!("spotting from rev {} cancelled", job.rev);
            self.start(ctx);
            return;
        }
        ctx.submit_at(job.rev, job.changeset);
        self.in_flight = true;
    }

    fn on_submit_result(&mut self, ctx: &mut Context<'_>, result: &SubmitResult) {
        self.in_flight = false;
        if self.dirty || matches!(result, SubmitResult::Rejected { .. }) {
            self.start(ctx);
        }
    }

    fn on_event(&mut self, ctx: &mut Context<'_>, event: &EventMessage) -> Option<Vec<EventItem>> {
        let index = event.uri.strip_prefix(MENU_PREFIX)?.parse::<usize>().ok();
        match index.and_then(|n| menu_items(ctx.doc(), ctx.rev(), &self.dict, n)) {
            Some(items) => Some(items),
            None => {
                log::info!("unknown match index in {}", event.uri);
                Some(Vec::new())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict() -> Dictionary {
        let mut d = Dictionary::new();
        d.add("gravitational constant", "physics-constants", "grav-constant");
        d.add("constant", "math", "constant");
        d.add("constant", "physics-constants", "integration");
        d
    }

    #[test]
    fn longest_match_outside_math_and_arguments() {
        let text: Vec<char> = "using Gravitational  constant $constant$ \\termref{x}{constant} constant."
            .chars()
            .collect();
        let m = find_matches(&text, &dict());
        let spans: Vec<String> = m.iter().map(|m| slice(&text, &m.span)).collect();
        assert_eq!(spans, vec!["Gravitational  constant", "constant"]);
        assert_eq!(m[1].senses.len(), 2);
    }

    #[test]
    fn empty_dictionary_is_identity() {
        let doc = Document::from_text("gravitational constant");
        assert!(spot_layer(&doc, &Dictionary::new()).is_identity());
    }

    #[test]
    fn spots_and_annotates() {
        let doc = Document::from_text("using gravitational constant $G$");
        let doc = doc.apply(&spot_layer(&doc, &dict())).unwrap();
        assert_eq!(
            doc.to_string(),
            "using [spot=1|ui=contextmenu.spotter_plugin.0]gravitational constant[/] $G$"
        );
        assert!(spot_layer(&doc, &dict()).is_identity());
        let items = menu_items(&doc, 7, &dict(), 0).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].label, "Annotate as physics-constants/grav-constant");
        let action = items[0].action.as_ref().unwrap();
        assert_eq!(action.base_rev, 7);
        let wrapped = doc.apply(&action.changeset).unwrap();
        assert_eq!(
            wrapped.text(),
            "using \\termref{cd=physics-constants, name=grav-constant}{gravitational constant} $G$"
        );
        let cleared = wrapped.apply(&spot_layer(&wrapped, &dict())).unwrap();
        assert_eq!(cleared.to_string(), wrapped.text());
        assert!(menu_items(&doc, 7, &dict(), 1).is_none());
    }
}
