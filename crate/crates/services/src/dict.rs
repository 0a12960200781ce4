//! Term dictionaries: UTF-8 lines `surface<TAB>cd<TAB>name`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::DictLoadError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermDictionaryEntry {
    pub surface: String,
    pub cd: String,
    pub name: String,
}

/// Entries keyed by their lowercased surface words.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    by_words: BTreeMap<Vec<String>, Vec<TermDictionaryEntry>>,
    longest: usize,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, surface: &str, cd: &str, name: &str) {
        let words = words_of(surface);
        if words.is_empty() {
            return;
        }
        self.longest = self.longest.max(words.len());
        self.by_words.entry(words.clone()).or_default().push(TermDictionaryEntry {
            surface: words.join(" "),
            cd: cd.to_owned(),
            name: name.to_owned(),
        });
    }

    /// Parses dictionary text. Blank lines and `#` lines are skipped.
    pub fn parse(text: &str) -> Result<Self, DictLoadError> {
        let mut dict = Dictionary::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [surface, cd, name] = fields[..] else {
                return Err(DictLoadError::Format {
                    line: n + 1,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            };
            if surface.trim().is_empty() {
                return Err(DictLoadError::Format {
                    line: n + 1,
                    reason: "empty surface".into(),
                });
            }
            dict.add(surface, cd.trim(), name.trim());
        }
        Ok(dict)
    }

    pub fn load(path: &Path) -> Result<Self, DictLoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| DictLoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.by_words.is_empty()
    }

    /// Longest phrase length in words.
    pub fn longest(&self) -> usize {
        self.longest
    }

    pub fn senses(&self, words: &[String]) -> Option<&[TermDictionaryEntry]> {
        self.by_words.get(words).map(Vec::as_slice)
    }
}

fn words_of(surface: &str) -> Vec<String> {
    surface.split_whitespace().map(str::to_lowercase).collect()
}
