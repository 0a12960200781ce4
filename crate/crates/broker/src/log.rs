//! Append-only revision logs: `<dir>/<docId>.log`, one encoded revision per line.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use redsys_core::wire::{decode_revision, encode_revision, Revision};
use redsys_core::Document;

use crate::error::LogError;

pub struct RevisionLog {
    dir: PathBuf,
    files: HashMap<String, File>,
}

impl RevisionLog {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RevisionLog {
            dir,
            files: HashMap::new(),
        })
    }

    pub fn path_for(dir: &Path, doc_id: &str) -> PathBuf {
        dir.join(format!("{doc_id}.log"))
    }

    pub fn append(&mut self, doc_id: &str, revision: &Revision) -> std::io::Result<()> {
        let file = match self.files.get_mut(doc_id) {
            Some(f) => f,
            None => {
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(Self::path_for(&self.dir, doc_id))?;
                self.files.entry(doc_id.to_owned()).or_insert(f)
            }
        };
        let mut line = encode_revision(revision);
        line.push('\n');
        file.write_all(line.as_bytes())
    }

    /// Every `*.log` file in the directory, by document id.
    pub fn load_all(&self) -> Result<Vec<(String, Vec<Revision>)>, LogError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("log") {
                continue;
            }
            let Some(doc_id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            out.push((doc_id.to_owned(), read_log(&path)?));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}

/// Reads and checks a log file. Lines are numbered from 1.
pub fn read_log(path: &Path) -> Result<Vec<Revision>, LogError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.split(b'\n').enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let revision = decode_revision(&line).map_err(|source| LogError::CorruptLog {
            line: i + 1,
            source,
        })?;
        let expected = out.len() as u64;
        if revision.rev != expected {
            return Err(LogError::Gap {
                line: i + 1,
                expected,
                found: revision.rev,
            });
        }
        out.push(revision);
    }
    Ok(out)
}

/// Folds revisions over the empty document.
pub fn replay(revisions: &[Revision]) -> Result<Document, LogError> {
    let mut doc = Document::new();
    for (i, r) in revisions.iter().enumerate() {
        doc = doc
            .apply(&r.changeset)
            .map_err(|source| LogError::Apply { line: i + 1, source })?;
    }
    Ok(doc)
}
