//! Attributed text: `(text, pool, per-character attribute sets)`.

use std::fmt;

use crate::attrs::{apply_attrs, duplicate_key, AttrSet};
use crate::builder::ChangesetBuilder;
use crate::changeset::{ChangeOp, Changeset};
use crate::error::ChangesetError;
use crate::pool::{AttrLookup, AttributePool};

/// A shared document. Indices and lengths count Unicode scalar values.
///
/// `==` compares text, pool and attribute ids exactly. Two replicas that
/// reached the same content along different paths can hold the same
/// attributes under different ids; compare those with [`Document::content_eq`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    text: Vec<char>,
    attrs: Vec<AttrSet>,
    pool: AttributePool,
}

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty document whose pool is `pool`.
    pub fn with_pool(pool: AttributePool) -> Self {
        Document {
            text: Vec::new(),
            attrs: Vec::new(),
            pool,
        }
    }

    /// Plain text without attributes.
    pub fn from_text(text: &str) -> Self {
        let chars: Vec<char> = text.chars().collect();
        Document {
            attrs: vec![AttrSet::new(); chars.len()],
            text: chars,
            pool: AttributePool::new(),
        }
    }

    /// Builds a document from explicit per-character attribute sets,
    /// checking that every id resolves and no character has a key twice.
    pub fn from_parts(
        text: &str,
        pool: AttributePool,
        attrs: Vec<AttrSet>,
    ) -> Result<Self, ChangesetError> {
        let text: Vec<char> = text.chars().collect();
        if attrs.len() != text.len() {
            return Err(ChangesetError::length(format!(
                "{} attribute sets for {} characters",
                attrs.len(),
                text.len()
            )));
        }
        for (index, set) in attrs.iter().enumerate() {
            if let Some(key) = duplicate_key(set, &pool)? {
                return Err(ChangesetError::BadDocument {
                    index,
                    detail: format!("key {key:?} assigned twice"),
                });
            }
        }
        Ok(Document { text, attrs, pool })
    }

    /// Replays a snapshot (a changeset from the empty text) over `pool`.
    pub fn from_snapshot(pool: AttributePool, snapshot: &Changeset) -> Result<Self, ChangesetError> {
        Document::with_pool(pool).apply(snapshot)
    }

    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.text
    }

    pub fn text(&self) -> String {
        self.text.iter().collect()
    }

    pub fn pool(&self) -> &AttributePool {
        &self.pool
    }

    /// Attribute ids of every character.
    pub fn attr_sets(&self) -> &[AttrSet] {
        &self.attrs
    }

    pub fn attrs_at(&self, index: usize) -> &AttrSet {
        &self.attrs[index]
    }

    /// `(key, value)` pairs of the character at `index`, sorted by key.
    pub fn resolved_attrs(&self, index: usize) -> Vec<(&str, &str)> {
        let mut out: Vec<(&str, &str)> = self.attrs[index]
            .iter()
            .filter_map(|id| self.pool.get(id))
            .map(|a| (a.key.as_str(), a.value.as_str()))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn attr_value(&self, index: usize, key: &str) -> Option<&str> {
        self.attrs[index]
            .iter()
            .filter_map(|id| self.pool.get(id))
            .find(|a| a.key == key)
            .map(|a| a.value.as_str())
    }

    /// Same text and same resolved attributes, regardless of pool numbering.
    pub fn content_eq(&self, other: &Document) -> bool {
        self.text == other.text
            && (0..self.len()).all(|i| self.resolved_attrs(i) == other.resolved_attrs(i))
    }

    /// Applies `cs`, returning the new document.
    pub fn apply(&self, cs: &Changeset) -> Result<Document, ChangesetError> {
        cs.validate(&self.pool)?;
        if cs.base_len() != self.len() {
            return Err(ChangesetError::length(format!(
                "changeset expects base length {} but document has {}",
                cs.base_len(),
                self.len()
            )));
        }
        let mut pool = self.pool.clone();
        pool.extend_new(cs.new_pool());

        let mut text = Vec::with_capacity(cs.new_len());
        let mut attrs = Vec::with_capacity(cs.new_len());
        let mut pos = 0usize;
        for op in cs.ops() {
            match op {
                ChangeOp::Insert { text: t, attrs: s } => {
                    let set = apply_attrs(&AttrSet::new(), s, &pool)?;
                    for c in t.chars() {
                        text.push(c);
                        attrs.push(set.clone());
                    }
                }
                ChangeOp::Delete(n) => pos += n,
                ChangeOp::Keep { len, attrs: s } => {
                    text.extend_from_slice(&self.text[pos..pos + len]);
                    if s.is_empty() {
                        attrs.extend_from_slice(&self.attrs[pos..pos + len]);
                    } else {
                        for existing in &self.attrs[pos..pos + len] {
                            attrs.push(apply_attrs(existing, s, &pool)?);
                        }
                    }
                    pos += len;
                }
            }
        }
        text.extend_from_slice(&self.text[pos..]);
        attrs.extend_from_slice(&self.attrs[pos..]);
        debug_assert_eq!(text.len(), cs.new_len());
        Ok(Document { text, attrs, pool })
    }

    /// The changeset that, applied to an empty document carrying this
    /// document's pool, reproduces this document.
    pub fn snapshot(&self) -> Changeset {
        let mut b = ChangesetBuilder::new(0, &self.pool);
        let mut start = 0;
        while start < self.len() {
            let set = &self.attrs[start];
            let mut end = start + 1;
            while end < self.len() && &self.attrs[end] == set {
                end += 1;
            }
            let run: String = self.text[start..end].iter().collect();
            b.insert_ids(&run, set.clone());
            start = end;
        }
        b.finish().expect("a document's own runs always form a valid snapshot")
    }

    /// A changeset turning `self` into `target` (compared by resolved
    /// attributes), expressed against `self`'s pool. The unchanged common
    /// prefix and suffix are kept; attribute differences inside them become
    /// keeps with attributes.
    pub fn diff_to(&self, target: &Document) -> Changeset {
        let (a, b) = (&self.text, &target.text);
        let mut prefix = 0;
        while prefix < a.len() && prefix < b.len() && a[prefix] == b[prefix] {
            prefix += 1;
        }
        let mut suffix = 0;
        while suffix < a.len() - prefix
            && suffix < b.len() - prefix
            && a[a.len() - 1 - suffix] == b[b.len() - 1 - suffix]
        {
            suffix += 1;
        }
        let mut builder = ChangesetBuilder::new(self.len(), &self.pool);
        let restyle = |builder: &mut ChangesetBuilder<'_>, from: usize, to: usize, delta: isize| {
            for i in from..to {
                let have = self.resolved_attrs(i);
                let want = target.resolved_attrs((i as isize + delta) as usize);
                let mut change: Vec<(&str, &str)> = want
                    .iter()
                    .filter(|kv| !have.contains(kv))
                    .copied()
                    .collect();
                for (k, _) in &have {
                    if !want.iter().any(|(wk, _)| wk == k) {
                        change.push((k, ""));
                    }
                }
                builder.keep(1, &change);
            }
        };
        restyle(&mut builder, 0, prefix, 0);
        builder.remove(a.len() - prefix - suffix);
        let mut i = prefix;
        while i < b.len() - suffix {
            let set = &target.attrs[i];
            let mut j = i + 1;
            while j < b.len() - suffix && &target.attrs[j] == set {
                j += 1;
            }
            let run: String = b[i..j].iter().collect();
            builder.insert(&run, &target.resolved_attrs(i));
            i = j;
        }
        let delta = b.len() as isize - a.len() as isize;
        restyle(&mut builder, a.len() - suffix, a.len(), delta);
        builder
            .finish()
            .expect("diff of two valid documents is a valid changeset")
    }
}

impl fmt::Display for Document {
    /// Text with `[key=value|...]run[/]` markers around attributed runs.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut i = 0;
        while i < self.len() {
            let set = &self.attrs[i];
            let mut j = i + 1;
            while j < self.len() && &self.attrs[j] == set {
                j += 1;
            }
            let run: String = self.text[i..j].iter().collect();
            if set.is_empty() {
                f.write_str(&run)?;
            } else {
                let labels: Vec<String> = self
                    .resolved_attrs(i)
                    .into_iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect();
                write!(f, "[{}]{}[/]", labels.join("|"), run)?;
            }
            i = j;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_into_empty_document() {
        let cs = Changeset::insertion("hello");
        let doc = Document::new().apply(&cs).unwrap();
        assert_eq!(doc.text(), "hello");
        assert!(doc.attr_sets().iter().all(AttrSet::is_empty));
    }

    #[test]
    fn identity_leaves_document_alone() {
        let doc = Document::from_text("abc");
        assert_eq!(doc.apply(&Changeset::identity(3)).unwrap(), doc);
        assert!(doc.apply(&Changeset::identity(2)).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let mut pool = AttributePool::new();
        let bold = pool.intern("bold", "true");
        let attrs = vec![
            AttrSet::from_ids([bold]),
            AttrSet::from_ids([bold]),
            AttrSet::new(),
        ];
        let doc = Document::from_parts("abc", pool.clone(), attrs).unwrap();
        let snap = doc.snapshot();
        assert_eq!(snap.base_len(), 0);
        assert_eq!(Document::from_snapshot(pool, &snap).unwrap(), doc);
        assert_eq!(doc.to_string(), "[bold=true]ab[/]c");
    }

    #[test]
    fn diff_reaches_target_content() {
        let mut pool = AttributePool::new();
        let bold = pool.intern("bold", "true");
        let a = Document::from_parts(
            "hello world",
            pool.clone(),
            (0..11).map(|i| if i < 5 { AttrSet::from_ids([bold]) } else { AttrSet::new() }).collect(),
        )
        .unwrap();
        let b = Document::from_text("help world!");
        let cs = a.diff_to(&b);
        assert!(a.apply(&cs).unwrap().content_eq(&b));
        assert!(a.diff_to(&a).is_identity());
    }

    #[test]
    fn duplicate_key_in_document_rejected() {
        let mut pool = AttributePool::new();
        let a = pool.intern("author", "p1");
        let b = pool.intern("author", "p2");
        let err = Document::from_parts("x", pool, vec![AttrSet::from_ids([a, b])]);
        assert!(matches!(err, Err(ChangesetError::BadDocument { index: 0, .. })));
    }
}
