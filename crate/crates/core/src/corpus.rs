//! Documents, text preprocessing and TF-IDF view matrices.
//!
//! A document always carries its raw text (the technical view). Named-entity
//! and domain-term annotations are ingested from sidecar files produced by
//! external tools; a document with both kinds of annotation belongs to the
//! privileged subset used to learn the initial clustering model.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub raw_text: String,
    #[serde(default)]
    pub ne_annotations: Vec<String>,
    #[serde(default)]
    pub dt_annotations: Vec<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            raw_text: raw_text.into(),
            ne_annotations: Vec::new(),
            dt_annotations: Vec::new(),
        }
    }

    pub fn with_annotations(mut self, ne: &[&str], dt: &[&str]) -> Self {
        self.ne_annotations = ne.iter().map(|s| s.to_string()).collect();
        self.dt_annotations = dt.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn is_privileged(&self) -> bool {
        !self.ne_annotations.is_empty() && !self.dt_annotations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    /// Validates id uniqueness and non-empty text.
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        for doc in &docs {
            if doc.doc_id.is_empty() || doc.doc_id.contains(char::is_whitespace) {
                return Err(Error::Corpus(format!(
                    "doc_id {:?} is empty or contains whitespace",
                    doc.doc_id
                )));
            }
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(Error::Corpus(format!("duplicate doc_id {:?}", doc.doc_id)));
            }
            if doc.raw_text.is_empty() {
                return Err(Error::Corpus(format!("doc {:?} has empty text", doc.doc_id)));
            }
        }
        Ok(Corpus { docs })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.docs.iter().find(|d| d.doc_id == doc_id)
    }

    /// Total number of documents.
    pub fn n(&self) -> usize {
        self.docs.len()
    }

    /// Documents carrying both privileged views.
    pub fn m(&self) -> usize {
        self.docs.iter().filter(|d| d.is_privileged()).count()
    }

    /// Documents with at least one named entity.
    pub fn r(&self) -> usize {
        self.docs.iter().filter(|d| !d.ne_annotations.is_empty()).count()
    }

    /// Documents with at least one domain term.
    pub fn s(&self) -> usize {
        self.docs.iter().filter(|d| !d.dt_annotations.is_empty()).count()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.doc_id.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Technical,
    NamedEntity,
    DomainTerm,
}

impl View {
    pub const ALL: [View; 3] = [View::Technical, View::NamedEntity, View::DomainTerm];

    pub fn as_str(self) -> &'static str {
        match self {
            View::Technical => "technical",
            View::NamedEntity => "named_entity",
            View::DomainTerm => "domain_term",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "technical" => Ok(View::Technical),
            "named_entity" => Ok(View::NamedEntity),
            "domain_term" => Ok(View::DomainTerm),
            other => Err(Error::Config(format!("unknown view {other:?}"))),
        }
    }
}

/// A total term transform applied after stopword removal.
pub trait Stemmer: Send + Sync {
    fn stem(&self, term: &str) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityStemmer;

impl Stemmer for IdentityStemmer {
    fn stem(&self, term: &str) -> String {
        term.to_string()
    }
}

impl<F> Stemmer for F
where
    F: Fn(&str) -> String + Send + Sync,
{
    fn stem(&self, term: &str) -> String {
        self(term)
    }
}

/// Lowercases, splits on non-letter boundaries, drops stopwords and stems.
///
/// Stopwords are matched against the lowercased token before stemming.
pub fn preprocess(raw_text: &str, stopwords: &HashSet<String>, stemmer: &dyn Stemmer) -> Vec<String> {
    raw_text
        .split(|c: char| !c.is_alphabetic())
        .filter(|tok| !tok.is_empty())
        .map(str::to_lowercase)
        .filter(|tok| !stopwords.contains(tok))
        .map(|tok| stemmer.stem(&tok))
        .filter(|tok| !tok.is_empty())
        .collect()
}

/// Stopword set and stemmer bundled for repeated use.
#[derive(Clone)]
pub struct Preprocessor {
    pub stopwords: HashSet<String>,
    pub stemmer: Arc<dyn Stemmer>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            stopwords: HashSet::new(),
            stemmer: Arc::new(IdentityStemmer),
        }
    }
}

impl fmt::Debug for Preprocessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Preprocessor")
            .field("stopwords", &self.stopwords.len())
            .finish_non_exhaustive()
    }
}

impl Preprocessor {
    pub fn with_stopwords<I, S>(stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Preprocessor {
            stopwords: stopwords.into_iter().map(|s| s.into().to_lowercase()).collect(),
            ..Default::default()
        }
    }

    pub fn run(&self, raw_text: &str) -> Vec<String> {
        preprocess(raw_text, &self.stopwords, self.stemmer.as_ref())
    }

    /// Terms of `doc` in the given view. Annotations are whole terms:
    /// lowercased with whitespace collapsed, never split or stemmed.
    pub fn terms(&self, doc: &Document, view: View) -> Vec<String> {
        match view {
            View::Technical => self.run(&doc.raw_text),
            View::NamedEntity => normalize_annotations(&doc.ne_annotations),
            View::DomainTerm => normalize_annotations(&doc.dt_annotations),
        }
    }
}

fn normalize_annotations(raw: &[String]) -> Vec<String> {
    raw.iter()
        .map(|a| a.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
        .filter(|a| !a.is_empty())
        .collect()
}

/// Sparse row: `(term index, value)` pairs sorted by term index.
pub type SparseRow = Vec<(usize, f64)>;

/// TF-IDF term-value matrix for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrix {
    pub view: View,
    pub row_ids: Vec<String>,
    /// Sorted lexicographically; column `j` is `vocabulary[j]`.
    pub vocabulary: Vec<String>,
    /// L2-normalised TF-IDF weights.
    pub rows: Vec<SparseRow>,
    /// Raw term counts over the same vocabulary, one entry per row.
    pub counts: Vec<Vec<(usize, u32)>>,
    index: HashMap<String, usize>,
}

impl ViewMatrix {
    pub fn from_parts(
        view: View,
        row_ids: Vec<String>,
        vocabulary: Vec<String>,
        rows: Vec<SparseRow>,
        counts: Vec<Vec<(usize, u32)>>,
    ) -> Result<Self> {
        let index = row_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let m = ViewMatrix {
            view,
            row_ids,
            vocabulary,
            rows,
            counts,
            index,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn row_index(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    pub fn row(&self, doc_id: &str) -> Option<&SparseRow> {
        self.row_index(doc_id).map(|i| &self.rows[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.index.contains_key(doc_id)
    }

    /// Checks non-negativity, unit row norms, column coverage and shape.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invariant(format!("{} view: {msg}", self.view)));
        if self.rows.len() != self.row_ids.len() || self.counts.len() != self.row_ids.len() {
            return bad("row count mismatch".into());
        }
        if self.index.len() != self.row_ids.len() {
            return bad("duplicate row id".into());
        }
        if self.vocabulary.windows(2).any(|w| w[0] >= w[1]) {
            return bad("vocabulary not strictly sorted".into());
        }
        let mut used = vec![false; self.vocabulary.len()];
        for (id, row) in self.row_ids.iter().zip(&self.rows) {
            let mut norm = 0.0;
            let mut last = None;
            for &(j, v) in row {
                if j >= self.vocabulary.len() || last.is_some_and(|l| l >= j) {
                    return bad(format!("row {id}: bad column index {j}"));
                }
                if !(v > 0.0) || !v.is_finite() {
                    return bad(format!("row {id}: non-positive weight"));
                }
                last = Some(j);
                used[j] = true;
                norm += v * v;
            }
            if (norm.sqrt() - 1.0).abs() >= 1e-9 {
                return bad(format!("row {id}: norm {} is not 1", norm.sqrt()));
            }
        }
        if let Some(j) = used.iter().position(|u| !u) {
            return bad(format!("all-zero column {:?}", self.vocabulary[j]));
        }
        Ok(())
    }

    /// Text encoding: header, vocabulary line, then one row per document with
    /// `column:count:weight` cells. Weights use shortest round-trip notation.
    pub fn encode(&self) -> String {
        let mut out = format!("view\t{}\n", self.view);
        out.push_str(&self.vocabulary.join("\t"));
        out.push('\n');
        for (i, id) in self.row_ids.iter().enumerate() {
            out.push_str(id);
            for (&(j, w), &(_, c)) in self.rows[i].iter().zip(&self.counts[i]) {
                out.push_str(&format!("\t{j}:{c}:{w}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let view = lines
            .next()
            .and_then(|h| h.strip_prefix("view\t"))
            .ok_or_else(|| Error::parse(path, 1, "missing view header"))?
            .parse()?;
        let vocab_line = lines.next().ok_or_else(|| Error::parse(path, 2, "missing vocabulary"))?;
        let vocabulary: Vec<String> = if vocab_line.is_empty() {
            Vec::new()
        } else {
            vocab_line.split('\t').map(str::to_string).collect()
        };
        let (mut row_ids, mut rows, mut counts) = (Vec::new(), Vec::new(), Vec::new());
        for (ln, line) in lines.enumerate() {
            let lineno = ln + 3;
            let mut cells = line.split('\t');
            let id = cells.next().unwrap_or_default().to_string();
            let (mut row, mut crow) = (Vec::new(), Vec::new());
            for cell in cells {
                let mut parts = cell.split(':');
                let parsed = (|| {
                    let j: usize = parts.next()?.parse().ok()?;
                    let c: u32 = parts.next()?.parse().ok()?;
                    let w: f64 = parts.next()?.parse().ok()?;
                    Some((j, c, w))
                })();
                let (j, c, w) = parsed.ok_or_else(|| Error::parse(path, lineno, format!("bad cell {cell:?}")))?;
                row.push((j, w));
                crow.push((j, c));
            }
            row_ids.push(id);
            rows.push(row);
            counts.push(crow);
        }
        ViewMatrix::from_parts(view, row_ids, vocabulary, rows, counts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipEntry {
    pub doc_id: String,
    pub view: View,
    pub reason: String,
}

/// Documents excluded from a view, with reasons.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkipReport {
    pub entries: Vec<SkipEntry>,
}

impl SkipReport {
    pub fn push(&mut self, doc_id: &str, view: View, reason: impl Into<String>) {
        self.entries.push(SkipEntry {
            doc_id: doc_id.to_string(),
            view,
            reason: reason.into(),
        });
    }

    pub fn extend(&mut self, other: SkipReport) {
        self.entries.extend(other.entries);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn encode(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.doc_id, e.view, e.reason))
            .collect()
    }
}

/// Builds the TF-IDF matrix of one view.
///
/// Weight is `tf · ln(n_view / df)` with raw-count tf, where `n_view` counts
/// documents having at least one term in the view. Terms present in every
/// such document are dropped; rows are L2-normalised. Documents with no term
/// left are reported in the returned [`SkipReport`] and get no row.
pub fn build_view_matrix(corpus: &Corpus, view: View, pre: &Preprocessor) -> (ViewMatrix, SkipReport) {
    let mut skipped = SkipReport::default();
    let mut bags: Vec<(&str, BTreeMap<String, u32>)> = Vec::new();
    for doc in corpus.docs() {
        let terms = pre.terms(doc, view);
        if terms.is_empty() {
            if view == View::Technical {
                skipped.push(&doc.doc_id, view, "no terms after preprocessing");
            }
            continue;
        }
        let mut bag = BTreeMap::new();
        for t in terms {
            *bag.entry(t).or_insert(0u32) += 1;
        }
        bags.push((&doc.doc_id, bag));
    }

    let n_view = bags.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, bag) in &bags {
        for term in bag.keys() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let vocabulary: Vec<String> = df
        .iter()
        .filter(|(_, &d)| d < n_view)
        .map(|(t, _)| t.to_string())
        .collect();
    let column: HashMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(j, t)| (t.as_str(), j))
        .collect();

    let (mut row_ids, mut rows, mut counts) = (Vec::new(), Vec::new(), Vec::new());
    for (doc_id, bag) in &bags {
        let mut row = Vec::new();
        let mut crow = Vec::new();
        for (term, &tf) in bag {
            if let Some(&j) = column.get(term.as_str()) {
                let idf = (n_view as f64 / df[term.as_str()] as f64).ln();
                row.push((j, tf as f64 * idf));
                crow.push((j, tf));
            }
        }
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            skipped.push(doc_id, view, "all-zero vector after weighting");
            continue;
        }
        for (_, v) in &mut row {
            *v /= norm;
        }
        row_ids.push(doc_id.to_string());
        rows.push(row);
        counts.push(crow);
    }

    // A skipped row can leave a column unused; prune and reindex.
    let mut used = vec![false; vocabulary.len()];
    for row in &rows {
        for &(j, _) in row {
            used[j] = true;
        }
    }
    let (vocabulary, rows, counts) = if used.iter().all(|&u| u) {
        (vocabulary, rows, counts)
    } else {
        let mut remap = vec![usize::MAX; used.len()];
        let mut kept = Vec::new();
        for (j, term) in vocabulary.into_iter().enumerate() {
            if used[j] {
                remap[j] = kept.len();
                kept.push(term);
            }
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|(j, v)| (remap[j], v)).collect())
            .collect();
        let counts = counts
            .into_iter()
            .map(|r: Vec<(usize, u32)>| r.into_iter().map(|(j, c)| (remap[j], c)).collect())
            .collect();
        (kept, rows, counts)
    };

    let matrix = ViewMatrix::from_parts(view, row_ids, vocabulary, rows, counts)
        .expect("freshly built view matrix satisfies its invariants");
    (matrix, skipped)
}

/// Partition of the corpus ids into the privileged subset and the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivilegedSplit {
    /// Documents with both named entities and domain terms, in corpus order.
    pub privileged: Vec<String>,
    pub remainder: Vec<String>,
}

pub fn split_privileged(corpus: &Corpus) -> Result<PrivilegedSplit> {
    let (privileged, remainder): (Vec<&Document>, Vec<&Document>) =
        corpus.docs().iter().partition(|d| d.is_privileged());
    if privileged.len() < 2 {
        return Err(Error::Config(format!(
            "privileged subset has {} document(s); at least 2 are needed to cluster",
            privileged.len()
        )));
    }
    Ok(PrivilegedSplit {
        privileged: privileged.iter().map(|d| d.doc_id.clone()).collect(),
        remainder: remainder.iter().map(|d| d.doc_id.clone()).collect(),
    })
}

/// Loads the corpus file plus optional annotation sidecars.
///
/// The corpus is JSON lines (`{"doc_id": .., "text": ..}`) when the first
/// non-blank line starts with `{`, otherwise `doc_id<TAB>text` lines.
/// Sidecars hold `doc_id<TAB>annotation` lines; repeated lines count as
/// repeated occurrences.
pub fn load_corpus(corpus_path: &Path, ne_path: Option<&Path>, dt_path: Option<&Path>) -> Result<Corpus> {
    let text = fs::read_to_string(corpus_path).map_err(|e| Error::io(corpus_path, e))?;
    let json = text.trim_start().starts_with('{');
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = if json {
            #[derive(Deserialize)]
            struct Record {
                doc_id: String,
                text: String,
            }
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| Error::parse(corpus_path, i + 1, e.to_string()))?;
            Document::new(rec.doc_id, rec.text)
        } else {
            let (id, body) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(corpus_path, i + 1, "expected doc_id<TAB>text"))?;
            Document::new(id.trim(), body)
        };
        docs.push(doc);
    }
    let position: HashMap<String, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.doc_id.clone(), i))
        .collect();
    for (path, view) in [(ne_path, View::NamedEntity), (dt_path, View::DomainTerm)] {
        let Some(path) = path else { continue };
        for (doc_id, annotation) in read_pairs(path)? {
            let Some(&i) = position.get(&doc_id) else {
                log::warn!("{}: annotation for unknown doc {doc_id:?} ignored", path.display());
                continue;
            };
            match view {
                View::NamedEntity => docs[i].ne_annotations.push(annotation),
                _ => docs[i].dt_annotations.push(annotation),
            }
        }
    }
    Corpus::new(docs)
}

/// Reads `key<TAB>value` lines, skipping blank lines and `#` comments.
pub(crate) fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line
            .split_once('\t')
            .or_else(|| line.split_once(','))
            .ok_or_else(|| Error::parse(path, i + 1, "expected two tab-separated fields"))?;
        out.push((a.trim().to_string(), b.trim().to_string()));
    }
    Ok(out)
}

/// Writes the corpus as JSON lines plus the two annotation sidecars.
pub fn write_corpus(corpus: &Corpus, corpus_path: &Path, ne_path: &Path, dt_path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Record<'a> {
        doc_id: &'a str,
        text: &'a str,
    }
    let mut body = String::new();
    let mut ne = String::new();
    let mut dt = String::new();
    for doc in corpus.docs() {
        let rec = Record {
            doc_id: &doc.doc_id,
            text: &doc.raw_text,
        };
        body.push_str(&serde_json::to_string(&rec).expect("plain strings serialize"));
        body.push('\n');
        for a in &doc.ne_annotations {
            ne.push_str(&format!("{}\t{}\n", doc.doc_id, a));
        }
        for a in &doc.dt_annotations {
            dt.push_str(&format!("{}\t{}\n", doc.doc_id, a));
        }
    }
    for (path, text) in [(corpus_path, body), (ne_path, ne), (dt_path, dt)] {
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// One stopword per line; blank lines and `#` comments ignored.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}
