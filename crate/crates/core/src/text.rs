//! Corpus ingestion and the preprocessing pipeline: lowercase, strip
//! punctuation, drop URLs, currency amounts, numbers and stopwords.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}+").unwrap());
static CURRENCY_START: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{Sc}").unwrap());

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

/// Grade-band midpoints used as regression targets for the five bands
/// 2-3, 4-5, 6-8, 9-10 and 11+.
pub const GRADE_BAND_LABELS: [f64; 5] = [2.5, 4.5, 7.0, 9.5, 11.5];

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: Option<f64>,
}

impl Document {
    pub fn new(id: impl Into<String>, tokens: Vec<String>, label: Option<f64>) -> Self {
        Self {
            id: id.into(),
            tokens,
            label,
        }
    }

    /// Builds a document from raw text through [`tokenize`] and [`remove_stopwords`].
    pub fn from_text(id: impl Into<String>, raw: &str, stops: &StopwordList) -> Self {
        Self::new(id, remove_stopwords(&tokenize(raw), stops), None)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub documents: Vec<Document>,
}

impl Corpus {
    /// Fails if two documents share an id.
    pub fn new(name: impl Into<String>, documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::Validation(format!("duplicate document id {:?}", doc.id)));
            }
            if let Some(label) = doc.label {
                if !label.is_finite() {
                    return Err(Error::Validation(format!(
                        "document {:?} has non-finite label",
                        doc.id
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            documents,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Option<Vec<f64>> {
        self.documents.iter().map(|d| d.label).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// Entries are normalized the same way tokens are (lowercase, punctuation
    /// stripped) so that e.g. `don't` matches the token `dont`. Entries that
    /// normalize to nothing are dropped.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| normalize_token(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        Self { words }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled English list (the 179-word list commonly shipped with NLP toolkits).
    pub fn english() -> Self {
        Self::parse(include_str!("stopwords_en.txt"))
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(contents: &str) -> Self {
        Self::new(
            contents
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&contents))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn normalize_token(raw: &str) -> String {
    let lower: String = raw.to_lowercase().chars().filter(|c| !c.is_uppercase()).collect();
    PUNCTUATION.replace_all(&lower, "").into_owned()
}

fn is_number(token: &str) -> bool {
    token.chars().all(char::is_numeric)
}

/// Lowercases and splits `raw_text` into tokens, dropping URLs, currency
/// amounts, standalone numbers and all Unicode punctuation.
///
/// URL detection runs on the whitespace-delimited token before punctuation
/// is stripped. Number and currency checks run after, so `(1,000)` and
/// `"$5"` are dropped too.
pub fn tokenize(raw_text: &str) -> Vec<String> {
    raw_text
        .split_whitespace()
        .filter_map(|chunk| {
            // some code points (e.g. squared capitals) are uppercase without a lowercase mapping
            let lower: String = chunk.to_lowercase().chars().filter(|c| !c.is_uppercase()).collect();
            if URL_PREFIXES.iter().any(|p| lower.starts_with(p)) {
                return None;
            }
            let token = PUNCTUATION.replace_all(&lower, "");
            if token.is_empty() || is_number(&token) || CURRENCY_START.is_match(&token) {
                return None;
            }
            Some(token.into_owned())
        })
        .collect()
}

pub fn remove_stopwords(tokens: &[String], stops: &StopwordList) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stops.contains(t))
        .cloned()
        .collect()
}

/// Reads a `filename<TAB>label` manifest. Blank lines and `#` comment lines are skipped.
pub fn read_label_manifest(path: &Path) -> Result<BTreeMap<String, f64>> {
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = BTreeMap::new();
    for (lineno, line) in contents.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, value) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno + 1, "expected filename<TAB>label"))?;
        let label: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno + 1, format!("invalid label {value:?}")))?;
        if !label.is_finite() {
            return Err(Error::parse(path, lineno + 1, "label must be finite"));
        }
        if labels.insert(name.trim().to_owned(), label).is_some() {
            return Err(Error::parse(path, lineno + 1, format!("duplicate entry {name:?}")));
        }
    }
    Ok(labels)
}

/// Loads every `*.txt` file in `dir` as one document, ordered by filename.
///
/// Document ids are file stems; manifest rows are keyed by full filename.
pub fn load_corpus(dir: &Path, label_manifest: Option<&Path>, stops: &StopwordList) -> Result<Corpus> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
            let name = entry.file_name().to_string_lossy().into_owned();
            files.insert(name, path);
        }
    }

    let labels = match label_manifest {
        Some(manifest) => read_label_manifest(manifest)?,
        None => BTreeMap::new(),
    };
    let missing: Vec<&str> = labels
        .keys()
        .filter(|name| !files.contains_key(*name))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "label manifest references missing files: {}",
            missing.join(", ")
        )));
    }

    let mut documents = Vec::with_capacity(files.len());
    for (name, path) in &files {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name.clone());
        let mut doc = Document::from_text(id, &raw, stops);
        doc.label = labels.get(name).copied();
        documents.push(doc);
    }

    let corpus_name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Corpus::new(corpus_name, documents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_basic() {
        assert_eq!(tokenize("The Cat, sat!"), toks(&["the", "cat", "sat"]));
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t ").is_empty());
    }

    // Reference regex oracle, written independently of the implementation.
    fn reference_tokenize(raw: &str) -> Vec<String> {
        let url = Regex::new(r"^(https?://|www\.)").unwrap();
        let punct = Regex::new(r"[\p{P}]").unwrap();
        let number = Regex::new(r"^[\p{N}]+$").unwrap();
        let currency = Regex::new(r"^[\p{Sc}]").unwrap();
        let mut out = Vec::new();
        for w in raw.split_whitespace() {
            let w = w.to_lowercase();
            if url.is_match(&w) {
                continue;
            }
            let w = punct.replace_all(&w, "").to_string();
            if w.is_empty() || number.is_match(&w) || currency.is_match(&w) {
                continue;
            }
            out.push(w);
        }
        out
    }

    #[test]
    fn tokenize_drops_urls_currency_numbers() {
        let raw = "Visit http://a.example NOW for $5 5 times";
        let expected = toks(&["visit", "now", "for", "times"]);
        assert_eq!(reference_tokenize(raw), expected);
        assert_eq!(tokenize(raw), expected);
        assert_eq!(
            tokenize("see www.x.org or HTTPS://y.z, 3.14 and 1,000 €20 (£3)"),
            toks(&["see", "or", "and"])
        );
    }

    #[test]
    fn stopwords() {
        let stops = StopwordList::new(["the"]);
        assert_eq!(remove_stopwords(&toks(&["the", "cat"]), &stops), toks(&["cat"]));
        assert_eq!(
            remove_stopwords(&toks(&["cat"]), &StopwordList::empty()),
            toks(&["cat"])
        );
        let stops = StopwordList::new(["a", "c"]);
        assert_eq!(remove_stopwords(&toks(&["a", "b", "a", "c"]), &stops), toks(&["b"]));
    }

    #[test]
    fn english_list_is_normalized() {
        let stops = StopwordList::english();
        assert!(stops.contains("the"));
        assert!(stops.contains("dont"));
        assert!(!stops.contains("don't"));
    }

    #[test]
    fn load_corpus_with_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "Cat sat").unwrap();
        let manifest = dir.path().join("labels.tsv");
        fs::write(&manifest, "a.txt\t2.5\n").unwrap();
        let corpus = load_corpus(dir.path(), Some(&manifest), &StopwordList::empty()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.documents[0].tokens, toks(&["cat", "sat"]));
        assert_eq!(corpus.documents[0].label, Some(2.5));
    }

    #[test]
    fn load_corpus_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = load_corpus(dir.path(), None, &StopwordList::english()).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn load_corpus_missing_file_in_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let files = dir.path().join("docs");
        fs::create_dir(&files).unwrap();
        let manifest = dir.path().join("labels.tsv");
        fs::write(&manifest, "b.txt\t4.5\n").unwrap();
        let err = load_corpus(&files, Some(&manifest), &StopwordList::empty()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("b.txt"));
    }

    #[test]
    fn load_corpus_missing_dir() {
        let err = load_corpus(Path::new("/nonexistent/dir"), None, &StopwordList::empty()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn load_corpus_orders_by_filename_and_never_invents_labels() {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in [("c.txt", "three"), ("a.txt", "one"), ("b.txt", "two")] {
            fs::write(dir.path().join(name), body).unwrap();
        }
        let manifest = dir.path().join("labels.tsv");
        fs::write(&manifest, "b.txt\t7\n").unwrap();
        let corpus = load_corpus(dir.path(), Some(&manifest), &StopwordList::empty()).unwrap();
        let ids: Vec<_> = corpus.documents.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        let labels: Vec<_> = corpus.documents.iter().map(|d| d.label).collect();
        assert_eq!(labels, [None, Some(7.0), None]);
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(raw in "\\PC{0,60}") {
            let once = tokenize(&raw);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(|c| c.is_uppercase() || c.is_whitespace()));
            }
        }

        #[test]
        fn stopword_removal_is_subsequence(
            tokens in proptest::collection::vec("[a-e]{1,2}", 0..20),
            stops in proptest::collection::vec("[a-e]{1,2}", 0..5),
        ) {
            let stops = StopwordList::new(&stops);
            let kept = remove_stopwords(&tokens, &stops);
            let mut it = tokens.iter();
            for k in &kept {
                prop_assert!(!stops.contains(k));
                prop_assert!(it.any(|t| t == k));
            }
        }
    }
}
