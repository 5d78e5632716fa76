//! Synthetic data: a graded corpus whose level is carried by topic
//! vocabulary, and aligned sentence-pair sets.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::persist::write_text;
use crate::seed::{derive_seed, rng};
use crate::text::{Corpus, Document, GRADE_BAND_LABELS};

const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, PartialEq)]
pub struct GradedCorpusSpec {
    pub docs_per_level: usize,
    pub words_per_topic: usize,
    pub doc_len: usize,
    /// Weight of topic `t` for a level-`l` document is `decay^|t - l|`.
    pub decay: f64,
    pub seed: u64,
}

impl Default for GradedCorpusSpec {
    fn default() -> Self {
        Self {
            docs_per_level: 30,
            words_per_topic: 40,
            doc_len: 80,
            decay: 0.5,
            seed: 0,
        }
    }
}

/// Distinct lowercase strings of length 5–8 over `letters`, none in `taken`.
fn random_words(r: &mut ChaCha8Rng, letters: &[u8], n: usize, taken: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = r.random_range(5..=8);
        let w: String = (0..len).map(|_| letters[r.random_range(0..letters.len())] as char).collect();
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Five topic vocabularies over disjoint letter sets, one per grade band.
pub fn topic_vocabularies(words_per_topic: usize, seed: u64) -> Vec<Vec<String>> {
    let levels = GRADE_BAND_LABELS.len();
    let mut r = rng(derive_seed(seed, "synth-vocab"));
    let per = ALPHABET.len() / levels;
    let mut taken = HashSet::new();
    (0..levels)
        .map(|t| random_words(&mut r, &ALPHABET[t * per..(t + 1) * per], words_per_topic, &mut taken))
        .collect()
}

/// Raw documents `(file name, text, label)`; the level fixes the topic mixture.
pub fn graded_documents(spec: &GradedCorpusSpec) -> Vec<(String, String, f64)> {
    let topics = topic_vocabularies(spec.words_per_topic, spec.seed);
    let levels = topics.len();
    let mut r = rng(derive_seed(spec.seed, "synth-docs"));
    let mut docs = Vec::with_capacity(levels * spec.docs_per_level);
    for i in 0..spec.docs_per_level {
        for (level, &label) in GRADE_BAND_LABELS.iter().enumerate() {
            let weights: Vec<f64> = (0..levels).map(|t| spec.decay.powi(t.abs_diff(level) as i32)).collect();
            let total: f64 = weights.iter().sum();
            let mut text = String::new();
            for j in 0..spec.doc_len {
                let mut u = r.random_range(0.0..total);
                let mut t = 0;
                while t + 1 < levels && u >= weights[t] {
                    u -= weights[t];
                    t += 1;
                }
                let vocab = &topics[t];
                if j > 0 {
                    text.push(if j % 12 == 0 { '\n' } else { ' ' });
                }
                text.push_str(&vocab[r.random_range(0..vocab.len())]);
            }
            text.push_str(".\n");
            docs.push((format!("doc{:03}.txt", i * levels + level), text, label));
        }
    }
    docs
}

pub fn graded_corpus(spec: &GradedCorpusSpec) -> Result<Corpus> {
    let stops = crate::text::StopwordList::english();
    let docs = graded_documents(spec)
        .into_iter()
        .map(|(name, text, label)| {
            let id = name.trim_end_matches(".txt").to_string();
            let mut d = Document::from_text(id, &text, &stops);
            d.label = Some(label);
            d
        })
        .collect();
    Corpus::new("synthetic", docs)
}

/// Writes the documents into `dir` and the label manifest to `labels`.
pub fn write_graded_corpus(dir: &Path, labels: &Path, spec: &GradedCorpusSpec) -> Result<()> {
    let mut manifest = String::new();
    for (name, text, label) in graded_documents(spec) {
        write_text(&dir.join(&name), &text)?;
        writeln!(manifest, "{name}\t{label}").unwrap();
    }
    write_text(labels, &manifest)
}

/// `ordinary<TAB>simple` lines where pair `i` uses two words of its own in
/// both sentences (in swapped order) and no word is shared across pairs.
pub fn constructed_pairs(n: usize, seed: u64) -> String {
    let mut r = rng(derive_seed(seed, "synth-pairs"));
    let words = random_words(&mut r, ALPHABET, 2 * n, &mut HashSet::new());
    let mut out = String::new();
    for p in words.chunks(2) {
        writeln!(out, "The {} of {}.\t{} {}", p[0], p[1], p[1], p[0]).unwrap();
    }
    out
}

/// Pairs whose sides share one or two pair-specific words mixed with words
/// drawn from a common pool, so nearest neighbours are sometimes wrong.
pub fn noisy_pairs(n: usize, seed: u64) -> String {
    let mut r = rng(derive_seed(seed, "synth-noisy-pairs"));
    let mut taken = HashSet::new();
    let own = random_words(&mut r, ALPHABET, 3 * n, &mut taken);
    let common = random_words(&mut r, ALPHABET, 20, &mut taken);
    let mut out = String::new();
    for p in own.chunks(3) {
        let mut ordinary: Vec<&str> = p.iter().map(String::as_str).collect();
        let mut simple: Vec<&str> = vec![&p[r.random_range(0..3)]];
        for _ in 0..4 {
            ordinary.push(&common[r.random_range(0..common.len())]);
        }
        for _ in 0..r.random_range(1..4) {
            simple.push(&common[r.random_range(0..common.len())]);
        }
        writeln!(out, "{}\t{}", ordinary.join(" "), simple.join(" ")).unwrap();
    }
    out
}

/// One document per sentence of a pair TSV, for training embeddings.
pub fn pair_sentences_corpus(tsv: &str) -> Result<Corpus> {
    let stops = crate::text::StopwordList::english();
    let docs = tsv
        .lines()
        .flat_map(|l| l.split('\t'))
        .enumerate()
        .map(|(i, s)| Document::from_text(format!("s{i}"), s, &stops))
        .collect();
    Corpus::new("pairs", docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_corpus_shape() {
        let c = graded_corpus(&GradedCorpusSpec::default()).unwrap();
        assert_eq!(c.len(), 150);
        let labels = c.labels().unwrap();
        for l in GRADE_BAND_LABELS {
            assert_eq!(labels.iter().filter(|&&x| x == l).count(), 30);
        }
        assert!(c.documents.iter().all(|d| d.tokens.len() == 80));
    }

    #[test]
    fn topics_are_disjoint_and_seeded() {
        let a = topic_vocabularies(40, 3);
        assert_eq!(a, topic_vocabularies(40, 3));
        let all: HashSet<&String> = a.iter().flatten().collect();
        assert_eq!(all.len(), 200);
        for (i, t) in a.iter().enumerate() {
            for (j, u) in a.iter().enumerate().skip(i + 1) {
                let li: HashSet<char> = t.iter().flat_map(|w| w.chars()).collect();
                let lj: HashSet<char> = u.iter().flat_map(|w| w.chars()).collect();
                assert!(li.is_disjoint(&lj), "topics {i} and {j} share letters");
            }
        }
    }

    #[test]
    fn level_dominates_mixture() {
        let spec = GradedCorpusSpec::default();
        let topics = topic_vocabularies(spec.words_per_topic, spec.seed);
        let c = graded_corpus(&spec).unwrap();
        for d in &c.documents {
            let level = GRADE_BAND_LABELS.iter().position(|&l| Some(l) == d.label).unwrap();
            let own = d.tokens.iter().filter(|w| topics[level].contains(w)).count();
            assert!(own * 4 > d.tokens.len(), "{}: {own}", d.id);
        }
    }

    #[test]
    fn constructed_pairs_share_only_within() {
        let text = constructed_pairs(50, 1);
        let set = crate::eval::SentencePairSet::parse(Path::new("p"), &text, &crate::text::StopwordList::english())
            .unwrap();
        assert_eq!((set.len(), set.dropped), (50, 0));
        for (i, p) in set.pairs.iter().enumerate() {
            let mut a = p.ordinary.clone();
            let mut b = p.simple.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
            for q in &set.pairs[i + 1..] {
                assert!(q.ordinary.iter().all(|w| !a.contains(w)));
            }
        }
    }
}
