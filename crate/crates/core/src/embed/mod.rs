//! Word embeddings: vocabulary, skip-gram and character n-gram models,
//! paragraph vectors, and weighted pooling.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::text::Corpus;

mod train;

pub use train::{
    init_model, neg_sampling_grad, neg_sampling_loss, train, train_pvdbow, NegSamplingGrad,
    ParagraphVectors,
};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub(crate) fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Words indexed `0..V` by descending corpus frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Keeps words with count ≥ `min_count`, sorted by the vocabulary order.
    pub fn from_counts<I>(counts: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let mut entries: Vec<(String, u64)> =
            counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let (words, counts): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        Ok(Self::from_ordered(words, counts))
    }

    /// Keeps the given order; used when reading embedding files.
    pub(crate) fn from_ordered(words: Vec<String>, counts: Vec<u64>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let total_tokens = counts.iter().sum();
        Self {
            words,
            counts,
            index,
            total_tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of in-vocabulary tokens in the corpus the vocabulary was built from.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

pub fn build_vocab(corpus: &Corpus, min_count: u64) -> Result<Vocabulary> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in &corpus.documents {
        for tok in &doc.tokens {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    Vocabulary::from_counts(
        counts.into_iter().map(|(w, c)| (w.to_owned(), c)),
        min_count,
    )
}

/// Character n-grams of `word` wrapped in `<` and `>`, lengths `n_min..=n_max`,
/// followed by the whole wrapped word. Duplicates are kept once, in first-seen order.
///
/// ```
/// let grams = clusterlm::embed::ngram_set("cat", 3, 3);
/// assert_eq!(grams, ["<ca", "cat", "at>", "<cat>"]);
/// ```
pub fn ngram_set(word: &str, n_min: usize, n_max: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut grams: Vec<String> = Vec::new();
    let mut push = |g: String| {
        if !grams.contains(&g) {
            grams.push(g);
        }
    };
    for n in n_min.max(1)..=n_max.min(wrapped.len()) {
        for window in wrapped.windows(n) {
            let g: String = window.iter().collect();
            // the whole wrapped word is appended last as the special token
            if window.len() < wrapped.len() {
                push(g);
            }
        }
    }
    push(wrapped.iter().collect());
    grams
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SkipGram,
    CharNgram,
}

/// Character n-gram vectors `z_g` with an exact string → row map.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramTable {
    pub n_min: usize,
    pub n_max: usize,
    grams: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
}

impl NgramTable {
    pub fn new(n_min: usize, n_max: usize, grams: Vec<String>, vectors: Matrix) -> Result<Self> {
        if grams.len() != vectors.rows() {
            return Err(Error::DimensionMismatch {
                expected: grams.len(),
                found: vectors.rows(),
            });
        }
        let mut index = HashMap::with_capacity(grams.len());
        for (i, g) in grams.iter().enumerate() {
            if index.insert(g.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate n-gram {g:?}")));
            }
        }
        Ok(Self {
            n_min,
            n_max,
            grams,
            index,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn grams(&self) -> &[String] {
        &self.grams
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn index_of(&self, gram: &str) -> Option<usize> {
        self.index.get(gram).copied()
    }

    /// Rows of the known n-grams of `word`; unknown n-grams contribute nothing.
    pub fn rows_for(&self, word: &str) -> Vec<usize> {
        ngram_set(word, self.n_min, self.n_max)
            .iter()
            .filter_map(|g| self.index_of(g))
            .collect()
    }
}

/// Trained embeddings. For the char-ngram kind, `input` holds the vocabulary
/// word vectors materialized as n-gram sums.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    kind: ModelKind,
    vocab: Vocabulary,
    input: Matrix,
    output: Matrix,
    ngrams: Option<NgramTable>,
}

impl EmbeddingModel {
    pub fn new(
        kind: ModelKind,
        vocab: Vocabulary,
        input: Matrix,
        output: Matrix,
        ngrams: Option<NgramTable>,
    ) -> Result<Self> {
        let dim = input.cols();
        if dim == 0 {
            return Err(Error::Validation("embedding dimension must be ≥ 1".into()));
        }
        for m in [&input, &output] {
            if m.rows() != vocab.len() {
                return Err(Error::DimensionMismatch {
                    expected: vocab.len(),
                    found: m.rows(),
                });
            }
            if m.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.cols(),
                });
            }
        }
        match (&ngrams, kind) {
            (Some(t), ModelKind::CharNgram) => {
                if t.vectors.cols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: t.vectors.cols(),
                    });
                }
            }
            (None, ModelKind::SkipGram) => {}
            _ => {
                return Err(Error::Validation(
                    "n-gram vectors must be present exactly for char-ngram models".into(),
                ))
            }
        }
        let model = Self {
            kind,
            vocab,
            input,
            output,
            ngrams,
        };
        if !model.is_finite() {
            return Err(Error::Numeric("embedding contains non-finite entries".into()));
        }
        Ok(model)
    }

    /// Char-ngram model whose vocabulary vectors are the n-gram sums.
    pub fn char_ngram(vocab: Vocabulary, ngrams: NgramTable, output: Matrix) -> Result<Self> {
        let dim = ngrams.vectors.cols();
        let mut input = Matrix::zeros(vocab.len(), dim);
        for (i, w) in vocab.words().iter().enumerate() {
            sum_rows(&ngrams.vectors, &ngrams.rows_for(w), input.row_mut(i));
        }
        Self::new(ModelKind::CharNgram, vocab, input, output, Some(ngrams))
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn input_vectors(&self) -> &Matrix {
        &self.input
    }

    pub fn output_vectors(&self) -> &Matrix {
        &self.output
    }

    pub fn ngrams(&self) -> Option<&NgramTable> {
        self.ngrams.as_ref()
    }

    fn is_finite(&self) -> bool {
        self.input.is_finite()
            && self.output.is_finite()
            && self.ngrams.as_ref().is_none_or(|t| t.vectors.is_finite())
    }

    /// Whether [`word_vector`] succeeds for `word`.
    pub fn can_embed(&self, word: &str) -> bool {
        match self.kind {
            ModelKind::SkipGram => self.vocab.contains(word),
            ModelKind::CharNgram => !word.is_empty(),
        }
    }
}

fn sum_rows(table: &Matrix, rows: &[usize], out: &mut [f64]) {
    out.fill(0.0);
    for &r in rows {
        for (o, z) in out.iter_mut().zip(table.row(r)) {
            *o += z;
        }
    }
}

/// The input representation of `word`: the stored row for skip-gram models,
/// the sum of its n-gram vectors for char-ngram models (defined for any
/// nonempty word, seen or not).
pub fn word_vector(word: &str, model: &EmbeddingModel) -> Result<Vec<f64>> {
    match (&model.ngrams, model.kind) {
        (Some(table), ModelKind::CharNgram) => {
            if word.is_empty() {
                return Err(Error::Validation("cannot embed the empty string".into()));
            }
            let mut out = vec![0.0; model.dim()];
            sum_rows(&table.vectors, &table.rows_for(word), &mut out);
            Ok(out)
        }
        _ => model
            .vocab
            .index_of(word)
            .map(|i| model.input.row(i).to_vec())
            .ok_or_else(|| Error::OutOfVocabulary(word.to_owned())),
    }
}

/// Full softmax over the vocabulary: `p(w' | center)` for every `w'`.
pub fn softmax_distribution(center: &str, model: &EmbeddingModel) -> Result<Vec<f64>> {
    let h = word_vector(center, model)?;
    let scores: Vec<f64> = model.output.iter_rows().map(|u| dot(&h, u)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

pub fn softmax_prob(center: &str, context: &str, model: &EmbeddingModel) -> Result<f64> {
    let ctx = model
        .vocab
        .index_of(context)
        .ok_or_else(|| Error::OutOfVocabulary(context.to_owned()))?;
    Ok(softmax_distribution(center, model)?[ctx])
}

/// Weighted average `Σ wᵢ vᵢ / Σ wᵢ`.
pub fn pool<V: AsRef<[f64]>>(vectors: &[V], weights: &[f64]) -> Result<Vec<f64>> {
    if vectors.is_empty() {
        return Err(Error::Validation("cannot pool an empty list of vectors".into()));
    }
    if vectors.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: vectors.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Validation("pooling weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Validation("pooling weights are all zero".into()));
    }
    let dim = vectors[0].as_ref().len();
    let mut out = vec![0.0; dim];
    for (v, &w) in vectors.iter().zip(weights) {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainKind {
    SkipGram,
    CharNgram,
    PvDbow,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub kind: TrainKind,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub min_count: u64,
    pub seed: u64,
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// 1 = deterministic single-threaded training.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: TrainKind::SkipGram,
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr_initial: 0.025,
            lr_final: 1e-4,
            min_count: 1,
            seed: 1,
            ngram_min: 3,
            ngram_max: 6,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Validation(msg.to_owned()));
        if self.dim == 0 {
            return fail("dim must be ≥ 1");
        }
        if self.window == 0 {
            return fail("window must be ≥ 1");
        }
        if self.negatives == 0 {
            return fail("negatives must be ≥ 1");
        }
        if !(self.lr_initial > 0.0 && self.lr_final > 0.0) || !self.lr_initial.is_finite() {
            return fail("learning rates must be positive");
        }
        if self.lr_final > self.lr_initial {
            return fail("lr_final must not exceed lr_initial");
        }
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return fail("n-gram range must satisfy 1 ≤ ngram_min ≤ ngram_max");
        }
        if self.threads == 0 {
            return fail("threads must be ≥ 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Document;
    use proptest::prelude::*;

    fn corpus(tokens: &[&str]) -> Corpus {
        let doc = Document::new("d", tokens.iter().map(|s| s.to_string()).collect(), None);
        Corpus::new("c", vec![doc]).unwrap()
    }

    #[test]
    fn vocab_counts_and_order() {
        let v = build_vocab(&corpus(&["a", "b", "a"]), 1).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
        assert_eq!(v.counts(), [2, 1]);
        assert_eq!(v.total_tokens(), 3);

        let v = build_vocab(&corpus(&["a", "b", "a"]), 2).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.count(0), 2);

        assert!(matches!(
            build_vocab(&corpus(&["x"]), 2),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn vocab_ties_are_lexicographic() {
        let v = build_vocab(&corpus(&["z", "b", "y", "b", "a"]), 1).unwrap();
        assert_eq!(v.words(), ["b", "a", "y", "z"]);
        assert_eq!(v.index_of("y"), Some(2));
    }

    #[test]
    fn ngram_examples() {
        assert_eq!(ngram_set("cat", 3, 3), ["<ca", "cat", "at>", "<cat>"]);
        assert_eq!(ngram_set("a", 3, 3), ["<a>"]);
        assert_eq!(
            ngram_set("where", 3, 3),
            ["<wh", "whe", "her", "ere", "re>", "<where>"]
        );
        // shorter than n_min still yields the whole-word token
        assert_eq!(ngram_set("a", 4, 6), ["<a>"]);
        assert_eq!(ngram_set("ab", 3, 6), ["<ab", "ab>", "<ab>"]);
    }

    fn one_dim_model(outputs: &[f64]) -> EmbeddingModel {
        let words: Vec<String> = (0..outputs.len()).map(|i| format!("w{i}")).collect();
        let vocab = Vocabulary::from_ordered(words, vec![1; outputs.len()]);
        let input = Matrix::from_data(outputs.len(), 1, vec![1.0; outputs.len()]);
        let output = Matrix::from_data(outputs.len(), 1, outputs.to_vec());
        EmbeddingModel::new(ModelKind::SkipGram, vocab, input, output, None).unwrap()
    }

    #[test]
    fn softmax_uniform_and_hand_values() {
        let m = one_dim_model(&[0.3; 4]);
        for w in ["w0", "w1", "w2", "w3"] {
            assert!((softmax_prob("w0", w, &m).unwrap() - 0.25).abs() < 1e-15);
        }
        let m = one_dim_model(&[2f64.ln(), 0.0, 0.0]);
        let p = softmax_distribution("w0", &m).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[1] - 0.25).abs() < 1e-15);
        assert!((p[2] - 0.25).abs() < 1e-15);
        assert!(matches!(
            softmax_prob("w0", "nope", &m),
            Err(Error::OutOfVocabulary(w)) if w == "nope"
        ));
        assert!(matches!(
            softmax_prob("nope", "w0", &m),
            Err(Error::OutOfVocabulary(_))
        ));
    }

    fn char_model(grams: &[(&str, [f64; 2])], vocab_words: &[&str]) -> EmbeddingModel {
        let names: Vec<String> = grams.iter().map(|(g, _)| g.to_string()).collect();
        let rows: Vec<Vec<f64>> = grams.iter().map(|(_, v)| v.to_vec()).collect();
        let table = NgramTable::new(3, 3, names, Matrix::from_rows(&rows, 2).unwrap()).unwrap();
        let vocab = Vocabulary::from_ordered(
            vocab_words.iter().map(|s| s.to_string()).collect(),
            vec![1; vocab_words.len()],
        );
        let output = Matrix::zeros(vocab_words.len(), 2);
        EmbeddingModel::char_ngram(vocab, table, output).unwrap()
    }

    #[test]
    fn char_ngram_word_vectors() {
        let m = char_model(&[("<ca", [0.0, 0.0]), ("cat", [0.0, 0.0])], &["cat"]);
        assert_eq!(word_vector("dog", &m).unwrap(), [0.0, 0.0]);

        let m = char_model(
            &[("<ca", [0.0, 0.0]), ("cat", [1.0, 0.0]), ("at>", [0.0, 0.0]), ("<cat>", [0.0, 0.0])],
            &["cat"],
        );
        assert_eq!(word_vector("cat", &m).unwrap(), [1.0, 0.0]);
        assert_eq!(m.input_vectors().row(0), [1.0, 0.0]);
        // unseen word sharing the "cat" gram
        assert_eq!(word_vector("cats", &m).unwrap(), [1.0, 0.0]);
        assert!(word_vector("", &m).is_err());
    }

    #[test]
    fn skipgram_oov_errors() {
        let m = one_dim_model(&[0.0, 0.0]);
        assert!(matches!(word_vector("zzz", &m), Err(Error::OutOfVocabulary(_))));
    }

    #[test]
    fn kind_and_ngram_table_must_agree() {
        let vocab = Vocabulary::from_ordered(vec!["a".into()], vec![1]);
        let table = NgramTable::new(3, 3, vec!["<a>".into()], Matrix::zeros(1, 1)).unwrap();
        let err = EmbeddingModel::new(
            ModelKind::SkipGram,
            vocab,
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            Some(table),
        );
        assert!(err.is_err());
    }

    #[test]
    fn pool_examples() {
        let uni = pool(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0]).unwrap();
        assert_eq!(uni, [0.5, 0.5]);
        assert_eq!(pool(&[vec![3.0, -1.0]], &[7.0]).unwrap(), [3.0, -1.0]);
        assert_eq!(
            pool(&[vec![2.0, 0.0], vec![0.0, 0.0]], &[1.0, 3.0]).unwrap(),
            [0.5, 0.0]
        );
        assert!(pool::<Vec<f64>>(&[], &[]).is_err());
        assert!(pool(&[vec![1.0]], &[0.0]).is_err());
        assert!(pool(&[vec![1.0]], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(
            vals in proptest::collection::vec(-3.0f64..3.0, 12),
        ) {
            let words: Vec<String> = (0..4).map(|i| format!("w{i}")).collect();
            let vocab = Vocabulary::from_ordered(words, vec![1; 4]);
            let input = Matrix::from_data(4, 3, vals[..12].to_vec());
            let output = Matrix::from_data(4, 3, vals.iter().rev().cloned().collect());
            let m = EmbeddingModel::new(ModelKind::SkipGram, vocab, input, output, None).unwrap();
            for w in ["w0", "w1", "w2", "w3"] {
                let total: f64 = softmax_distribution(w, &m).unwrap().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn char_ngram_vector_is_exact_gram_sum(word in "[a-d]{1,6}") {
            let grams: Vec<String> = ["<a", "ab", "b>", "<ab>", "a", "ba", "<b", "bc", "cd", "d>"]
                .iter().map(|s| s.to_string()).collect();
            let rows: Vec<Vec<f64>> = (0..grams.len()).map(|i| vec![i as f64, 0.5 * i as f64]).collect();
            let table = NgramTable::new(1, 3, grams, Matrix::from_rows(&rows, 2).unwrap()).unwrap();
            let vocab = Vocabulary::from_ordered(vec!["ab".into()], vec![1]);
            let m = EmbeddingModel::char_ngram(vocab, table.clone(), Matrix::zeros(1, 2)).unwrap();
            let mut expected = [0.0, 0.0];
            for g in ngram_set(&word, 1, 3) {
                if let Some(i) = table.index_of(&g) {
                    expected[0] += rows[i][0];
                    expected[1] += rows[i][1];
                }
            }
            prop_assert_eq!(word_vector(&word, &m).unwrap(), expected.to_vec());
        }

        #[test]
        fn pool_is_scale_invariant(
            vs in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..6),
            alpha in 0.01f64..100.0,
        ) {
            let ws: Vec<f64> = (0..vs.len()).map(|i| 1.0 + i as f64).collect();
            let scaled: Vec<f64> = ws.iter().map(|w| w * alpha).collect();
            let a = pool(&vs, &ws).unwrap();
            let b = pool(&vs, &scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
            }
        }
    }
}
