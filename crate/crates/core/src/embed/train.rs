//! Negative-sampling trainers.
//!
//! Vector tables are stored as `AtomicU64` bit patterns so worker threads
//! can update them concurrently without locks (Hogwild-style). With a
//! single thread the relaxed loads and stores are plain memory accesses
//! and training is bit-reproducible for a given seed.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{build_vocab, EmbeddingModel, Matrix, ModelKind, NgramTable, TrainConfig, TrainKind, Vocabulary};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};
use crate::text::Corpus;

struct SharedMatrix {
    cols: usize,
    data: Vec<AtomicU64>,
}

impl SharedMatrix {
    fn from_matrix(m: &Matrix) -> Self {
        Self {
            cols: m.cols(),
            data: m.as_slice().iter().map(|x| AtomicU64::new(x.to_bits())).collect(),
        }
    }

    fn read_row(&self, r: usize, out: &mut [f64]) {
        let row = &self.data[r * self.cols..(r + 1) * self.cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add_row(&self, r: usize, delta: &[f64], scale: f64) {
        let row = &self.data[r * self.cols..(r + 1) * self.cols];
        for (a, d) in row.iter().zip(delta) {
            let cur = f64::from_bits(a.load(Ordering::Relaxed));
            a.store((cur + scale * d).to_bits(), Ordering::Relaxed);
        }
    }

    fn into_matrix(self) -> Matrix {
        let rows = self.data.len() / self.cols.max(1);
        let data = self
            .data
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect();
        Matrix::from_data(rows, self.cols, data)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Negative-sampling loss for one (center, context, negatives) triple:
/// `-ln σ(h·u₊) - Σₖ ln σ(-h·uₖ)`.
pub fn neg_sampling_loss(hidden: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(super::dot(hidden, positive));
    for u in negatives {
        loss -= log_sigmoid(-super::dot(hidden, u));
    }
    loss
}

/// Gradients of [`neg_sampling_loss`] with respect to each argument.
#[derive(Debug, Clone, PartialEq)]
pub struct NegSamplingGrad {
    pub hidden: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `label - σ(h·u)`: the descent coefficient shared by the analytic gradient and the trainer.
fn coefficient(score: f64, label: f64) -> f64 {
    label - sigmoid(score)
}

pub fn neg_sampling_grad(hidden: &[f64], positive: &[f64], negatives: &[&[f64]]) -> NegSamplingGrad {
    let d = hidden.len();
    let mut g_hidden = vec![0.0; d];
    let g = coefficient(super::dot(hidden, positive), 1.0);
    let g_positive: Vec<f64> = hidden.iter().map(|h| -g * h).collect();
    for (gh, u) in g_hidden.iter_mut().zip(positive) {
        *gh -= g * u;
    }
    let mut g_negatives = Vec::with_capacity(negatives.len());
    for u in negatives {
        let g = coefficient(super::dot(hidden, u), 0.0);
        g_negatives.push(hidden.iter().map(|h| -g * h).collect());
        for (gh, x) in g_hidden.iter_mut().zip(u.iter()) {
            *gh -= g * x;
        }
    }
    NegSamplingGrad {
        hidden: g_hidden,
        positive: g_positive,
        negatives: g_negatives,
    }
}

/// Samples word indices from the unigram distribution raised to the 3/4 power.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(vocab: &Vocabulary) -> Self {
        let mut acc = 0.0;
        let cumulative = vocab
            .counts()
            .iter()
            .map(|&c| {
                acc += (c.max(1) as f64).powf(0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

/// Linear decay from `lr_initial` to `lr_final` over the total number of updates.
struct Schedule {
    initial: f64,
    final_: f64,
    total: u64,
    done: AtomicU64,
}

impl Schedule {
    fn next(&self) -> f64 {
        let done = self.done.fetch_add(1, Ordering::Relaxed);
        let frac = if self.total == 0 {
            1.0
        } else {
            (done as f64 / self.total as f64).min(1.0)
        };
        (self.initial - (self.initial - self.final_) * frac).max(self.final_)
    }
}

/// Scratch space plus the shared output table for one worker.
struct Worker<'a> {
    output: &'a SharedMatrix,
    sampler: &'a NegativeSampler,
    negatives: usize,
    rng: ChaCha8Rng,
    hidden: Vec<f64>,
    grad_hidden: Vec<f64>,
    row: Vec<f64>,
}

impl<'a> Worker<'a> {
    fn new(output: &'a SharedMatrix, sampler: &'a NegativeSampler, negatives: usize, dim: usize, seed: u64) -> Self {
        Self {
            output,
            sampler,
            negatives,
            rng: rng(seed),
            hidden: vec![0.0; dim],
            grad_hidden: vec![0.0; dim],
            row: vec![0.0; dim],
        }
    }

    fn load_hidden(&mut self, table: &SharedMatrix, rows: &[usize]) {
        self.hidden.fill(0.0);
        for &r in rows {
            table.read_row(r, &mut self.row);
            for (h, x) in self.hidden.iter_mut().zip(&self.row) {
                *h += x;
            }
        }
    }

    /// One SGD step on `target` with the given label; accumulates the hidden-layer
    /// descent direction into `grad_hidden` and updates the output row in place.
    fn step_output(&mut self, target: usize, label: f64, lr: f64) {
        self.output.read_row(target, &mut self.row);
        let g = coefficient(super::dot(&self.hidden, &self.row), label) * lr;
        for (gh, u) in self.grad_hidden.iter_mut().zip(&self.row) {
            *gh += g * u;
        }
        self.output.add_row(target, &self.hidden, g);
    }

    /// Positive `context` plus sampled negatives against the already-loaded hidden vector.
    fn train_pair(&mut self, context: usize, lr: f64) {
        self.grad_hidden.fill(0.0);
        self.step_output(context, 1.0, lr);
        for _ in 0..self.negatives {
            let neg = self.sampler.sample(&mut self.rng);
            if neg == context {
                continue;
            }
            self.step_output(neg, 0.0, lr);
        }
    }

    fn apply_hidden(&self, table: &SharedMatrix, rows: &[usize]) {
        for &r in rows {
            table.add_row(r, &self.grad_hidden, 1.0);
        }
    }
}

fn uniform_init(rows: usize, dim: usize, seed: u64) -> Matrix {
    let mut rng = rng(seed);
    let bound = 0.5 / dim as f64;
    let data = (0..rows * dim)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Matrix::from_data(rows, dim, data)
}

fn ngram_vocabulary(vocab: &Vocabulary, n_min: usize, n_max: usize) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut grams = Vec::new();
    for w in vocab.words() {
        for g in super::ngram_set(w, n_min, n_max) {
            if seen.insert(g.clone()) {
                grams.push(g);
            }
        }
    }
    grams
}

/// The untrained model `train` starts from: input (or n-gram) vectors uniform in
/// `[-0.5/d, 0.5/d]`, output vectors zero.
pub fn init_model(corpus: &Corpus, config: &TrainConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    let vocab = build_vocab(corpus, config.min_count)?;
    init_with_vocab(vocab, config)
}

fn init_with_vocab(vocab: Vocabulary, config: &TrainConfig) -> Result<EmbeddingModel> {
    let init_seed = derive_seed(config.seed, "embed-init");
    let output = Matrix::zeros(vocab.len(), config.dim);
    match config.kind {
        TrainKind::SkipGram => {
            let input = uniform_init(vocab.len(), config.dim, init_seed);
            EmbeddingModel::new(ModelKind::SkipGram, vocab, input, output, None)
        }
        TrainKind::CharNgram => {
            let grams = ngram_vocabulary(&vocab, config.ngram_min, config.ngram_max);
            let vectors = uniform_init(grams.len(), config.dim, init_seed);
            let table = NgramTable::new(config.ngram_min, config.ngram_max, grams, vectors)?;
            EmbeddingModel::char_ngram(vocab, table, output)
        }
        TrainKind::PvDbow => Err(Error::Validation(
            "pv-dbow produces paragraph vectors; use train_pvdbow".into(),
        )),
    }
}

fn index_documents(corpus: &Corpus, vocab: &Vocabulary) -> Vec<Vec<usize>> {
    corpus
        .documents
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| vocab.index_of(t)).collect())
        .collect()
}

fn pairs_in(len: usize, window: usize) -> u64 {
    (0..len)
        .map(|t| (t.saturating_sub(window)..(t + window + 1).min(len)).count() as u64 - 1)
        .sum()
}

/// Documents handled by worker `w` of `n`.
fn shard<T>(items: &[T], w: usize, n: usize) -> impl Iterator<Item = (usize, &T)> {
    items.iter().enumerate().skip(w).step_by(n)
}

/// Trains skip-gram or char-ngram embeddings by SGD on the negative-sampling
/// objective over every (center, context) pair within `config.window`.
pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<EmbeddingModel> {
    let init = init_model(corpus, config)?;
    if config.epochs == 0 {
        return Ok(init);
    }
    let docs = index_documents(corpus, init.vocab());
    let total: u64 = docs.iter().map(|d| pairs_in(d.len(), config.window)).sum::<u64>()
        * config.epochs as u64;
    let schedule = Schedule {
        initial: config.lr_initial,
        final_: config.lr_final,
        total,
        done: AtomicU64::new(0),
    };
    let sampler = NegativeSampler::new(init.vocab());

    // input rows per vocabulary word: the word's own row, or its n-gram rows
    let (table, word_rows): (SharedMatrix, Vec<Vec<usize>>) = match init.ngrams() {
        Some(t) => (
            SharedMatrix::from_matrix(t.vectors()),
            init.vocab().words().iter().map(|w| t.rows_for(w)).collect(),
        ),
        None => (
            SharedMatrix::from_matrix(init.input_vectors()),
            (0..init.vocab().len()).map(|i| vec![i]).collect(),
        ),
    };
    let output = SharedMatrix::from_matrix(init.output_vectors());
    let threads = config.threads.min(docs.len()).max(1);

    let run = |w: usize| {
        let seed = derive_seed(config.seed, &format!("embed-train-{w}"));
        let mut worker = Worker::new(&output, &sampler, config.negatives, config.dim, seed);
        for _ in 0..config.epochs {
            for (_, doc) in shard(&docs, w, threads) {
                for (t, &center) in doc.iter().enumerate() {
                    let rows = &word_rows[center];
                    let lo = t.saturating_sub(config.window);
                    let hi = (t + config.window + 1).min(doc.len());
                    for (j, &context) in doc.iter().enumerate().take(hi).skip(lo) {
                        if j == t {
                            continue;
                        }
                        let lr = schedule.next();
                        worker.load_hidden(&table, rows);
                        worker.train_pair(context, lr);
                        worker.apply_hidden(&table, rows);
                    }
                }
            }
        }
    };
    if threads == 1 {
        run(0);
    } else {
        std::thread::scope(|s| {
            for w in 0..threads {
                s.spawn(move || run(w));
            }
        });
    }

    let output = output.into_matrix();
    match init.ngrams {
        Some(t) => {
            let table = NgramTable::new(t.n_min, t.n_max, t.grams, table.into_matrix())?;
            EmbeddingModel::char_ngram(init.vocab, table, output)
        }
        None => EmbeddingModel::new(ModelKind::SkipGram, init.vocab, table.into_matrix(), output, None),
    }
}

/// One vector per document, in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphVectors {
    pub ids: Vec<String>,
    pub vectors: Matrix,
}

/// PV-DBOW: each document's own vector predicts words sampled from that document.
///
/// Per epoch a document gets `ceil(n / window)` steps of `window` target words
/// drawn uniformly with replacement, so each token is predicted about once.
pub fn train_pvdbow(corpus: &Corpus, config: &TrainConfig) -> Result<ParagraphVectors> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::Validation("cannot train paragraph vectors on an empty corpus".into()));
    }
    let vocab = build_vocab(corpus, config.min_count)?;
    let docs = index_documents(corpus, &vocab);
    let paragraphs = uniform_init(docs.len(), config.dim, derive_seed(config.seed, "pvdbow-init"));
    let ids = corpus.documents.iter().map(|d| d.id.clone()).collect();
    if config.epochs == 0 {
        return Ok(ParagraphVectors {
            ids,
            vectors: paragraphs,
        });
    }

    let steps = |n: usize| if n == 0 { 0 } else { n.div_ceil(config.window) };
    let total = docs
        .iter()
        .map(|d| (steps(d.len()) * config.window) as u64)
        .sum::<u64>()
        * config.epochs as u64;
    let schedule = Schedule {
        initial: config.lr_initial,
        final_: config.lr_final,
        total,
        done: AtomicU64::new(0),
    };
    let sampler = NegativeSampler::new(&vocab);
    let table = SharedMatrix::from_matrix(&paragraphs);
    let output = SharedMatrix::from_matrix(&Matrix::zeros(vocab.len(), config.dim));
    let threads = config.threads.min(docs.len()).max(1);

    let run = |w: usize| {
        let seed = derive_seed(config.seed, &format!("pvdbow-train-{w}"));
        let mut worker = Worker::new(&output, &sampler, config.negatives, config.dim, seed);
        for _ in 0..config.epochs {
            for (d, doc) in shard(&docs, w, threads) {
                let rows = [d];
                for _ in 0..steps(doc.len()) {
                    for _ in 0..config.window {
                        let target = doc[worker.rng.random_range(0..doc.len())];
                        let lr = schedule.next();
                        worker.load_hidden(&table, &rows);
                        worker.train_pair(target, lr);
                        worker.apply_hidden(&table, &rows);
                    }
                }
            }
        }
    };
    if threads == 1 {
        run(0);
    } else {
        std::thread::scope(|s| {
            for w in 0..threads {
                s.spawn(move || run(w));
            }
        });
    }

    Ok(ParagraphVectors {
        ids,
        vectors: table.into_matrix(),
    })
}
