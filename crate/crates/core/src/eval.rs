//! Experiments: readability regression scored by rank and linear
//! correlation, and nearest-neighbour sentence matching.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cluster::{brown_fit_with, kmeans_fit_restarts, KMeansModel};
use crate::embed::{build_vocab, pool, train, word_vector, EmbeddingModel, TrainConfig, TrainKind};
use crate::error::{Error, Result};
use crate::featurize::{build_idf, EmbeddingClusters, FeatureRow, Featurizer, Scheme, Weighting};
use crate::regress::{svr_predict, svr_train_with, SvrOptions};
use crate::seed::{derive_seed, rng};
use crate::text::{Corpus, Document, StopwordList};

/// Number of training documents under the ceiling rule.
pub fn train_size(n: usize, fraction: f64) -> usize {
    // the epsilon keeps e.g. 0.8 * 10 = 8.000000000000002 from rounding up
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Seeded uniform permutation; the first `⌈fraction·N⌉` documents train.
pub fn split_train_test(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Validation(format!("train fraction must be in (0, 1), got {fraction}")));
    }
    split_train_test_sized(corpus, train_size(corpus.len(), fraction), seed)
}

/// As [`split_train_test`] with an exact training-set size.
pub fn split_train_test_sized(corpus: &Corpus, n_train: usize, seed: u64) -> Result<(Corpus, Corpus)> {
    let n = corpus.len();
    if n_train == 0 || n_train >= n {
        return Err(Error::Validation(format!(
            "split of {n} documents into {n_train} train / {} test leaves a side empty",
            n.saturating_sub(n_train)
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let pick = |idx: &[usize]| -> Vec<Document> { idx.iter().map(|&i| corpus.documents[i].clone()).collect() };
    let train = Corpus::new(format!("{}-train", corpus.name), pick(&order[..n_train]))?;
    let test = Corpus::new(format!("{}-test", corpus.name), pick(&order[n_train..]))?;
    Ok((train, test))
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!("correlation inputs differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Validation("correlation needs at least 2 points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("correlation inputs must be finite".into()));
    }
    for (v, side) in [(x, "first"), (y, "second")] {
        if v.iter().all(|&a| a == v[0]) {
            return Err(Error::Numeric(format!("zero variance in {side} input; correlation undefined")));
        }
    }
    Ok(())
}

fn pearson_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    Ok(pearson_unchecked(x, y))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    Ok(pearson_unchecked(&average_ranks(x), &average_ranks(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    Kmeans,
    Brown,
}

impl std::str::FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(ClusterMethod::Kmeans),
            "brown" => Ok(ClusterMethod::Brown),
            _ => Err(Error::Validation(format!("unknown cluster method {s:?} (expected kmeans or brown)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    /// Clusterer for the histogram schemes.
    pub cluster: ClusterMethod,
    pub k: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_restarts: usize,
    pub brown_min_count: u64,
    pub normalize: bool,
    pub c: f64,
    pub epsilon: f64,
    pub train_fraction: f64,
    /// Overrides `train_fraction` when set.
    pub train_size: Option<usize>,
    /// Embedding trainer settings; `seed` is replaced by the stage seed.
    pub embed: TrainConfig,
    pub root_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::HistogramCount,
            cluster: ClusterMethod::Kmeans,
            k: 50,
            kmeans_max_iters: 100,
            kmeans_restarts: 1,
            brown_min_count: 1,
            normalize: false,
            c: 1.0,
            epsilon: 0.1,
            train_fraction: 0.8,
            train_size: None,
            embed: TrainConfig {
                kind: TrainKind::CharNgram,
                ..TrainConfig::default()
            },
            root_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.k == 0 {
            return fail("k must be ≥ 1".into());
        }
        if self.kmeans_max_iters == 0 || self.kmeans_restarts == 0 {
            return fail("kmeans_max_iters and kmeans_restarts must be ≥ 1".into());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return fail(format!("c must be finite and > 0, got {}", self.c));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be finite and ≥ 0, got {}", self.epsilon));
        }
        if self.train_size.is_none() && !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction must be in (0, 1), got {}", self.train_fraction));
        }
        if self.uses_embeddings() {
            if self.embed.kind == TrainKind::PvDbow {
                return fail("embedding kind must be skip-gram or char-ngram for this scheme".into());
            }
            self.embed.validate()?;
        }
        Ok(())
    }

    pub fn uses_embeddings(&self) -> bool {
        match self.scheme {
            Scheme::HistogramCount | Scheme::HistogramBinary => self.cluster == ClusterMethod::Kmeans,
            Scheme::PooledUniform | Scheme::PooledTfidf => true,
            Scheme::Bow => false,
        }
    }

    pub fn stage_seeds(&self) -> BTreeMap<String, u64> {
        ["split", "embed", "kmeans", "svr"]
            .into_iter()
            .map(|s| (s.to_string(), derive_seed(self.root_seed, s)))
            .collect()
    }

    /// Embedding config with its stage seed filled in.
    pub fn embed_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.root_seed, "embed"),
            ..self.embed.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: String,
    pub spearman: f64,
    pub pearson: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub root_seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub config: ExperimentConfig,
    pub predictions: Vec<Prediction>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("bad report JSON: {e}")))
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        writeln!(out, "spearman\t{:.4}", self.spearman).unwrap();
        writeln!(out, "pearson\t{:.4}", self.pearson).unwrap();
        writeln!(out, "train/test\t{}/{}", self.n_train, self.n_test).unwrap();
        writeln!(
            out,
            "scheme\t{} cluster={:?} k={} normalize={} C={} epsilon={}",
            c.scheme.as_str(),
            c.cluster,
            c.k,
            c.normalize,
            c.c,
            c.epsilon
        )
        .unwrap();
        writeln!(out, "root seed\t{}", self.root_seed).unwrap();
        for (stage, seed) in &self.stage_seeds {
            writeln!(out, "  {stage}\t{seed}").unwrap();
        }
        writeln!(out, "id\tlabel\tpredicted").unwrap();
        for p in &self.predictions {
            writeln!(out, "{}\t{}\t{:.4}", p.id, p.label, p.predicted).unwrap();
        }
        out
    }
}

fn labels_of(corpus: &Corpus) -> Result<Vec<f64>> {
    corpus.labels().ok_or_else(|| {
        let missing = corpus.documents.iter().find(|d| d.label.is_none()).map(|d| d.id.as_str());
        Error::Validation(format!("document {:?} has no label", missing.unwrap_or("")))
    })
}

fn split_for(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<(Corpus, Corpus)> {
    let seed = derive_seed(cfg.root_seed, "split");
    match cfg.train_size {
        Some(n) => split_train_test_sized(corpus, n, seed),
        None => split_train_test(corpus, cfg.train_fraction, seed),
    }
}

/// Training text for the embedding stage: the training split, or the
/// matching documents of `embed_text` (e.g. the corpus with stopwords kept).
fn embedding_corpus(train: &Corpus, embed_text: Option<&Corpus>) -> Result<Corpus> {
    let Some(full) = embed_text else {
        return Ok(train.clone());
    };
    let by_id: BTreeMap<&str, &Document> = full.documents.iter().map(|d| (d.id.as_str(), d)).collect();
    let docs = train
        .documents
        .iter()
        .map(|d| {
            by_id
                .get(d.id.as_str())
                .map(|&e| e.clone())
                .ok_or_else(|| Error::Validation(format!("embedding text has no document {:?}", d.id)))
        })
        .collect::<Result<_>>()?;
    Corpus::new(train.name.clone(), docs)
}

fn embed_stage(train_text: &Corpus, cfg: &ExperimentConfig) -> Result<Option<EmbeddingModel>> {
    if !cfg.uses_embeddings() {
        return Ok(None);
    }
    train(train_text, &cfg.embed_config()).map(Some)
}

/// K-means over the embedding vectors of the training vocabulary.
pub fn cluster_vocabulary(model: &EmbeddingModel, k: usize, max_iters: usize, restarts: usize, seed: u64) -> Result<KMeansModel> {
    let rows: Vec<&[f64]> = model.input_vectors().iter_rows().collect();
    kmeans_fit_restarts(&rows, k, max_iters, seed, restarts).map(|f| f.model)
}

fn feature_stage(
    train: &Corpus,
    test: &Corpus,
    emb: Option<&EmbeddingModel>,
    cfg: &ExperimentConfig,
) -> Result<(Vec<FeatureRow>, Vec<FeatureRow>)> {
    let binary = cfg.scheme == Scheme::HistogramBinary;
    let run = |f: Featurizer| -> Result<_> { Ok((f.rows(train, cfg.normalize)?, f.rows(test, cfg.normalize)?)) };
    match cfg.scheme {
        Scheme::HistogramCount | Scheme::HistogramBinary => match cfg.cluster {
            ClusterMethod::Kmeans => {
                let emb = emb.expect("embeddings trained");
                let seed = derive_seed(cfg.root_seed, "kmeans");
                let centroids = cluster_vocabulary(emb, cfg.k, cfg.kmeans_max_iters, cfg.kmeans_restarts, seed)?;
                let clusters = EmbeddingClusters {
                    embeddings: emb,
                    centroids: &centroids,
                };
                run(Featurizer::Histogram {
                    clusters: &clusters,
                    binary,
                })
            }
            ClusterMethod::Brown => {
                let model = brown_fit_with(train, cfg.k, cfg.brown_min_count)?;
                run(Featurizer::Histogram {
                    clusters: &model,
                    binary,
                })
            }
        },
        Scheme::PooledUniform | Scheme::PooledTfidf => {
            let idf = build_idf(train)?;
            let weighting = if cfg.scheme == Scheme::PooledTfidf {
                Weighting::Tfidf
            } else {
                Weighting::Uniform
            };
            run(Featurizer::Pooled {
                model: emb.expect("embeddings trained"),
                weighting,
                idf: Some(&idf),
            })
        }
        Scheme::Bow => {
            let vocab = build_vocab(train, 1)?;
            run(Featurizer::Bow { vocab: &vocab })
        }
    }
}

/// Fits the regressor on `train_rows` and scores it on `test_rows`.
pub fn score_features(train_rows: &[FeatureRow], test_rows: &[FeatureRow], cfg: &ExperimentConfig) -> Result<EvalReport> {
    let label = |r: &FeatureRow| r.label.ok_or_else(|| Error::Validation(format!("document {:?} has no label", r.id)));
    let xs: Vec<&[f64]> = train_rows.iter().map(|r| r.values.as_slice()).collect();
    let ys = train_rows.iter().map(label).collect::<Result<Vec<_>>>()?;
    let opts = SvrOptions {
        c: cfg.c,
        epsilon: cfg.epsilon,
        seed: derive_seed(cfg.root_seed, "svr"),
        ..SvrOptions::default()
    };
    let model = svr_train_with(&xs, &ys, &opts)?.model;
    let predictions = test_rows
        .iter()
        .map(|r| {
            Ok(Prediction {
                id: r.id.clone(),
                label: label(r)?,
                predicted: svr_predict(&model, &r.values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<f64> = predictions.iter().map(|p| p.label).collect();
    let pred: Vec<f64> = predictions.iter().map(|p| p.predicted).collect();
    let mut config = cfg.clone();
    config.embed.seed = derive_seed(cfg.root_seed, "embed");
    Ok(EvalReport {
        version: crate::VERSION.to_string(),
        spearman: spearman(&truth, &pred)?,
        pearson: pearson(&truth, &pred)?,
        n_train: train_rows.len(),
        n_test: test_rows.len(),
        root_seed: cfg.root_seed,
        stage_seeds: cfg.stage_seeds(),
        config,
        predictions,
    })
}

/// Split → embeddings and clusters on the training side → features → SVR →
/// correlations on the test side.
pub fn run_readability_experiment(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<EvalReport> {
    run_readability_experiment_with(corpus, None, cfg)
}

/// As [`run_readability_experiment`], training embeddings on `embed_text`
/// (same document ids, different preprocessing) when given.
pub fn run_readability_experiment_with(
    corpus: &Corpus,
    embed_text: Option<&Corpus>,
    cfg: &ExperimentConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    labels_of(corpus)?;
    let (train, test) = split_for(corpus, cfg)?;
    let emb = embed_stage(&embedding_corpus(&train, embed_text)?, cfg)?;
    let (tr, te) = feature_stage(&train, &test, emb.as_ref(), cfg)?;
    score_features(&tr, &te, cfg)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepGrid {
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub cs: Vec<f64>,
}

impl SweepGrid {
    /// The searched ranges: d 32–300, K 10–200, C 1e-5–1.
    pub fn standard() -> Self {
        Self {
            dims: vec![32, 50, 100, 200, 300],
            ks: vec![10, 25, 50, 100, 200],
            cs: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
        }
    }
}

/// One report per grid point (same split throughout). Embeddings are trained
/// once per dimension and clustered once per K. Empty axes fall back to the
/// base config's value; axes the scheme does not use are ignored.
pub fn sweep(corpus: &Corpus, embed_text: Option<&Corpus>, base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<EvalReport>> {
    base.validate()?;
    labels_of(corpus)?;
    let or = |v: &[usize], d: usize| if v.is_empty() { vec![d] } else { v.to_vec() };
    let dims = if base.uses_embeddings() { or(&grid.dims, base.embed.dim) } else { vec![base.embed.dim] };
    let uses_k = matches!(base.scheme, Scheme::HistogramCount | Scheme::HistogramBinary);
    let ks = if uses_k { or(&grid.ks, base.k) } else { vec![base.k] };
    let cs = if grid.cs.is_empty() { vec![base.c] } else { grid.cs.clone() };

    let (train, test) = split_for(corpus, base)?;
    let text = embedding_corpus(&train, embed_text)?;
    let mut reports = Vec::new();
    for &dim in &dims {
        let mut cfg = base.clone();
        cfg.embed.dim = dim;
        let emb = embed_stage(&text, &cfg)?;
        for &k in &ks {
            cfg.k = k;
            cfg.validate()?;
            let (tr, te) = feature_stage(&train, &test, emb.as_ref(), &cfg)?;
            for &c in &cs {
                cfg.c = c;
                cfg.validate()?;
                reports.push(score_features(&tr, &te, &cfg)?);
            }
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentencePair {
    pub ordinary: Vec<String>,
    pub simple: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentencePairSet {
    pub pairs: Vec<SentencePair>,
    /// Pairs with a side left empty by preprocessing.
    pub dropped: usize,
}

impl SentencePairSet {
    /// `ordinary<TAB>simple` per line; blank lines are skipped.
    pub fn parse(path: &Path, text: &str, stops: &StopwordList) -> Result<Self> {
        let mut set = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split('\t');
            let (Some(o), Some(s), None) = (f.next(), f.next(), f.next()) else {
                return Err(Error::parse(path, i + 1, "expected `ordinary<TAB>simple`"));
            };
            let ordinary = Document::from_text("", o, stops).tokens;
            let simple = Document::from_text("", s, stops).tokens;
            if ordinary.is_empty() || simple.is_empty() {
                set.dropped += 1;
            } else {
                set.pairs.push(SentencePair { ordinary, simple });
            }
        }
        Ok(set)
    }

    pub fn load(path: &Path, stops: &StopwordList) -> Result<Self> {
        Self::parse(path, &crate::persist::read_text(path)?, stops)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    Cosine,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            _ => Err(Error::Validation(format!("unknown metric {s:?} (expected euclidean or cosine)"))),
        }
    }
}

impl Metric {
    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Cosine => 1.0 - crate::embed::cosine(a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// `p_n[i]` is P_{i+1}.
    pub p_n: Vec<f64>,
    pub sample_n: usize,
    /// Sampled pairs that could be embedded on both sides.
    pub evaluated: usize,
    pub dropped_preprocessing: usize,
    /// Sampled pairs with a side that has no token the model can embed.
    pub dropped_oov: usize,
    pub metric: Metric,
    pub seed: u64,
}

impl MatchReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.p_n.iter().enumerate() {
            writeln!(out, "P_{}\t{p:.4}", i + 1).unwrap();
        }
        writeln!(
            out,
            "evaluated {} of {} sampled pairs ({} dropped in preprocessing, {} without embeddable tokens)",
            self.evaluated, self.sample_n, self.dropped_preprocessing, self.dropped_oov
        )
        .unwrap();
        out
    }
}

fn sentence_vector(tokens: &[String], model: &EmbeddingModel) -> Result<Option<Vec<f64>>> {
    let vs = tokens
        .iter()
        .filter(|w| model.can_embed(w))
        .map(|w| word_vector(w, model))
        .collect::<Result<Vec<_>>>()?;
    if vs.is_empty() {
        return Ok(None);
    }
    pool(&vs, &vec![1.0; vs.len()]).map(Some)
}

/// Samples `sample_n` pairs, average-pools each sentence, and for every
/// ordinary sentence ranks all sampled simple sentences by distance.
/// P_N is the fraction whose counterpart ranks within the top N; ties count
/// against the true counterpart.
pub fn run_matching_experiment(
    pairs: &SentencePairSet,
    sample_n: usize,
    n_max: usize,
    model: &EmbeddingModel,
    seed: u64,
    metric: Metric,
) -> Result<MatchReport> {
    if sample_n == 0 || sample_n > pairs.len() {
        return Err(Error::Validation(format!(
            "sample_n must be in 1..={}, got {sample_n}",
            pairs.len()
        )));
    }
    if n_max == 0 {
        return Err(Error::Validation("n_max must be ≥ 1".into()));
    }
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.shuffle(&mut rng(seed));
    idx.truncate(sample_n);

    let mut ordinary = Vec::new();
    let mut simple = Vec::new();
    for &i in &idx {
        let p = &pairs.pairs[i];
        if let (Some(o), Some(s)) = (sentence_vector(&p.ordinary, model)?, sentence_vector(&p.simple, model)?) {
            ordinary.push(o);
            simple.push(s);
        }
    }
    let m = ordinary.len();
    if m == 0 {
        return Err(Error::Validation("no sampled pair has embeddable tokens on both sides".into()));
    }
    let mut hits = vec![0usize; n_max];
    for (i, o) in ordinary.iter().enumerate() {
        let own = metric.distance(o, &simple[i]);
        let rank = 1 + simple
            .iter()
            .enumerate()
            .filter(|&(j, s)| j != i && metric.distance(o, s) <= own)
            .count();
        for h in hits.iter_mut().skip(rank - 1) {
            *h += 1;
        }
    }
    Ok(MatchReport {
        p_n: hits.iter().map(|&h| h as f64 / m as f64).collect(),
        sample_n,
        evaluated: m,
        dropped_preprocessing: pairs.dropped,
        dropped_oov: sample_n - m,
        metric,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{Matrix, ModelKind, Vocabulary};
    use proptest::prelude::*;
    use rand::seq::IndexedRandom;

    fn corpus(n: usize) -> Corpus {
        let docs = (0..n)
            .map(|i| Document::new(format!("d{i}"), vec![format!("w{i}")], Some(i as f64)))
            .collect();
        Corpus::new("c", docs).unwrap()
    }

    #[test]
    fn split_sizes() {
        let (a, b) = split_train_test(&corpus(168), 0.8, 1).unwrap();
        assert_eq!((a.len(), b.len()), (135, 33));
        let (a, b) = split_train_test(&corpus(5), 0.8, 1).unwrap();
        assert_eq!((a.len(), b.len()), (4, 1));
        let (a, b) = split_train_test(&corpus(10), 0.8, 1).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a, b) = split_train_test_sized(&corpus(168), 136, 1).unwrap();
        assert_eq!((a.len(), b.len()), (136, 32));
    }

    #[test]
    fn split_is_seeded_partition() {
        let c = corpus(20);
        let (a1, b1) = split_train_test(&c, 0.8, 9).unwrap();
        let (a2, b2) = split_train_test(&c, 0.8, 9).unwrap();
        assert_eq!((&a1, &b1), (&a2, &b2));
        let mut ids: Vec<&str> = a1.documents.iter().chain(&b1.documents).map(|d| d.id.as_str()).collect();
        ids.sort();
        let mut all: Vec<&str> = c.documents.iter().map(|d| d.id.as_str()).collect();
        all.sort();
        assert_eq!(ids, all);
        let (a3, _) = split_train_test(&c, 0.8, 10).unwrap();
        assert_ne!(a1, a3);
    }

    #[test]
    fn split_errors() {
        assert!(split_train_test(&corpus(5), 0.0, 1).is_err());
        assert!(split_train_test(&corpus(5), 1.0, 1).is_err());
        assert!(split_train_test(&corpus(1), 0.5, 1).is_err());
        assert!(split_train_test(&corpus(5), 0.99, 1).is_err());
    }

    #[test]
    fn correlation_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_eq!(pearson(&x, &y).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &neg).unwrap(), -1.0);
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 9.0 / 84f64.sqrt()).abs() < 1e-12);
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        assert_eq!(spearman(&x, &neg).unwrap(), -1.0);
        let s = spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn correlation_errors() {
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::Numeric(_))));
        assert!(matches!(spearman(&[1.0, 2.0], &[3.0, 3.0]), Err(Error::Numeric(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), [2.5, 4.0, 2.5, 1.0]);
    }

    fn vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..20).prop_flat_map(|n| {
            (
                proptest::collection::vec(-5i32..5, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
                proptest::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn spearman_monotone_invariant((x, y) in vectors()) {
            prop_assume!(check_pair(&x, &y).is_ok());
            let base = spearman(&x, &y).unwrap();
            let tx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
            let ty: Vec<f64> = y.iter().map(|v| (v / 50.0).exp()).collect();
            prop_assert!((spearman(&tx, &ty).unwrap() - base).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
        }

        #[test]
        fn pearson_affine_invariant((x, y) in vectors(), a in 0.1f64..10.0, b in -10.0f64..10.0) {
            prop_assume!(check_pair(&x, &y).is_ok());
            let base = pearson(&x, &y).unwrap();
            let tx: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson(&tx, &y).unwrap() - base).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&base));
        }
    }

    fn onehot_model(words: &[&str]) -> EmbeddingModel {
        let n = words.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let vocab = Vocabulary::from_ordered(words.iter().map(|s| s.to_string()).collect(), vec![1; n]);
        let m = Matrix::from_rows(&rows, n).unwrap();
        EmbeddingModel::new(ModelKind::SkipGram, vocab, m.clone(), m, None).unwrap()
    }

    #[test]
    fn matching_shared_word_pairs() {
        let words: Vec<String> = (0..12).map(|i| format!("tok{}", (b'a' + i) as char)).collect();
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        let model = onehot_model(&refs);
        let text: String = words.iter().map(|w| format!("{w}\tThe {w}!\n")).collect();
        let set = SentencePairSet::parse(Path::new("p"), &format!("{text}the\tand\n"), &StopwordList::english()).unwrap();
        assert_eq!((set.len(), set.dropped), (12, 1));
        let r = run_matching_experiment(&set, 10, 10, &model, 3, Metric::Euclidean).unwrap();
        assert_eq!(r.p_n, vec![1.0; 10]);
        let r = run_matching_experiment(&set, 10, 4, &model, 3, Metric::Cosine).unwrap();
        assert_eq!(r.p_n, vec![1.0; 4]);
    }

    #[test]
    fn matching_all_identical_ranks_last() {
        let model = onehot_model(&["x", "y"]);
        let text = "x\tx\nx\tx\nx\tx\ny\tx\n";
        let set = SentencePairSet::parse(Path::new("p"), text, &StopwordList::empty()).unwrap();
        let r = run_matching_experiment(&set, 4, 4, &model, 0, Metric::Euclidean).unwrap();
        // every simple sentence is identical, so each counterpart ties with all
        assert_eq!(r.p_n, [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn matching_counts_oov_and_rejects_bad_sizes() {
        let model = onehot_model(&["x", "y"]);
        let set = SentencePairSet::parse(Path::new("p"), "x\ty\nq\tx\ny\tx\n", &StopwordList::empty()).unwrap();
        let r = run_matching_experiment(&set, 3, 2, &model, 0, Metric::Euclidean).unwrap();
        assert_eq!((r.evaluated, r.dropped_oov), (2, 1));
        assert_eq!(r.p_n[1], 1.0);
        assert!(run_matching_experiment(&set, 4, 2, &model, 0, Metric::Euclidean).is_err());
        assert!(run_matching_experiment(&set, 3, 0, &model, 0, Metric::Euclidean).is_err());
        assert!(SentencePairSet::parse(Path::new("p"), "no tab here\n", &StopwordList::empty()).is_err());
    }

    proptest! {
        #[test]
        fn p_n_monotone(seed: u64, n in 2usize..12) {
            let words = ["a", "b", "c", "d", "e"];
            let model = onehot_model(&words);
            let mut r = rng(seed);
            let text: String = (0..n)
                .map(|_| {
                    let o = words.choose_multiple(&mut r, 2).copied().collect::<Vec<_>>().join(" ");
                    let s = words.choose_multiple(&mut r, 2).copied().collect::<Vec<_>>().join(" ");
                    format!("{o}\t{s}\n")
                })
                .collect();
            let set = SentencePairSet::parse(Path::new("p"), &text, &StopwordList::empty()).unwrap();
            let rep = run_matching_experiment(&set, n, n, &model, seed, Metric::Euclidean).unwrap();
            for w in rep.p_n.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            prop_assert!(rep.p_n.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert_eq!(*rep.p_n.last().unwrap(), 1.0);
        }
    }
}
