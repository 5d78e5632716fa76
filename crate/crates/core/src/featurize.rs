//! Fixed-length document features: cluster-membership histograms under
//! 1-of-K hard assignment, pooled word embeddings, and bag-of-words counts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{brown_assign, kmeans_assign, BrownModel, KMeansModel};
use crate::embed::{pool, word_vector, EmbeddingModel, Vocabulary};
use crate::error::{Error, Result};
use crate::text::{Corpus, Document};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    HistogramCount,
    HistogramBinary,
    PooledUniform,
    PooledTfidf,
    Bow,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::HistogramCount => "histogram-count",
            Scheme::HistogramBinary => "histogram-binary",
            Scheme::PooledUniform => "pooled-uniform",
            Scheme::PooledTfidf => "pooled-tfidf",
            Scheme::Bow => "bow",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "histogram-count" => Scheme::HistogramCount,
            "histogram-binary" => Scheme::HistogramBinary,
            "pooled-uniform" => Scheme::PooledUniform,
            "pooled-tfidf" => Scheme::PooledTfidf,
            "bow" => Scheme::Bow,
            other => return Err(Error::Validation(format!("unknown feature scheme {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A hard word → cluster map.
pub trait WordClusters {
    fn num_clusters(&self) -> usize;

    /// `None` for words the model cannot place; those are skipped.
    fn cluster_of(&self, word: &str) -> Option<usize>;
}

impl WordClusters for BrownModel {
    fn num_clusters(&self) -> usize {
        self.k()
    }

    fn cluster_of(&self, word: &str) -> Option<usize> {
        brown_assign(word, self).ok()
    }
}

/// K-means centroids over an embedding space. Skip-gram models skip unseen
/// words; char-ngram models embed and assign them like any other word.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingClusters<'a> {
    pub embeddings: &'a EmbeddingModel,
    pub centroids: &'a KMeansModel,
}

impl WordClusters for EmbeddingClusters<'_> {
    fn num_clusters(&self) -> usize {
        self.centroids.k()
    }

    fn cluster_of(&self, word: &str) -> Option<usize> {
        if !self.embeddings.can_embed(word) {
            return None;
        }
        let v = word_vector(word, self.embeddings).ok()?;
        kmeans_assign(&v, self.centroids).ok()
    }
}

/// Length-`k` histogram of cluster ids over `tokens`: counts, or 0/1 flags
/// when `binary` is set.
pub fn cluster_histogram<F>(tokens: &[String], k: usize, binary: bool, assign: F) -> FeatureVector
where
    F: Fn(&str) -> Option<usize>,
{
    let mut values = vec![0.0; k];
    for tok in tokens {
        if let Some(c) = assign(tok) {
            assert!(c < k, "cluster id {c} out of range for K = {k}");
            if binary {
                values[c] = 1.0;
            } else {
                values[c] += 1.0;
            }
        }
    }
    let scheme = if binary {
        Scheme::HistogramBinary
    } else {
        Scheme::HistogramCount
    };
    FeatureVector { values, scheme }
}

pub fn histogram_feature(doc: &Document, clusters: &dyn WordClusters, binary: bool) -> FeatureVector {
    cluster_histogram(&doc.tokens, clusters.num_clusters(), binary, |w| clusters.cluster_of(w))
}

/// `v / ‖v‖₂`; the zero vector passes through.
pub fn unit_normalize(v: FeatureVector) -> FeatureVector {
    let norm = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v;
    }
    FeatureVector {
        values: v.values.into_iter().map(|x| x / norm).collect(),
        scheme: v.scheme,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    idf: HashMap<String, f64>,
    n_docs: usize,
}

impl IdfTable {
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// `ln(N / df)`; unseen words are treated as `df = 1`.
    pub fn idf(&self, word: &str) -> f64 {
        self.idf
            .get(word)
            .copied()
            .unwrap_or_else(|| (self.n_docs as f64).ln())
    }
}

pub fn build_idf(corpus: &Corpus) -> Result<IdfTable> {
    if corpus.is_empty() {
        return Err(Error::Validation("cannot build idf from an empty corpus".into()));
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in &corpus.documents {
        let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for w in seen {
            *df.entry(w).or_default() += 1;
        }
    }
    let n = corpus.len();
    let idf = df
        .into_iter()
        .map(|(w, d)| (w.to_owned(), (n as f64 / d as f64).ln()))
        .collect();
    Ok(IdfTable { idf, n_docs: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Uniform,
    Tfidf,
}

/// Weighted average of the document's word vectors. Tokens the model cannot
/// embed are dropped. Tf-idf weighting applies `tf(w)·idf(w)` once per distinct word.
pub fn pooled_feature(
    doc: &Document,
    model: &EmbeddingModel,
    weighting: Weighting,
    idf: Option<&IdfTable>,
) -> Result<FeatureVector> {
    let tokens: Vec<&str> = doc
        .tokens
        .iter()
        .map(String::as_str)
        .filter(|w| model.can_embed(w))
        .collect();
    if tokens.is_empty() {
        return Err(Error::Validation(format!(
            "document {:?} has no tokens the embedding model can represent",
            doc.id
        )));
    }
    let (words, weights, scheme): (Vec<&str>, Vec<f64>, Scheme) = match weighting {
        Weighting::Uniform => {
            let n = tokens.len();
            (tokens, vec![1.0; n], Scheme::PooledUniform)
        }
        Weighting::Tfidf => {
            let idf = idf.ok_or_else(|| Error::Validation("tf-idf weighting requires an idf table".into()))?;
            let mut order: Vec<&str> = Vec::new();
            let mut tf: HashMap<&str, f64> = HashMap::new();
            for w in tokens {
                let e = tf.entry(w).or_insert_with(|| {
                    order.push(w);
                    0.0
                });
                *e += 1.0;
            }
            let weights = order.iter().map(|w| tf[w] * idf.idf(w)).collect();
            (order, weights, Scheme::PooledTfidf)
        }
    };
    let vectors = words
        .iter()
        .map(|w| word_vector(w, model))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector {
        values: pool(&vectors, &weights)?,
        scheme,
    })
}

/// Length-V count vector over `vocab`; out-of-vocabulary tokens are dropped.
pub fn bow_feature(doc: &Document, vocab: &Vocabulary) -> FeatureVector {
    let mut values = vec![0.0; vocab.len()];
    for tok in &doc.tokens {
        if let Some(i) = vocab.index_of(tok) {
            values[i] += 1.0;
        }
    }
    FeatureVector {
        values,
        scheme: Scheme::Bow,
    }
}

/// One persisted feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub label: Option<f64>,
    pub values: Vec<f64>,
}

/// A configured feature extractor.
#[derive(Clone, Copy)]
pub enum Featurizer<'a> {
    Histogram {
        clusters: &'a dyn WordClusters,
        binary: bool,
    },
    Pooled {
        model: &'a EmbeddingModel,
        weighting: Weighting,
        idf: Option<&'a IdfTable>,
    },
    Bow {
        vocab: &'a Vocabulary,
    },
}

impl Featurizer<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Featurizer::Histogram { clusters, .. } => clusters.num_clusters(),
            Featurizer::Pooled { model, .. } => model.dim(),
            Featurizer::Bow { vocab } => vocab.len(),
        }
    }

    /// Features for one document. A document with nothing to pool (no
    /// embeddable token, or all tf-idf weights zero) maps to the zero vector.
    pub fn apply(&self, doc: &Document, normalize: bool) -> Result<FeatureVector> {
        let v = match *self {
            Featurizer::Histogram { clusters, binary } => histogram_feature(doc, clusters, binary),
            Featurizer::Pooled { model, weighting, idf } => {
                let scheme = match weighting {
                    Weighting::Uniform => Scheme::PooledUniform,
                    Weighting::Tfidf => Scheme::PooledTfidf,
                };
                let usable = doc.tokens.iter().any(|w| {
                    model.can_embed(w) && (weighting == Weighting::Uniform || idf.is_some_and(|t| t.idf(w) > 0.0))
                });
                if usable {
                    pooled_feature(doc, model, weighting, idf)?
                } else if weighting == Weighting::Tfidf && idf.is_none() {
                    return Err(Error::Validation("tf-idf weighting requires an idf table".into()));
                } else {
                    FeatureVector {
                        values: vec![0.0; model.dim()],
                        scheme,
                    }
                }
            }
            Featurizer::Bow { vocab } => bow_feature(doc, vocab),
        };
        Ok(if normalize { unit_normalize(v) } else { v })
    }

    pub fn rows(&self, corpus: &Corpus, normalize: bool) -> Result<Vec<FeatureRow>> {
        corpus
            .documents
            .iter()
            .map(|d| {
                Ok(FeatureRow {
                    id: d.id.clone(),
                    label: d.label,
                    values: self.apply(d, normalize)?.values,
                })
            })
            .collect()
    }
}
