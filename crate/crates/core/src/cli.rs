//! Command-line front end. Settings come from defaults, then an optional
//! `key = value` config file, then command-line flags.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::cluster::{brown_fit_with, BrownModel, KMeansModel};
use crate::embed::{build_vocab, train, EmbeddingModel, TrainConfig, TrainKind, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{
    cluster_vocabulary, run_matching_experiment, run_readability_experiment_with, sweep, ClusterMethod,
    EvalReport, ExperimentConfig, Metric, SentencePairSet, SweepGrid,
};
use crate::featurize::{build_idf, EmbeddingClusters, Featurizer, IdfTable, Scheme, Weighting};
use crate::persist;
use crate::regress::{svr_predict, svr_train_with, SvrOptions};
use crate::seed::derive_seed;
use crate::text::{load_corpus, Corpus, Document, StopwordList};

macro_rules! params {
    ($($field:ident : $help:literal),* $(,)?) => {
        /// Settings accepted both as `--flag value` and as config-file keys.
        #[derive(Args, Debug, Default, Clone)]
        pub struct Params {
            $(
                #[arg(long, global = true, value_name = "VALUE", help = $help)]
                pub $field: Option<String>,
            )*
        }

        impl Params {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut v = Vec::new();
                $(
                    if let Some(x) = &self.$field {
                        v.push((stringify!($field), x.as_str()));
                    }
                )*
                v
            }
        }
    };
}

params! {
    corpus_dir: "Directory of .txt documents",
    labels: "Label manifest (filename<TAB>label)",
    stopwords: "Stopword list file (default: bundled English list)",
    keep_stopwords_for_training: "Train embeddings on text with stopwords kept (true/false)",
    embeddings: "Embedding file",
    clusters: "Cluster model file (K-means centroids or Brown class TSV)",
    merges: "Brown merge-history TSV",
    features: "Feature TSV",
    model: "Regression model file",
    output: "Output file",
    output_dir: "Output directory for reports",
    pairs: "Sentence-pair TSV (ordinary<TAB>simple)",
    kind: "Embedding model: skip-gram or char-ngram",
    dim: "Embedding dimension",
    window: "Context window",
    negatives: "Negative samples per pair",
    epochs: "Training epochs",
    lr: "Initial learning rate",
    lr_final: "Final learning rate",
    min_count: "Minimum word count for the vocabulary",
    ngram_min: "Shortest character n-gram",
    ngram_max: "Longest character n-gram",
    threads: "Training threads",
    cluster: "Clusterer: kmeans or brown",
    k: "Number of clusters",
    kmeans_iters: "K-means iteration cap",
    kmeans_restarts: "K-means restarts",
    scheme: "Features: histogram-count, histogram-binary, pooled-uniform, pooled-tfidf or bow",
    normalize: "Unit-normalize feature vectors (true/false)",
    c: "SVR complexity parameter C",
    epsilon: "SVR epsilon",
    train_fraction: "Training fraction of the split",
    train_size: "Exact training-set size (overrides train_fraction)",
    sweep_dims: "Comma-separated embedding dimensions to sweep",
    sweep_ks: "Comma-separated K values to sweep",
    sweep_cs: "Comma-separated C values to sweep",
    sample_n: "Sentence pairs to sample",
    n_max: "Largest N for P_N",
    metric: "Matching distance: euclidean or cosine",
    seed: "Root seed",
}

#[derive(Parser, Debug)]
#[command(name = "clusterlm", version, about = "Clustering-based language models for readability regression")]
pub struct Cli {
    /// `key = value` config file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Single-threaded, bit-reproducible run.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(flatten)]
    pub params: Params,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train word embeddings on a corpus.
    TrainEmbeddings,
    /// Fit K-means centroids over embeddings, or Brown classes over a corpus.
    Cluster,
    /// Write one feature row per document.
    Featurize,
    /// Fit the SVR on a feature TSV.
    TrainRegressor,
    /// Print the predicted readability of one document.
    Predict {
        document: PathBuf,
    },
    /// Split, train, and score a labeled corpus.
    Evaluate,
    /// Sentence matching P_N table.
    Match,
}

/// Every setting, after defaults, config file and flags are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus_dir: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub keep_stopwords_for_training: bool,
    pub embeddings: Option<PathBuf>,
    pub clusters: Option<PathBuf>,
    pub merges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub experiment: ExperimentConfig,
    pub sweep: SweepGrid,
    pub sample_n: Option<usize>,
    pub n_max: usize,
    pub metric: Metric,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_dir: None,
            labels: None,
            stopwords: None,
            keep_stopwords_for_training: false,
            embeddings: None,
            clusters: None,
            merges: None,
            features: None,
            model: None,
            output: None,
            output_dir: None,
            pairs: None,
            experiment: ExperimentConfig::default(),
            sweep: SweepGrid::default(),
            sample_n: None,
            n_max: 4,
            metric: Metric::Euclidean,
        }
    }
}

fn invalid(field: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Validation(format!("field `{field}`: invalid value {value:?}: {why}"))
}

fn parse<T: FromStr>(field: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| invalid(field, value, e))
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(field, value, "expected true or false")),
    }
}

fn parse_list<T: FromStr>(field: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| parse(field, v.trim())).collect()
}

fn in_range<T: PartialOrd + std::fmt::Display + Copy>(field: &str, v: T, lo: T, hi: T) -> Result<()> {
    if v < lo || v > hi {
        return Err(Error::Validation(format!("field `{field}`: {v} is outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl RunConfig {
    /// Applies one setting; `key` may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let f = key.as_str();
        let e = &mut self.experiment;
        match f {
            "corpus_dir" => self.corpus_dir = Some(value.into()),
            "labels" => self.labels = Some(value.into()),
            "stopwords" => self.stopwords = Some(value.into()),
            "keep_stopwords_for_training" => self.keep_stopwords_for_training = parse_bool(f, value)?,
            "embeddings" => self.embeddings = Some(value.into()),
            "clusters" => self.clusters = Some(value.into()),
            "merges" => self.merges = Some(value.into()),
            "features" => self.features = Some(value.into()),
            "model" => self.model = Some(value.into()),
            "output" => self.output = Some(value.into()),
            "output_dir" => self.output_dir = Some(value.into()),
            "pairs" => self.pairs = Some(value.into()),
            "kind" => {
                e.embed.kind = match value {
                    "skip-gram" => TrainKind::SkipGram,
                    "char-ngram" => TrainKind::CharNgram,
                    _ => return Err(invalid(f, value, "expected skip-gram or char-ngram")),
                }
            }
            "dim" => e.embed.dim = parse(f, value)?,
            "window" => e.embed.window = parse(f, value)?,
            "negatives" => e.embed.negatives = parse(f, value)?,
            "epochs" => e.embed.epochs = parse(f, value)?,
            "lr" => e.embed.lr_initial = parse(f, value)?,
            "lr_final" => e.embed.lr_final = parse(f, value)?,
            "min_count" => e.embed.min_count = parse(f, value)?,
            "ngram_min" => e.embed.ngram_min = parse(f, value)?,
            "ngram_max" => e.embed.ngram_max = parse(f, value)?,
            "threads" => e.embed.threads = parse(f, value)?,
            "cluster" => e.cluster = parse(f, value)?,
            "k" => e.k = parse(f, value)?,
            "kmeans_iters" => e.kmeans_max_iters = parse(f, value)?,
            "kmeans_restarts" => e.kmeans_restarts = parse(f, value)?,
            "scheme" => e.scheme = parse(f, value)?,
            "normalize" => e.normalize = parse_bool(f, value)?,
            "c" => e.c = parse(f, value)?,
            "epsilon" => e.epsilon = parse(f, value)?,
            "train_fraction" => e.train_fraction = parse(f, value)?,
            "train_size" => e.train_size = Some(parse(f, value)?),
            "seed" => e.root_seed = parse(f, value)?,
            "sweep_dims" => self.sweep.dims = parse_list(f, value)?,
            "sweep_ks" => self.sweep.ks = parse_list(f, value)?,
            "sweep_cs" => self.sweep.cs = parse_list(f, value)?,
            "sample_n" => self.sample_n = Some(parse(f, value)?),
            "n_max" => self.n_max = parse(f, value)?,
            "metric" => self.metric = parse(f, value)?,
            _ => return Err(Error::Validation(format!("unknown field `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment line.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = persist::read_text(path)?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
            let v = v.trim();
            let v = v
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(v);
            self.set(k.trim(), v).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    /// Numeric ranges. Wider than the usual search grid (d 32–300, K 10–200,
    /// C 1e-5–1) so that small test runs stay valid.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        let t = &e.embed;
        in_range("dim", t.dim, 1, 4096)?;
        in_range("window", t.window, 1, 100)?;
        in_range("negatives", t.negatives, 1, 100)?;
        in_range("epochs", t.epochs, 0, 10_000)?;
        in_range("threads", t.threads, 1, 1024)?;
        in_range("ngram_min", t.ngram_min, 1, 32)?;
        in_range("ngram_max", t.ngram_max, t.ngram_min, 32)?;
        in_range("lr", t.lr_initial, f64::MIN_POSITIVE, 10.0)?;
        in_range("lr_final", t.lr_final, f64::MIN_POSITIVE, t.lr_initial)?;
        in_range("k", e.k, 1, 100_000)?;
        in_range("kmeans_iters", e.kmeans_max_iters, 1, 1_000_000)?;
        in_range("kmeans_restarts", e.kmeans_restarts, 1, 1000)?;
        in_range("c", e.c, f64::MIN_POSITIVE, 1e9)?;
        in_range("epsilon", e.epsilon, 0.0, 1e9)?;
        if !(e.train_fraction > 0.0 && e.train_fraction < 1.0) {
            return Err(Error::Validation(format!(
                "field `train_fraction`: {} is outside (0, 1)",
                e.train_fraction
            )));
        }
        if let Some(n) = e.train_size {
            in_range("train_size", n, 1, usize::MAX)?;
        }
        in_range("n_max", self.n_max, 1, usize::MAX)?;
        if let Some(n) = self.sample_n {
            in_range("sample_n", n, 1, usize::MAX)?;
        }
        for d in &self.sweep.dims {
            in_range("sweep_dims", *d, 1, 4096)?;
        }
        for k in &self.sweep.ks {
            in_range("sweep_ks", *k, 1, 100_000)?;
        }
        for c in &self.sweep.cs {
            in_range("sweep_cs", *c, f64::MIN_POSITIVE, 1e9)?;
        }
        for (field, p) in [
            ("corpus_dir", &self.corpus_dir),
            ("labels", &self.labels),
            ("stopwords", &self.stopwords),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(missing(field, p));
                }
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.experiment.root_seed
    }
}

fn missing(field: &str, p: &Path) -> Error {
    Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, format!("file for `{field}` not found")))
}

fn require<'a>(field: &str, v: &'a Option<PathBuf>) -> Result<&'a Path> {
    v.as_deref()
        .ok_or_else(|| Error::Validation(format!("missing required field `{field}`")))
}

/// A required input artifact that must already exist.
fn input<'a>(field: &str, v: &'a Option<PathBuf>) -> Result<&'a Path> {
    let p = require(field, v)?;
    if !p.exists() {
        return Err(missing(field, p));
    }
    Ok(p)
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for (k, v) in cli.params.pairs() {
        cfg.set(k, v)?;
    }
    if cli.deterministic {
        cfg.experiment.embed.threads = 1;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stopwords(cfg: &RunConfig) -> Result<StopwordList> {
    match &cfg.stopwords {
        Some(p) => StopwordList::load(p),
        None => Ok(StopwordList::english()),
    }
}

fn corpus(cfg: &RunConfig, stops: &StopwordList) -> Result<Corpus> {
    let dir = input("corpus_dir", &cfg.corpus_dir)?;
    let labels = match &cfg.labels {
        Some(_) => Some(input("labels", &cfg.labels)?),
        None => None,
    };
    load_corpus(dir, labels, stops)
}

/// Corpus for embedding training, and the same corpus with stopwords kept if
/// that is requested.
fn corpora(cfg: &RunConfig) -> Result<(Corpus, Option<Corpus>)> {
    let stops = stopwords(cfg)?;
    let main = corpus(cfg, &stops)?;
    let raw = if cfg.keep_stopwords_for_training {
        Some(corpus(cfg, &StopwordList::empty())?)
    } else {
        None
    };
    Ok((main, raw))
}

fn train_config(cfg: &RunConfig) -> TrainConfig {
    cfg.experiment.embed_config()
}

fn cmd_train_embeddings(cfg: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    let output = require("output", &cfg.output)?;
    let (main, raw) = corpora(cfg)?;
    let tc = train_config(cfg);
    if tc.kind == TrainKind::PvDbow {
        return Err(Error::Validation("field `kind`: must be skip-gram or char-ngram".into()));
    }
    let model = train(raw.as_ref().unwrap_or(&main), &tc)?;
    persist::write_embeddings(output, &model, cfg.seed())?;
    writeln!(out, "wrote {} word vectors (d = {}) to {}", model.vocab().len(), model.dim(), output.display())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_cluster(cfg: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    let output = require("output", &cfg.output)?;
    let e = &cfg.experiment;
    let msg = match e.cluster {
        ClusterMethod::Kmeans => {
            let emb = persist::read_embeddings(input("embeddings", &cfg.embeddings)?)?;
            let seed = derive_seed(e.root_seed, "kmeans");
            let model = cluster_vocabulary(&emb, e.k, e.kmeans_max_iters, e.kmeans_restarts, seed)?;
            persist::write_kmeans(output, &model, cfg.seed())?;
            format!("wrote {} centroids to {}", model.k(), output.display())
        }
        ClusterMethod::Brown => {
            let (main, _) = corpora(cfg)?;
            let model = brown_fit_with(&main, e.k, e.embed.min_count)?;
            persist::write_brown(output, cfg.merges.as_deref(), &model, cfg.seed())?;
            format!("wrote {} Brown classes to {}", model.k(), output.display())
        }
    };
    writeln!(out, "{msg}").map_err(|e| Error::io("<stdout>", e))
}

/// Artifacts a featurizer borrows from.
struct FeatureInputs {
    embeddings: Option<EmbeddingModel>,
    kmeans: Option<KMeansModel>,
    brown: Option<BrownModel>,
    idf: Option<IdfTable>,
    vocab: Option<Vocabulary>,
}

fn feature_inputs(cfg: &RunConfig, corpus: Option<&Corpus>) -> Result<FeatureInputs> {
    let e = &cfg.experiment;
    let mut fi = FeatureInputs {
        embeddings: None,
        kmeans: None,
        brown: None,
        idf: None,
        vocab: None,
    };
    let reference = |what: &str| {
        corpus.ok_or_else(|| Error::Validation(format!("missing required field `corpus_dir` ({what})")))
    };
    match e.scheme {
        Scheme::HistogramCount | Scheme::HistogramBinary => match e.cluster {
            ClusterMethod::Kmeans => {
                fi.embeddings = Some(persist::read_embeddings(input("embeddings", &cfg.embeddings)?)?);
                fi.kmeans = Some(persist::read_kmeans(input("clusters", &cfg.clusters)?)?);
            }
            ClusterMethod::Brown => {
                fi.brown = Some(persist::read_brown(input("clusters", &cfg.clusters)?, None)?);
            }
        },
        Scheme::PooledUniform => {
            fi.embeddings = Some(persist::read_embeddings(input("embeddings", &cfg.embeddings)?)?);
        }
        Scheme::PooledTfidf => {
            fi.embeddings = Some(persist::read_embeddings(input("embeddings", &cfg.embeddings)?)?);
            fi.idf = Some(build_idf(reference("document frequencies")?)?);
        }
        Scheme::Bow => fi.vocab = Some(build_vocab(reference("vocabulary")?, 1)?),
    }
    if let (Some(emb), Some(km)) = (&fi.embeddings, &fi.kmeans) {
        if emb.dim() != km.dim() {
            return Err(Error::DimensionMismatch {
                expected: emb.dim(),
                found: km.dim(),
            });
        }
    }
    Ok(fi)
}

fn with_featurizer<T>(fi: &FeatureInputs, scheme: Scheme, f: impl FnOnce(Featurizer) -> Result<T>) -> Result<T> {
    let binary = scheme == Scheme::HistogramBinary;
    if let (Some(emb), Some(km)) = (&fi.embeddings, &fi.kmeans) {
        let clusters = EmbeddingClusters {
            embeddings: emb,
            centroids: km,
        };
        return f(Featurizer::Histogram {
            clusters: &clusters,
            binary,
        });
    }
    if let Some(b) = &fi.brown {
        return f(Featurizer::Histogram { clusters: b, binary });
    }
    if let Some(v) = &fi.vocab {
        return f(Featurizer::Bow { vocab: v });
    }
    let model = fi.embeddings.as_ref().expect("pooling needs embeddings");
    let weighting = if scheme == Scheme::PooledTfidf {
        Weighting::Tfidf
    } else {
        Weighting::Uniform
    };
    f(Featurizer::Pooled {
        model,
        weighting,
        idf: fi.idf.as_ref(),
    })
}

fn cmd_featurize(cfg: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    let output = require("output", &cfg.output)?;
    let (main, _) = corpora(cfg)?;
    let fi = feature_inputs(cfg, Some(&main))?;
    let rows = with_featurizer(&fi, cfg.experiment.scheme, |f| f.rows(&main, cfg.experiment.normalize))?;
    persist::write_features(output, &rows, cfg.seed())?;
    writeln!(out, "wrote {} feature rows to {}", rows.len(), output.display()).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_train_regressor(cfg: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    let output = require("output", &cfg.output)?;
    let path = input("features", &cfg.features)?;
    let rows = persist::read_features(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in &rows {
        let y = r
            .label
            .ok_or_else(|| Error::Validation(format!("{}: document {:?} has no label", path.display(), r.id)))?;
        xs.push(r.values.as_slice());
        ys.push(y);
    }
    let e = &cfg.experiment;
    let opts = SvrOptions {
        c: e.c,
        epsilon: e.epsilon,
        seed: derive_seed(e.root_seed, "svr"),
        ..SvrOptions::default()
    };
    let fit = svr_train_with(&xs, &ys, &opts)?;
    persist::write_svr(output, &fit.model, cfg.seed())?;
    writeln!(
        out,
        "trained on {} rows in {} epochs{}; wrote {}",
        rows.len(),
        fit.epochs,
        if fit.converged { "" } else { " (epoch cap reached)" },
        output.display()
    )
    .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_predict(cfg: &RunConfig, document: &Path, out: &mut dyn std::io::Write) -> Result<()> {
    let model = persist::read_svr(input("model", &cfg.model)?)?;
    if !document.exists() {
        return Err(missing("document", document));
    }
    let stops = stopwords(cfg)?;
    let reference = match &cfg.corpus_dir {
        Some(_) => Some(corpus(cfg, &stops)?),
        None => None,
    };
    let fi = feature_inputs(cfg, reference.as_ref())?;
    let raw = persist::read_text(document)?;
    let doc = Document::from_text("input", &raw, &stops);
    let x = with_featurizer(&fi, cfg.experiment.scheme, |f| f.apply(&doc, cfg.experiment.normalize))?;
    let y = svr_predict(&model, &x.values)?;
    writeln!(out, "{y}").map_err(|e| Error::io("<stdout>", e))
}

fn cmd_evaluate(cfg: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    require("labels", &cfg.labels)?;
    let (main, raw) = corpora(cfg)?;
    let grid = &cfg.sweep;
    let report = if grid.dims.is_empty() && grid.ks.is_empty() && grid.cs.is_empty() {
        run_readability_experiment_with(&main, raw.as_ref(), &cfg.experiment)?
    } else {
        let reports = sweep(&main, raw.as_ref(), &cfg.experiment, grid)?;
        if let Some(dir) = &cfg.output_dir {
            let mut tsv = String::from("dim\tk\tc\tspearman\tpearson\n");
            for r in &reports {
                let c = &r.config;
                tsv.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", c.embed.dim, c.k, c.c, r.spearman, r.pearson));
            }
            persist::write_text(&dir.join("sweep.tsv"), &tsv)?;
        }
        best_report(reports)
    };
    if let Some(dir) = &cfg.output_dir {
        persist::write_text(&dir.join("report.json"), &report.to_json())?;
        persist::write_text(&dir.join("report.txt"), &report.to_text())?;
    }
    out.write_all(report.to_text().as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

/// Highest Spearman; the first such point wins ties.
fn best_report(reports: Vec<EvalReport>) -> EvalReport {
    let mut best: Option<EvalReport> = None;
    for r in reports {
        if best.as_ref().is_none_or(|b| r.spearman > b.spearman) {
            best = Some(r);
        }
    }
    best.expect("sweep has at least one point")
}

fn cmd_match(cfg: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    let stops = stopwords(cfg)?;
    let pairs = SentencePairSet::load(input("pairs", &cfg.pairs)?, &stops)?;
    let model = persist::read_embeddings(input("embeddings", &cfg.embeddings)?)?;
    let sample_n = cfg.sample_n.unwrap_or(pairs.len().min(1000));
    let seed = derive_seed(cfg.seed(), "match");
    let report = run_matching_experiment(&pairs, sample_n, cfg.n_max, &model, seed, cfg.metric)?;
    if let Some(path) = &cfg.output {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        persist::write_text(path, &(json + "\n"))?;
    }
    out.write_all(report.to_text().as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

pub fn execute(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::TrainEmbeddings => cmd_train_embeddings(&cfg, out),
        Command::Cluster => cmd_cluster(&cfg, out),
        Command::Featurize => cmd_featurize(&cfg, out),
        Command::TrainRegressor => cmd_train_regressor(&cfg, out),
        Command::Predict { document } => cmd_predict(&cfg, document, out),
        Command::Evaluate => cmd_evaluate(&cfg, out),
        Command::Match => cmd_match(&cfg, out),
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_names_the_field() {
        let mut c = RunConfig::default();
        let err = c.set("dim", "abc").unwrap_err().to_string();
        assert!(err.contains("`dim`"), "{err}");
        assert!(c.set("bogus", "1").unwrap_err().to_string().contains("`bogus`"));
        c.set("train-fraction", "0.5").unwrap();
        assert_eq!(c.experiment.train_fraction, 0.5);
    }

    #[test]
    fn validate_names_the_field() {
        let mut c = RunConfig::default();
        c.set("k", "0").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("`k`"));
        let mut c = RunConfig::default();
        c.set("corpus_dir", "/definitely/not/here").unwrap();
        let e = c.validate().unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("/definitely/not/here"));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\ndim = 12\nk = 7\nscheme = \"bow\"\n").unwrap();
        let cli = Cli::try_parse_from([
            "clusterlm".as_ref(),
            "--config".as_ref(),
            path.as_os_str(),
            "evaluate".as_ref(),
            "--k".as_ref(),
            "9".as_ref(),
            "--deterministic".as_ref(),
            "--threads".as_ref(),
            "4".as_ref(),
        ])
        .unwrap();
        let cfg = build_config(&cli).unwrap();
        assert_eq!(cfg.experiment.embed.dim, 12);
        assert_eq!(cfg.experiment.k, 9);
        assert_eq!(cfg.experiment.scheme, Scheme::Bow);
        assert_eq!(cfg.experiment.embed.threads, 1);
    }

    #[test]
    fn bad_config_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "dim = 12\nnonsense\n").unwrap();
        let mut c = RunConfig::default();
        match c.apply_file(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
