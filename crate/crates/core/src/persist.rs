//! Text file formats for every pipeline artifact.
//!
//! Every file written here starts with a `# clusterlm <version> seed=<seed>`
//! line. Readers skip leading `# ` comment lines. Floats are written with the
//! shortest representation that parses back to the same bits.
//!
//! Embedding files:
//!
//! ```text
//! V d
//! word v1 .. vd            (V lines, input vectors)
//! #ngrams G d n_min n_max  (char-ngram models only)
//! gram v1 .. vd            (G lines)
//! #context V d             (optional output vectors)
//! word v1 .. vd
//! #counts V                (optional vocabulary counts)
//! word count
//! ```
//!
//! A bare `V d` file from another tool loads as a skip-gram model with zero
//! output vectors and zero counts. For char-ngram files the word rows are
//! recomputed from the n-gram table on load.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cluster::{BrownModel, KMeansModel, Merge};
use crate::embed::{EmbeddingModel, Matrix, ModelKind, NgramTable, Vocabulary};
use crate::error::{Error, Result};
use crate::featurize::FeatureRow;
use crate::regress::SvrModel;

pub fn header_line(seed: u64) -> String {
    format!("# clusterlm {} seed={seed}", crate::VERSION)
}

/// Root seed recorded in a file's header, if any.
pub fn header_seed(contents: &str) -> Option<u64> {
    contents
        .lines()
        .take_while(|l| is_comment(l))
        .find_map(|l| l.split_whitespace().find_map(|t| t.strip_prefix("seed=")?.parse().ok()))
}

fn is_comment(line: &str) -> bool {
    line == "#" || line.starts_with("# ")
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Line reader with 1-based line numbers; skips leading comments and blank lines.
struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        let mut inner = text.lines().enumerate().peekable();
        while inner.next_if(|(_, l)| is_comment(l)).is_some() {}
        Self { path, inner, last: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            if !l.trim().is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }

    fn peek(&mut self) -> Option<&'a str> {
        while self.inner.next_if(|(_, l)| l.trim().is_empty()).is_some() {}
        self.inner.peek().map(|&(_, l)| l)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next()
            .ok_or_else(|| Error::parse(self.path, self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.path, line, msg)
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines, line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| lines.err(line, format!("invalid {what}: {tok:?}")))
}

fn parse_float(lines: &Lines, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = parse_num(lines, line, tok, "number")?;
    if !v.is_finite() {
        return Err(lines.err(line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn push_floats(out: &mut String, values: &[f64], sep: char) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(sep);
        }
        write!(out, "{v}").unwrap();
    }
}

fn push_rows<'a>(out: &mut String, names: impl IntoIterator<Item = &'a str>, m: &Matrix) {
    for (name, row) in names.into_iter().zip(m.iter_rows()) {
        out.push_str(name);
        for v in row {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
}

/// Reads `n` lines of `name v1 .. vd`.
fn read_rows(lines: &mut Lines, n: usize, d: usize) -> Result<(Vec<String>, Matrix)> {
    let mut names = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    let mut seen = HashSet::new();
    for _ in 0..n {
        let (ln, line) = lines.expect("a vector row")?;
        let mut toks = line.split_whitespace();
        let name = toks.next().expect("nonblank line");
        if !seen.insert(name) {
            return Err(lines.err(ln, format!("duplicate entry {name:?}")));
        }
        let before = data.len();
        for t in toks {
            data.push(parse_float(lines, ln, t)?);
        }
        if data.len() - before != d {
            return Err(lines.err(ln, format!("expected {d} values, found {}", data.len() - before)));
        }
        names.push(name.to_string());
    }
    Ok((names, Matrix::from_data(n, d, data)))
}

/// `[#tag] n1 n2 ..` with between `min` and `max` sizes.
fn read_size_header(lines: &mut Lines, tagged: bool, min: usize, max: usize) -> Result<(usize, Vec<usize>)> {
    let (ln, line) = lines.expect("a size header")?;
    let mut toks = line.split_whitespace();
    if tagged {
        toks.next();
    }
    let nums: Vec<usize> = toks
        .map(|t| parse_num(lines, ln, t, "size"))
        .collect::<Result<_>>()?;
    if nums.len() < min || nums.len() > max {
        return Err(lines.err(ln, format!("malformed header {line:?}")));
    }
    Ok((ln, nums))
}

pub fn format_embeddings(model: &EmbeddingModel, seed: u64) -> String {
    let mut out = header_line(seed);
    let d = model.dim();
    let vocab = model.vocab();
    write!(out, "\n{} {d}\n", vocab.len()).unwrap();
    let words = || vocab.words().iter().map(String::as_str);
    push_rows(&mut out, words(), model.input_vectors());
    if let Some(t) = model.ngrams() {
        writeln!(out, "#ngrams {} {d} {} {}", t.len(), t.n_min, t.n_max).unwrap();
        push_rows(&mut out, t.grams().iter().map(String::as_str), t.vectors());
    }
    writeln!(out, "#context {} {d}", vocab.len()).unwrap();
    push_rows(&mut out, words(), model.output_vectors());
    writeln!(out, "#counts {}", vocab.len()).unwrap();
    for (w, c) in vocab.words().iter().zip(vocab.counts()) {
        writeln!(out, "{w} {c}").unwrap();
    }
    out
}

pub fn parse_embeddings(path: &Path, text: &str) -> Result<EmbeddingModel> {
    let mut lines = Lines::new(path, text);
    let (ln, h) = read_size_header(&mut lines, false, 2, 2)?;
    let (v, d) = (h[0], h[1]);
    if d == 0 || v == 0 {
        return Err(lines.err(ln, "vocabulary size and dimension must be ≥ 1"));
    }
    let (words, input) = read_rows(&mut lines, v, d)?;
    let mut ngrams = None;
    let mut output = None;
    let mut counts = None;
    while let Some(next) = lines.peek() {
        let tag = next.split_whitespace().next().unwrap_or("");
        match tag {
            "#ngrams" if ngrams.is_none() => {
                let (ln, h) = read_size_header(&mut lines, true, 2, 4)?;
                if h[1] != d {
                    return Err(lines.err(ln, format!("n-gram dimension {} differs from {d}", h[1])));
                }
                let n_min = h.get(2).copied().unwrap_or(3);
                let n_max = h.get(3).copied().unwrap_or(6);
                let (grams, m) = read_rows(&mut lines, h[0], d)?;
                ngrams = Some(NgramTable::new(n_min, n_max, grams, m).map_err(|e| lines.err(ln, e.to_string()))?);
            }
            "#context" if output.is_none() => {
                let (ln, h) = read_size_header(&mut lines, true, 2, 2)?;
                if h != [v, d] {
                    return Err(lines.err(ln, format!("context section must be {v} x {d}")));
                }
                let (names, m) = read_rows(&mut lines, v, d)?;
                if names != words {
                    return Err(lines.err(ln, "context words differ from vocabulary"));
                }
                output = Some(m);
            }
            "#counts" if counts.is_none() => {
                let (ln, h) = read_size_header(&mut lines, true, 1, 1)?;
                if h[0] != v {
                    return Err(lines.err(ln, format!("counts section must have {v} rows")));
                }
                let mut cs = Vec::with_capacity(v);
                for w in &words {
                    let (ln, line) = lines.expect("a count row")?;
                    let mut toks = line.split_whitespace();
                    if toks.next() != Some(w.as_str()) {
                        return Err(lines.err(ln, format!("expected count for {w:?}")));
                    }
                    let c = toks.next().ok_or_else(|| lines.err(ln, "missing count"))?;
                    cs.push(parse_num(&lines, ln, c, "count")?);
                    if toks.next().is_some() {
                        return Err(lines.err(ln, "trailing fields"));
                    }
                }
                counts = Some(cs);
            }
            _ => {
                let (ln, line) = lines.next().expect("peeked");
                return Err(lines.err(ln, format!("unexpected line {line:?}")));
            }
        }
    }
    let vocab = Vocabulary::from_ordered(words, counts.unwrap_or_else(|| vec![0; v]));
    let output = output.unwrap_or_else(|| Matrix::zeros(v, d));
    match ngrams {
        Some(t) => EmbeddingModel::char_ngram(vocab, t, output),
        None => EmbeddingModel::new(ModelKind::SkipGram, vocab, input, output, None),
    }
}

pub fn write_embeddings(path: &Path, model: &EmbeddingModel, seed: u64) -> Result<()> {
    write_text(path, &format_embeddings(model, seed))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingModel> {
    parse_embeddings(path, &read_text(path)?)
}

pub fn format_kmeans(model: &KMeansModel, seed: u64) -> String {
    let mut out = header_line(seed);
    write!(out, "\n{} {}\n", model.k(), model.dim()).unwrap();
    let names: Vec<String> = (0..model.k()).map(|j| format!("centroid_{j}")).collect();
    push_rows(&mut out, names.iter().map(String::as_str), model.centroids());
    out
}

pub fn parse_kmeans(path: &Path, text: &str) -> Result<KMeansModel> {
    let mut lines = Lines::new(path, text);
    let (ln, h) = read_size_header(&mut lines, false, 2, 2)?;
    if h[0] == 0 || h[1] == 0 {
        return Err(lines.err(ln, "K and dimension must be ≥ 1"));
    }
    let (_, m) = read_rows(&mut lines, h[0], h[1])?;
    if let Some((ln, line)) = lines.next() {
        return Err(lines.err(ln, format!("unexpected line {line:?}")));
    }
    KMeansModel::new(m)
}

pub fn write_kmeans(path: &Path, model: &KMeansModel, seed: u64) -> Result<()> {
    write_text(path, &format_kmeans(model, seed))
}

pub fn read_kmeans(path: &Path) -> Result<KMeansModel> {
    parse_kmeans(path, &read_text(path)?)
}

pub fn format_brown_classes(model: &BrownModel, seed: u64) -> String {
    let mut out = header_line(seed);
    out.push('\n');
    for (w, c) in model.sorted_entries() {
        writeln!(out, "{w}\t{c}").unwrap();
    }
    out
}

pub fn format_brown_merges(model: &BrownModel, seed: u64) -> String {
    let mut out = header_line(seed);
    out.push('\n');
    for m in model.merges() {
        writeln!(out, "{}\t{}\t{}", m.left, m.right, m.loss).unwrap();
    }
    out
}

fn split_tabs<'a>(lines: &Lines, ln: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != n {
        return Err(lines.err(ln, format!("expected {n} tab-separated fields, found {}", f.len())));
    }
    Ok(f)
}

pub fn parse_brown(path: &Path, classes: &str, merges: Option<(&Path, &str)>) -> Result<BrownModel> {
    let mut lines = Lines::new(path, classes);
    let mut map = HashMap::new();
    while let Some((ln, line)) = lines.next() {
        let f = split_tabs(&lines, ln, line, 2)?;
        let c = parse_num(&lines, ln, f[1], "class id")?;
        if map.insert(f[0].to_string(), c).is_some() {
            return Err(lines.err(ln, format!("duplicate word {:?}", f[0])));
        }
    }
    let mut history = Vec::new();
    if let Some((mpath, mtext)) = merges {
        let mut lines = Lines::new(mpath, mtext);
        while let Some((ln, line)) = lines.next() {
            let f = split_tabs(&lines, ln, line, 3)?;
            history.push(Merge {
                left: f[0].to_string(),
                right: f[1].to_string(),
                loss: parse_float(&lines, ln, f[2])?,
            });
        }
    }
    BrownModel::new(map, history).map_err(|e| Error::parse(path, 0, e.to_string()))
}

/// Writes the class map to `path` and, if given, the merge history to `merges`.
pub fn write_brown(path: &Path, merges: Option<&Path>, model: &BrownModel, seed: u64) -> Result<()> {
    write_text(path, &format_brown_classes(model, seed))?;
    if let Some(m) = merges {
        write_text(m, &format_brown_merges(model, seed))?;
    }
    Ok(())
}

pub fn read_brown(path: &Path, merges: Option<&Path>) -> Result<BrownModel> {
    let classes = read_text(path)?;
    let history = merges.map(|m| read_text(m).map(|t| (m, t))).transpose()?;
    parse_brown(path, &classes, history.as_ref().map(|(p, t)| (*p, t.as_str())))
}

pub fn format_features(rows: &[FeatureRow], seed: u64) -> String {
    let mut out = header_line(seed);
    out.push('\n');
    for r in rows {
        out.push_str(&r.id);
        match r.label {
            Some(y) => write!(out, "\t{y}\t").unwrap(),
            None => out.push_str("\tNA\t"),
        }
        push_floats(&mut out, &r.values, ',');
        out.push('\n');
    }
    out
}

pub fn parse_features(path: &Path, text: &str) -> Result<Vec<FeatureRow>> {
    let mut lines = Lines::new(path, text);
    let mut rows: Vec<FeatureRow> = Vec::new();
    let mut ids = HashSet::new();
    while let Some((ln, line)) = lines.next() {
        let f = split_tabs(&lines, ln, line, 3)?;
        if !ids.insert(f[0]) {
            return Err(lines.err(ln, format!("duplicate document id {:?}", f[0])));
        }
        let label = match f[1] {
            "NA" => None,
            t => Some(parse_float(&lines, ln, t)?),
        };
        let values = if f[2].is_empty() {
            Vec::new()
        } else {
            f[2].split(',').map(|t| parse_float(&lines, ln, t)).collect::<Result<_>>()?
        };
        if let Some(first) = rows.first() {
            if first.values.len() != values.len() {
                return Err(lines.err(
                    ln,
                    format!("expected {} feature values, found {}", first.values.len(), values.len()),
                ));
            }
        }
        rows.push(FeatureRow {
            id: f[0].to_string(),
            label,
            values,
        });
    }
    Ok(rows)
}

pub fn write_features(path: &Path, rows: &[FeatureRow], seed: u64) -> Result<()> {
    write_text(path, &format_features(rows, seed))
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>> {
    parse_features(path, &read_text(path)?)
}

pub fn format_svr(model: &SvrModel, seed: u64) -> String {
    let mut out = header_line(seed);
    write!(out, "\n{} {} {}\n{}\n", model.dim(), model.epsilon, model.c, model.bias).unwrap();
    push_floats(&mut out, &model.weights, ' ');
    out.push('\n');
    out
}

pub fn parse_svr(path: &Path, text: &str) -> Result<SvrModel> {
    let mut lines = Lines::new(path, text);
    let (ln, head) = lines.expect("`dim epsilon C`")?;
    let h: Vec<&str> = head.split_whitespace().collect();
    if h.len() != 3 {
        return Err(lines.err(ln, "expected `dim epsilon C`"));
    }
    let dim: usize = parse_num(&lines, ln, h[0], "dimension")?;
    let epsilon = parse_float(&lines, ln, h[1])?;
    let c = parse_float(&lines, ln, h[2])?;
    let (ln, b) = lines.expect("the bias")?;
    let bias = parse_float(&lines, ln, b.trim())?;
    let weights: Vec<f64> = match lines.next() {
        Some((ln, w)) => w
            .split_whitespace()
            .map(|t| parse_float(&lines, ln, t))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    if weights.len() != dim {
        return Err(lines.err(lines.last, format!("expected {dim} weights, found {}", weights.len())));
    }
    if let Some((ln, line)) = lines.next() {
        return Err(lines.err(ln, format!("unexpected line {line:?}")));
    }
    SvrModel::new(weights, bias, epsilon, c).map_err(|e| Error::parse(path, 1, e.to_string()))
}

pub fn write_svr(path: &Path, model: &SvrModel, seed: u64) -> Result<()> {
    write_text(path, &format_svr(model, seed))
}

pub fn read_svr(path: &Path) -> Result<SvrModel> {
    parse_svr(path, &read_text(path)?)
}
