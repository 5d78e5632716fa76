//! Exact greedy Brown clustering.
//!
//! Quality is the average mutual information between the classes of
//! adjacent tokens, `Σ p(c1,c2) ln[p(c1,c2) / (p_l(c1) p_r(c2))]`, over
//! bigrams taken within documents. Starting from one class per word, the
//! pair whose merge loses the least quality is merged until K classes remain.

use std::collections::{BTreeMap, HashMap};

use crate::embed::{build_vocab, Vocabulary};
use crate::error::{Error, Result};
use crate::text::Corpus;

#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    /// Word that seeded the surviving class.
    pub left: String,
    /// Word that seeded the absorbed class.
    pub right: String,
    /// Quality lost by this merge (≥ 0 up to rounding).
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrownModel {
    classes: HashMap<String, usize>,
    k: usize,
    merges: Vec<Merge>,
}

impl BrownModel {
    pub fn new(classes: HashMap<String, usize>, merges: Vec<Merge>) -> Result<Self> {
        let k = classes.values().max().map_or(0, |m| m + 1);
        let mut used = vec![false; k];
        for &c in classes.values() {
            used[c] = true;
        }
        if k == 0 || used.iter().any(|u| !u) {
            return Err(Error::Validation("Brown class ids must cover 0..K-1".into()));
        }
        Ok(Self { classes, k, merges })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn class_map(&self) -> &HashMap<String, usize> {
        &self.classes
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// `(word, class)` pairs sorted by class, then word.
    pub fn sorted_entries(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<_> = self.classes.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        v.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(b.0)));
        v
    }
}

pub fn brown_assign(word: &str, model: &BrownModel) -> Result<usize> {
    model
        .classes
        .get(word)
        .copied()
        .ok_or_else(|| Error::OutOfVocabulary(word.to_owned()))
}

/// `p ln(p / (p_l p_r))` with all three given as counts over `total`; zero for `n = 0`.
#[inline]
fn mi_term(n: f64, left: f64, right: f64, total: f64) -> f64 {
    if n > 0.0 {
        let p = n / total;
        p * (p / ((left / total) * (right / total))).ln()
    } else {
        0.0
    }
}

/// Average mutual information of adjacent class pairs in `corpus` under `classmap`.
pub fn brown_quality(corpus: &Corpus, classmap: &HashMap<String, usize>) -> Result<f64> {
    let mut ids: Vec<usize> = classmap.values().copied().collect();
    ids.sort_unstable();
    ids.dedup();
    let compact: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let k = ids.len();

    let mut counts = vec![0.0f64; k * k];
    let mut total = 0.0;
    for doc in &corpus.documents {
        let mut prev: Option<usize> = None;
        for tok in &doc.tokens {
            let c = classmap
                .get(tok)
                .map(|c| compact[c])
                .ok_or_else(|| Error::OutOfVocabulary(tok.clone()))?;
            if let Some(p) = prev {
                counts[p * k + c] += 1.0;
                total += 1.0;
            }
            prev = Some(c);
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut left = vec![0.0; k];
    let mut right = vec![0.0; k];
    for a in 0..k {
        for b in 0..k {
            left[a] += counts[a * k + b];
            right[b] += counts[a * k + b];
        }
    }
    let mut mi = 0.0;
    for a in 0..k {
        for b in 0..k {
            mi += mi_term(counts[a * k + b], left[a], right[b], total);
        }
    }
    Ok(mi)
}

/// Sparse class-bigram counts with the marginals and per-class MI contributions.
struct MergeState {
    out: Vec<BTreeMap<usize, f64>>,
    inn: Vec<BTreeMap<usize, f64>>,
    left: Vec<f64>,
    right: Vec<f64>,
    total: f64,
    /// Σ of MI terms in row and column of each class, cell (a, a) counted once.
    contribution: Vec<f64>,
    active: Vec<usize>,
}

impl MergeState {
    fn new(corpus: &Corpus, vocab: &Vocabulary) -> Self {
        let v = vocab.len();
        let mut state = Self {
            out: vec![BTreeMap::new(); v],
            inn: vec![BTreeMap::new(); v],
            left: vec![0.0; v],
            right: vec![0.0; v],
            total: 0.0,
            contribution: vec![0.0; v],
            active: (0..v).collect(),
        };
        for doc in &corpus.documents {
            // words below the frequency cutoff break the bigram chain
            let mut prev: Option<usize> = None;
            for tok in &doc.tokens {
                let cur = vocab.index_of(tok);
                if let (Some(a), Some(b)) = (prev, cur) {
                    state.add(a, b, 1.0);
                    state.left[a] += 1.0;
                    state.right[b] += 1.0;
                    state.total += 1.0;
                }
                prev = cur;
            }
        }
        state.refresh_contributions();
        state
    }

    fn add(&mut self, a: usize, b: usize, n: f64) {
        *self.out[a].entry(b).or_default() += n;
        *self.inn[b].entry(a).or_default() += n;
    }

    fn count(&self, a: usize, b: usize) -> f64 {
        self.out[a].get(&b).copied().unwrap_or(0.0)
    }

    fn term(&self, n: f64, a_left: f64, b_right: f64) -> f64 {
        mi_term(n, a_left, b_right, self.total)
    }

    fn refresh_contributions(&mut self) {
        for &a in &self.active {
            let mut s = 0.0;
            for (&b, &n) in &self.out[a] {
                s += self.term(n, self.left[a], self.right[b]);
            }
            for (&c, &n) in &self.inn[a] {
                if c != a {
                    s += self.term(n, self.left[c], self.right[a]);
                }
            }
            self.contribution[a] = s;
        }
    }

    fn quality(&self) -> f64 {
        let mut q = 0.0;
        for &a in &self.active {
            for (&b, &n) in &self.out[a] {
                q += self.term(n, self.left[a], self.right[b]);
            }
        }
        q
    }

    /// Quality lost by merging classes `i` and `j`.
    fn merge_loss(&self, i: usize, j: usize) -> f64 {
        let (li, lj, ri, rj) = (self.left[i], self.left[j], self.right[i], self.right[j]);
        let lk = li + lj;
        let rk = ri + rj;
        let (nij, nji) = (self.count(i, j), self.count(j, i));
        let old = self.contribution[i] + self.contribution[j] - self.term(nij, li, rj) - self.term(nji, lj, ri);

        let mut new = 0.0;
        for (&b, &n) in &self.out[i] {
            if b != i && b != j {
                new += self.term(n + self.count(j, b), lk, self.right[b]);
            }
        }
        for (&b, &n) in &self.out[j] {
            if b != i && b != j && !self.out[i].contains_key(&b) {
                new += self.term(n, lk, self.right[b]);
            }
        }
        for (&a, &n) in &self.inn[i] {
            if a != i && a != j {
                new += self.term(n + self.count(a, j), self.left[a], rk);
            }
        }
        for (&a, &n) in &self.inn[j] {
            if a != i && a != j && !self.inn[i].contains_key(&a) {
                new += self.term(n, self.left[a], rk);
            }
        }
        let nkk = self.count(i, i) + nij + nji + self.count(j, j);
        new += self.term(nkk, lk, rk);
        old - new
    }

    /// Folds class `j` into class `i`.
    fn merge(&mut self, i: usize, j: usize) {
        let out_j = std::mem::take(&mut self.out[j]);
        let in_j = std::mem::take(&mut self.inn[j]);
        for b in out_j.keys() {
            self.inn[*b].remove(&j);
        }
        for a in in_j.keys() {
            self.out[*a].remove(&j);
        }
        for (b, n) in out_j {
            self.add(i, if b == j { i } else { b }, n);
        }
        for (a, n) in in_j {
            // the j → j cell was already moved with the row
            if a != j {
                self.add(a, i, n);
            }
        }
        self.left[i] += self.left[j];
        self.right[i] += self.right[j];
        self.active.retain(|&a| a != j);
        self.refresh_contributions();
    }
}

pub fn brown_fit(corpus: &Corpus, k: usize) -> Result<BrownModel> {
    brown_fit_with(corpus, k, 1)
}

/// Greedy agglomerative Brown clustering over words with count ≥ `min_count`.
///
/// Every merge scans all active class pairs; ties go to the pair that comes
/// first in vocabulary order. The surviving class of a merge keeps the lower slot.
pub fn brown_fit_with(corpus: &Corpus, k: usize, min_count: u64) -> Result<BrownModel> {
    if k == 0 {
        return Err(Error::Validation("K must be ≥ 1".into()));
    }
    let vocab = build_vocab(corpus, min_count)?;
    if vocab.len() < k {
        return Err(Error::Validation(format!(
            "K = {k} exceeds the number of distinct words ({})",
            vocab.len()
        )));
    }
    let mut state = MergeState::new(corpus, &vocab);
    let mut members: Vec<Vec<usize>> = (0..vocab.len()).map(|w| vec![w]).collect();
    let mut merges = Vec::with_capacity(vocab.len() - k);

    while state.active.len() > k {
        let mut best: Option<(usize, usize, f64)> = None;
        for (x, &i) in state.active.iter().enumerate() {
            for &j in &state.active[x + 1..] {
                let loss = state.merge_loss(i, j);
                if best.is_none_or(|(_, _, b)| loss < b) {
                    best = Some((i, j, loss));
                }
            }
        }
        let (i, j, loss) = best.expect("at least two active classes");
        state.merge(i, j);
        let absorbed = std::mem::take(&mut members[j]);
        members[i].extend(absorbed);
        merges.push(Merge {
            left: vocab.word(i).to_owned(),
            right: vocab.word(j).to_owned(),
            loss,
        });
    }
    debug_assert!(state.quality().is_finite());

    let mut classes = HashMap::with_capacity(vocab.len());
    for (class, &slot) in state.active.iter().enumerate() {
        for &w in &members[slot] {
            classes.insert(vocab.word(w).to_owned(), class);
        }
    }
    BrownModel::new(classes, merges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Document;

    fn corpus(docs: &[&str]) -> Corpus {
        let docs = docs
            .iter()
            .enumerate()
            .map(|(i, d)| Document::new(format!("d{i}"), d.split_whitespace().map(str::to_owned).collect(), None))
            .collect();
        Corpus::new("c", docs).unwrap()
    }

    fn classmap(pairs: &[(&str, usize)]) -> HashMap<String, usize> {
        pairs.iter().map(|(w, c)| (w.to_string(), *c)).collect()
    }

    #[test]
    fn single_class_has_zero_quality() {
        let c = corpus(&["a b c a b", "c c a"]);
        let q = brown_quality(&c, &classmap(&[("a", 0), ("b", 0), ("c", 0)])).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn hand_computed_two_classes() {
        let c = corpus(&["a b a b"]);
        let q = brown_quality(&c, &classmap(&[("a", 0), ("b", 1)])).unwrap();
        let expected = (2.0 / 3.0) * (1.5f64).ln() + (1.0 / 3.0) * 3f64.ln();
        assert!((q - expected).abs() < 1e-15, "{q} vs {expected}");
    }

    #[test]
    fn uncovered_word_is_named() {
        let c = corpus(&["a zebra"]);
        let err = brown_quality(&c, &classmap(&[("a", 0)])).unwrap_err();
        assert!(err.to_string().contains("zebra"));
    }

    #[test]
    fn merge_loss_matches_recomputed_quality() {
        let c = corpus(&["a b c d a c b d a a", "d c b a c c", "b b d a"]);
        let vocab = build_vocab(&c, 1).unwrap();
        let state = MergeState::new(&c, &vocab);
        let singles: HashMap<String, usize> =
            vocab.words().iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let base = brown_quality(&c, &singles).unwrap();
        assert!((state.quality() - base).abs() < 1e-12);
        for i in 0..4 {
            for j in i + 1..4 {
                let mut merged = singles.clone();
                for v in merged.values_mut() {
                    if *v == j {
                        *v = i;
                    }
                }
                let after = brown_quality(&c, &merged).unwrap();
                let loss = state.merge_loss(i, j);
                assert!((base - after - loss).abs() < 1e-12, "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn identity_clustering_when_k_equals_vocab() {
        let c = corpus(&["a b c a b c", "c b a"]);
        let m = brown_fit(&c, 3).unwrap();
        assert!(m.merges().is_empty());
        let ids: std::collections::HashSet<_> = m.class_map().values().collect();
        assert_eq!(ids.len(), 3);
    }

    #[test]
    fn merges_never_gain_quality_and_merged_words_share_ids() {
        let c = corpus(&["the cat sat on the mat", "the dog sat on the log", "a cat and a dog"]);
        let m = brown_fit(&c, 2).unwrap();
        assert_eq!(m.k(), 2);
        for merge in m.merges() {
            assert!(merge.loss >= -1e-12);
            assert_eq!(
                brown_assign(&merge.left, &m).unwrap(),
                brown_assign(&merge.right, &m).unwrap()
            );
        }
        assert_eq!(brown_assign("cat", &m).unwrap(), brown_assign("cat", &m).unwrap());
        assert!(matches!(brown_assign("zebra", &m), Err(Error::OutOfVocabulary(_))));
    }

    #[test]
    fn too_few_words() {
        let c = corpus(&["a b"]);
        assert!(brown_fit(&c, 3).is_err());
        assert!(brown_fit(&c, 0).is_err());
    }

    #[test]
    fn min_count_bounds_vocabulary() {
        let c = corpus(&["a b a b a c d"]);
        let m = brown_fit_with(&c, 1, 2).unwrap();
        assert_eq!(m.class_map().len(), 2);
    }
}
