use std::collections::HashSet;

use rand::Rng;

use crate::embed::Matrix;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    centroids: Matrix,
}

impl KMeansModel {
    pub fn new(centroids: Matrix) -> Result<Self> {
        if centroids.rows() == 0 {
            return Err(Error::Validation("K-means model needs at least one centroid".into()));
        }
        if !centroids.is_finite() {
            return Err(Error::Numeric("centroid contains non-finite entries".into()));
        }
        Ok(Self { centroids })
    }

    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        self.centroids.row(j)
    }
}

/// Result of a fit: model, final assignment and the per-iteration SSE trace.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub model: KMeansModel,
    pub assignments: Vec<usize>,
    /// SSE of each iteration's assignment against the centroids it was made from.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    /// SSE of the final assignment against the final centroids.
    pub fn sse<V: AsRef<[f64]>>(&self, vectors: &[V]) -> f64 {
        vectors
            .iter()
            .zip(&self.assignments)
            .map(|(v, &a)| squared_distance(v.as_ref(), self.model.centroid(a)))
            .sum()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid and its squared distance; ties go to the lowest index.
fn nearest(v: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter_rows().enumerate() {
        let d = squared_distance(v, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn kmeans_assign(v: &[f64], model: &KMeansModel) -> Result<usize> {
    if v.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: v.len(),
        });
    }
    Ok(nearest(v, &model.centroids).0)
}

/// Each vector's squared distance to its nearest centroid, summed.
pub fn sum_squared_error<V: AsRef<[f64]>>(vectors: &[V], model: &KMeansModel) -> f64 {
    vectors
        .iter()
        .map(|v| nearest(v.as_ref(), &model.centroids).1)
        .sum()
}

fn distinct_count<V: AsRef<[f64]>>(vectors: &[V]) -> usize {
    vectors
        .iter()
        .map(|v| v.as_ref().iter().map(|x| (x + 0.0).to_bits()).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

fn plus_plus_init<V: AsRef<[f64]>>(vectors: &[V], k: usize, seed: u64) -> Matrix {
    let mut rng = rng(seed);
    let dim = vectors[0].as_ref().len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(vectors[rng.random_range(0..vectors.len())].as_ref().to_vec());
    let mut d2: Vec<f64> = vectors
        .iter()
        .map(|v| squared_distance(v.as_ref(), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        // fall back to the last point with positive weight against rounding at the top end
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if d > 0.0 && acc > target {
                pick = i;
                break;
            }
        }
        let c = vectors[pick].as_ref().to_vec();
        for (dist, v) in d2.iter_mut().zip(vectors) {
            *dist = dist.min(squared_distance(v.as_ref(), &c));
        }
        centroids.push(c);
    }
    Matrix::from_rows(&centroids, dim).expect("rows share the input dimension")
}

/// Recomputes centroids as cluster means. An empty cluster takes over the
/// point farthest from its centroid among clusters with more than one member.
fn update_centroids<V: AsRef<[f64]>>(vectors: &[V], assignments: &mut [usize], centroids: &mut Matrix) {
    let k = centroids.rows();
    let dim = centroids.cols();
    let recompute = |j: usize, assignments: &[usize], centroids: &mut Matrix| {
        let row = centroids.row_mut(j);
        row.fill(0.0);
        let mut n = 0usize;
        for (v, _) in vectors.iter().zip(assignments).filter(|(_, &a)| a == j) {
            for (r, x) in row.iter_mut().zip(v.as_ref()) {
                *r += x;
            }
            n += 1;
        }
        row.iter_mut().for_each(|r| *r /= n as f64);
        n
    };
    let mut sizes = vec![0usize; k];
    for (j, size) in sizes.iter_mut().enumerate() {
        if assignments.contains(&j) {
            *size = recompute(j, assignments, centroids);
        }
    }
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let donor = (0..vectors.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .map(|i| (i, squared_distance(vectors[i].as_ref(), centroids.row(assignments[i]))))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        let Some((i, _)) = donor else { break };
        let from = assignments[i];
        assignments[i] = j;
        centroids.row_mut(j).copy_from_slice(&vectors[i].as_ref()[..dim]);
        sizes[j] = 1;
        sizes[from] = recompute(from, assignments, centroids);
    }
}

/// Lloyd iterations from k-means++ seeding until the assignment stops
/// changing or `max_iters` is reached.
pub fn kmeans_fit_full<V: AsRef<[f64]>>(vectors: &[V], k: usize, max_iters: usize, seed: u64) -> Result<KMeansFit> {
    if vectors.is_empty() {
        return Err(Error::Validation("cannot cluster an empty set of vectors".into()));
    }
    if k == 0 {
        return Err(Error::Validation("K must be ≥ 1".into()));
    }
    if max_iters == 0 {
        return Err(Error::Validation("max_iters must be ≥ 1".into()));
    }
    let dim = vectors[0].as_ref().len();
    if let Some(v) = vectors.iter().find(|v| v.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.as_ref().len(),
        });
    }
    if vectors.iter().any(|v| v.as_ref().iter().any(|x| !x.is_finite())) {
        return Err(Error::Numeric("input vectors contain non-finite entries".into()));
    }
    let distinct = distinct_count(vectors);
    if k > distinct {
        return Err(Error::Validation(format!(
            "K = {k} exceeds the number of distinct vectors ({distinct})"
        )));
    }

    let mut centroids = plus_plus_init(vectors, k, seed);
    let mut assignments: Vec<usize> = Vec::new();
    let mut sse_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let (next, sse): (Vec<usize>, f64) = vectors.iter().fold(
            (Vec::with_capacity(vectors.len()), 0.0),
            |(mut a, s), v| {
                let (j, d) = nearest(v.as_ref(), &centroids);
                a.push(j);
                (a, s + d)
            },
        );
        sse_history.push(sse);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
        update_centroids(vectors, &mut assignments, &mut centroids);
    }

    Ok(KMeansFit {
        model: KMeansModel::new(centroids)?,
        assignments,
        sse_history,
        iterations,
        converged,
    })
}

pub fn kmeans_fit<V: AsRef<[f64]>>(vectors: &[V], k: usize, max_iters: usize, seed: u64) -> Result<KMeansModel> {
    kmeans_fit_full(vectors, k, max_iters, seed).map(|f| f.model)
}

/// Best of `restarts` fits by final SSE. The first restart uses `seed` itself,
/// so `restarts = 1` equals [`kmeans_fit_full`].
pub fn kmeans_fit_restarts<V: AsRef<[f64]>>(
    vectors: &[V],
    k: usize,
    max_iters: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansFit> {
    let mut best = kmeans_fit_full(vectors, k, max_iters, seed)?;
    let mut best_sse = best.sse(vectors);
    for r in 1..restarts {
        let fit = kmeans_fit_full(vectors, k, max_iters, derive_seed(seed, &format!("kmeans-restart-{r}")))?;
        let sse = fit.sse(vectors);
        if sse < best_sse {
            best = fit;
            best_sse = sse;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    /// Exhaustive optimum over all 2-partitions of 1-D points.
    fn best_two_partition_sse(xs: &[f64]) -> f64 {
        let n = xs.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let mut sse = 0.0;
            for side in [true, false] {
                let members: Vec<f64> = (0..n)
                    .filter(|&i| ((mask >> i) & 1 == 1) == side)
                    .map(|i| xs[i])
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                sse += members.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            }
            best = best.min(sse);
        }
        best
    }

    #[test]
    fn two_clusters_in_one_dimension() {
        let xs = [0.0, 1.0, 9.0, 10.0];
        let fit = kmeans_fit_full(&pts(&xs), 2, 100, 1).unwrap();
        let mut cs: Vec<f64> = (0..2).map(|j| fit.model.centroid(j)[0]).collect();
        cs.sort_by(f64::total_cmp);
        assert_eq!(cs, [0.5, 9.5]);
        assert_eq!(fit.assignments[0], fit.assignments[1]);
        assert_eq!(fit.assignments[2], fit.assignments[3]);
        assert_ne!(fit.assignments[0], fit.assignments[2]);
        assert_eq!(fit.sse(&pts(&xs)), best_two_partition_sse(&xs));
        assert_eq!(best_two_partition_sse(&xs), 1.0);
    }

    #[test]
    fn k_equals_n_gives_zero_sse() {
        let v = pts(&[3.0, -1.0, 7.5, 2.0, 11.0]);
        let fit = kmeans_fit_full(&v, 5, 50, 9).unwrap();
        assert_eq!(fit.sse(&v), 0.0);
    }

    #[test]
    fn identical_points_single_cluster() {
        let v = vec![vec![2.0, -3.0]; 6];
        let m = kmeans_fit(&v, 1, 10, 0).unwrap();
        assert_eq!(m.centroid(0), [2.0, -3.0]);
    }

    #[test]
    fn errors() {
        let v = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(matches!(kmeans_fit(&v, 3, 10, 0), Err(Error::Validation(_))));
        assert!(kmeans_fit::<Vec<f64>>(&[], 1, 10, 0).is_err());
        assert!(kmeans_fit(&v, 0, 10, 0).is_err());
        assert!(kmeans_fit(&v, 1, 0, 0).is_err());
        assert!(kmeans_fit(&[vec![1.0], vec![1.0, 2.0]], 1, 10, 0).is_err());
    }

    #[test]
    fn assign_examples() {
        let m = KMeansModel::new(Matrix::from_rows(&[vec![0.0, 0.0], vec![10.0, 10.0]], 2).unwrap()).unwrap();
        assert_eq!(kmeans_assign(&[1.0, 1.0], &m).unwrap(), 0);
        assert_eq!(kmeans_assign(&[10.0, 10.0], &m).unwrap(), 1);
        assert_eq!(kmeans_assign(&[5.0, 5.0], &m).unwrap(), 0);
        assert!(matches!(
            kmeans_assign(&[1.0], &m),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn empty_cluster_repair_keeps_k_centroids() {
        // duplicates make empty clusters likely after the first update
        let mut v = vec![vec![0.0]; 10];
        v.extend([vec![1.0], vec![2.0], vec![50.0]]);
        for seed in 0..20 {
            let fit = kmeans_fit_full(&v, 4, 100, seed).unwrap();
            assert_eq!(fit.model.k(), 4);
            for j in 0..4 {
                assert!(fit.assignments.contains(&j), "seed {seed}: cluster {j} empty");
            }
        }
    }

    proptest! {
        #[test]
        fn sse_is_monotone_and_final_assignment_is_fixpoint(
            raw in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 2), 4..30),
            k in 1usize..5,
            seed in 0u64..1000,
        ) {
            let k = k.min(distinct_count(&raw));
            let fit = kmeans_fit_full(&raw, k, 200, seed).unwrap();
            for w in fit.sse_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
            }
            prop_assert!(fit.converged);
            for (v, &a) in raw.iter().zip(&fit.assignments) {
                prop_assert_eq!(kmeans_assign(v, &fit.model).unwrap(), a);
            }
        }

        #[test]
        fn assign_is_brute_force_argmin(
            cs in proptest::collection::vec(proptest::collection::vec(-5i32..5, 3), 1..8),
            v in proptest::collection::vec(-5i32..5, 3),
        ) {
            let rows: Vec<Vec<f64>> = cs.iter().map(|c| c.iter().map(|&x| x as f64).collect()).collect();
            let m = KMeansModel::new(Matrix::from_rows(&rows, 3).unwrap()).unwrap();
            let v: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let dists: Vec<f64> = rows.iter().map(|c| c.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum()).collect();
            let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
            let expected = dists.iter().position(|&d| d == min).unwrap();
            prop_assert_eq!(kmeans_assign(&v, &m).unwrap(), expected);
        }
    }
}
