use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numkit::{dot, DenseMatrix};

/// Unit-normalized copy of a feature matrix for cosine similarity lookups.
#[derive(Debug, Clone)]
pub struct CosineIndex {
    unit: DenseMatrix<f64>,
}

impl CosineIndex {
    pub fn new(features: &DenseMatrix<f64>) -> Result<Self> {
        let mut unit = features.clone();
        for u in 0..unit.rows() {
            let row = unit.row_mut(u);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::ZeroNorm { node: u });
            }
            row.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(Self { unit })
    }

    pub fn len(&self) -> usize {
        self.unit.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.unit.rows() == 0
    }

    #[inline]
    pub fn similarity(&self, u: usize, v: usize) -> f64 {
        dot(self.unit.row(u), self.unit.row(v))
    }

    /// The `k` candidates most similar to `u` (excluding `u`), ties broken by
    /// smaller index, in descending similarity order.
    pub fn top_k(&self, u: usize, candidates: &[usize], k: usize) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> =
            candidates.iter().filter(|&&v| v != u).map(|&v| (self.similarity(u, v), v)).collect();
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| {
            b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k, by_rank);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_rank);
        scored.into_iter().map(|(_, v)| v).collect()
    }
}

/// Directed top-`k` cosine neighbor edges `u → v` for every node.
pub fn knn_edges(features: &DenseMatrix<f64>, k: usize) -> Result<Vec<(usize, usize)>> {
    let n = features.rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("knn_edges needs at least 2 nodes, got {n}")));
    }
    let all: Vec<usize> = (0..n).collect();
    knn_attach(features, &all, &all, k)
}

/// Directed edges from each query node to its `k` most similar candidates.
pub fn knn_attach(
    features: &DenseMatrix<f64>,
    queries: &[usize],
    candidates: &[usize],
    k: usize,
) -> Result<Vec<(usize, usize)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let index = CosineIndex::new(features)?;
    Ok(knn_attach_with(&index, queries, candidates, k))
}

pub(crate) fn knn_attach_with(
    index: &CosineIndex,
    queries: &[usize],
    candidates: &[usize],
    k: usize,
) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(queries.len() * k);
    for &u in queries {
        edges.extend(index.top_k(u, candidates, k).into_iter().map(|v| (u, v)));
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::symmetrize;
    use crate::numkit::Rng;

    #[test]
    fn identical_vectors_break_ties_by_index() {
        let f = DenseMatrix::filled(3, 4, 1.0);
        assert_eq!(knn_edges(&f, 1).unwrap(), vec![(0, 1), (1, 0), (2, 0)]);
    }

    #[test]
    fn orthogonal_vectors_pick_lowest_index() {
        let f = DenseMatrix::<f64>::identity(4);
        assert_eq!(knn_edges(&f, 1).unwrap(), vec![(0, 1), (1, 0), (2, 0), (3, 0)]);
    }

    #[test]
    fn zero_norm_row_is_named() {
        let f = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(knn_edges(&f, 1), Err(Error::ZeroNorm { node: 1 })));
    }

    #[test]
    fn small_n_takes_everyone() {
        let f = DenseMatrix::from_rows(&[vec![1.0, 0.1], vec![0.2, 1.0], vec![1.0, 1.0]]).unwrap();
        let e = knn_edges(&f, 10).unwrap();
        assert_eq!(e.len(), 6);
        let g = symmetrize(3, &e).unwrap();
        assert_eq!(g.num_edges(), 3);
    }

    fn brute_force_top_k(f: &DenseMatrix<f64>, k: usize) -> Vec<(usize, usize)> {
        let n = f.rows();
        let norm = |u: usize| f.row(u).iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut out = Vec::new();
        for u in 0..n {
            let mut sims: Vec<(f64, usize)> = (0..n)
                .filter(|&v| v != u)
                .map(|v| {
                    let d: f64 = f.row(u).iter().zip(f.row(v)).map(|(a, b)| a * b).sum();
                    (d / (norm(u) * norm(v)), v)
                })
                .collect();
            // stable sort on similarity keeps index order among ties
            sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            out.extend(sims.into_iter().take(k).map(|(_, v)| (u, v)));
        }
        out
    }

    #[test]
    fn matches_brute_force_similarity_matrix() {
        let mut rng = Rng::new(11);
        for _ in 0..20 {
            let data = (0..20 * 6).map(|_| rng.normal()).collect();
            let f = DenseMatrix::new(20, 6, data).unwrap();
            let mut got = knn_edges(&f, 5).unwrap();
            let mut want = brute_force_top_k(&f, 5);
            got.sort_unstable();
            want.sort_unstable();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn k_n_minus_one_gives_complete_graph() {
        let mut rng = Rng::new(12);
        let data = (0..9 * 3).map(|_| rng.normal()).collect();
        let f = DenseMatrix::new(9, 3, data).unwrap();
        let g = symmetrize(9, &knn_edges(&f, 8).unwrap()).unwrap();
        assert_eq!(g.num_edges(), 36);
    }
}
