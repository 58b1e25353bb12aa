use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::knn::{knn_attach_with, CosineIndex};
use super::CsrGraph;
use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, Rng};

/// Settings for turning a feature matrix into a training graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Neighbors per node in the cosine k-NN step.
    pub k: usize,
    pub add_label_edges: bool,
    /// New same-label edges per training node.
    pub label_edge_budget: usize,
    pub rewire_edges: bool,
    /// Probability that an eligible cross-label edge is rewired.
    pub rewire_rate: f64,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self { k: 10, add_label_edges: true, label_edge_budget: 1, rewire_edges: true, rewire_rate: 0.5, seed: 42 }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rewire_rate) {
            return Err(Error::InvalidArgument(format!("rewire rate {} outside [0, 1]", self.rewire_rate)));
        }
        Ok(())
    }
}

fn train_mask(n: usize, train_idx: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &u in train_idx {
        mask[u] = true;
    }
    mask
}

/// For every training node (in `train_idx` order), adds up to `budget` edges
/// to same-label training nodes it is not yet adjacent to, chosen uniformly
/// without replacement. Only labels of nodes in `train_idx` are read.
pub fn add_label_edges(g: &CsrGraph, labels: &[usize], train_idx: &[usize], budget: usize, rng: &mut Rng) -> CsrGraph {
    if budget == 0 {
        return g.clone();
    }
    let mut lists = g.to_lists();
    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &u in train_idx {
        by_label.entry(labels[u]).or_default().push(u);
    }
    for &u in train_idx {
        let mut candidates: Vec<usize> = by_label[&labels[u]]
            .iter()
            .copied()
            .filter(|&v| v != u && lists[u].binary_search(&v).is_err())
            .collect();
        let take = budget.min(candidates.len());
        for i in 0..take {
            let j = i + rng.below(candidates.len() - i);
            candidates.swap(i, j);
            let v = candidates[i];
            insert_sorted(&mut lists[u], v);
            insert_sorted(&mut lists[v], u);
        }
    }
    CsrGraph::from_lists(lists)
}

/// Visits every edge `(u, v)`, `u < v`, of the input graph in ascending order.
/// When both endpoints are training nodes with different labels, a uniform
/// draw below `rate` replaces it by `(u, w)`, where `w` is the training node
/// with `u`'s label that is most cosine-similar to `u` and not adjacent to it
/// (ties to the smaller index). Edges without a candidate are kept.
pub fn rewire_edges(
    g: &CsrGraph,
    labels: &[usize],
    train_idx: &[usize],
    similarity: &CosineIndex,
    rate: f64,
    rng: &mut Rng,
) -> CsrGraph {
    let mask = train_mask(g.n(), train_idx);
    let mut lists = g.to_lists();
    let original: Vec<(usize, usize)> = g.edges().collect();
    for (u, v) in original {
        if !(mask[u] && mask[v]) || labels[u] == labels[v] {
            continue;
        }
        if !rng.bernoulli(rate) {
            continue;
        }
        let best = train_idx
            .iter()
            .copied()
            .filter(|&w| w != u && labels[w] == labels[u] && lists[u].binary_search(&w).is_err())
            .map(|w| (similarity.similarity(u, w), w))
            .min_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
        if let Some((_, w)) = best {
            remove_sorted(&mut lists[u], v);
            remove_sorted(&mut lists[v], u);
            insert_sorted(&mut lists[u], w);
            insert_sorted(&mut lists[w], u);
        }
    }
    CsrGraph::from_lists(lists)
}

fn insert_sorted(list: &mut Vec<usize>, v: usize) {
    if let Err(pos) = list.binary_search(&v) {
        list.insert(pos, v);
    }
}

fn remove_sorted(list: &mut Vec<usize>, v: usize) {
    if let Ok(pos) = list.binary_search(&v) {
        list.remove(pos);
    }
}

/// Applies the configured label-edge and rewiring steps to `base`.
pub fn augment(
    base: &CsrGraph,
    features: &DenseMatrix<f64>,
    labels: &[usize],
    train_idx: &[usize],
    cfg: &BuildConfig,
) -> Result<CsrGraph> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let mut g = base.clone();
    if cfg.add_label_edges {
        g = add_label_edges(&g, labels, train_idx, cfg.label_edge_budget, &mut rng);
    }
    if cfg.rewire_edges && cfg.rewire_rate > 0.0 {
        let index = CosineIndex::new(features)?;
        g = rewire_edges(&g, labels, train_idx, &index, cfg.rewire_rate, &mut rng);
    }
    Ok(g)
}

/// Full construction: cosine k-NN, union symmetrization, then augmentation.
pub fn build_graph(
    features: &DenseMatrix<f64>,
    labels: &[usize],
    train_idx: &[usize],
    cfg: &BuildConfig,
) -> Result<CsrGraph> {
    cfg.validate()?;
    let n = features.rows();
    let base = CsrGraph::from_edges(n, &super::knn_edges(features, cfg.k)?)?;
    augment(&base, features, labels, train_idx, cfg)
}

/// Union of `graph` (over the first `graph.n()` nodes of `features`) with
/// k-NN edges from every node in `queries` to the nodes in `anchors`.
pub fn attach_nodes(
    graph: &CsrGraph,
    features: &DenseMatrix<f64>,
    queries: &[usize],
    anchors: &[usize],
    k: usize,
) -> Result<CsrGraph> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = features.rows();
    let index = CosineIndex::new(features)?;
    let mut edges: Vec<(usize, usize)> = graph.edges().collect();
    edges.extend(knn_attach_with(&index, queries, anchors, k));
    CsrGraph::from_edges(n, &edges)
}
