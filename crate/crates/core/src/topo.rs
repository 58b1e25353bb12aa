//! Per-node topological descriptors: the fact vector `[degree, clustering,
//! 2-hop label agreement]` and the auxiliary targets (homophily, neighbor
//! similarity entropy).

use serde::{Deserialize, Serialize};

use crate::graph::CsrGraph;
use crate::numkit::{softmax_row, DenseMatrix};

/// Agreement reported when no labeled node lies within two hops.
pub const NEUTRAL_AGREEMENT: f64 = 0.5;

pub fn degree(g: &CsrGraph, u: usize) -> usize {
    g.degree(u)
}

fn intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Fraction of neighbor pairs of `u` that are themselves adjacent; 0 below
/// degree 2.
pub fn clustering_coeff(g: &CsrGraph, u: usize) -> f64 {
    let nb = g.neighbors(u);
    let k = nb.len();
    if k < 2 {
        return 0.0;
    }
    let links: usize = nb.iter().map(|&v| intersection_count(nb, g.neighbors(v))).sum::<usize>() / 2;
    links as f64 / (k * (k - 1) / 2) as f64
}

/// Reusable visitation marks for two-hop neighborhoods.
struct HopScratch {
    stamp: Vec<u32>,
    epoch: u32,
}

impl HopScratch {
    fn new(n: usize) -> Self {
        Self { stamp: vec![0; n], epoch: 0 }
    }

    /// Calls `visit` once for every node within two hops of `u`, excluding `u`.
    fn for_each_two_hop(&mut self, g: &CsrGraph, u: usize, mut visit: impl FnMut(usize)) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let e = self.epoch;
        self.stamp[u] = e;
        for &v in g.neighbors(u) {
            if self.stamp[v] != e {
                self.stamp[v] = e;
                visit(v);
            }
            for &w in g.neighbors(v) {
                if self.stamp[w] != e {
                    self.stamp[w] = e;
                    visit(w);
                }
            }
        }
    }
}

fn agreement_with(scratch: &mut HopScratch, g: &CsrGraph, labels: &[usize], labeled: &[bool], u: usize) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    let center = labels[u];
    scratch.for_each_two_hop(g, u, |w| {
        if labeled[w] {
            total += 1;
            if labels[w] == center {
                hits += 1;
            }
        }
    });
    if total == 0 {
        NEUTRAL_AGREEMENT
    } else {
        hits as f64 / total as f64
    }
}

/// Fraction of labeled nodes at hop distance 1 or 2 from `u` whose label
/// equals `labels[u]`, or [`NEUTRAL_AGREEMENT`] if there are none.
///
/// `labels[u]` is always used as the center label, so for an unlabeled `u`
/// the caller supplies the current predicted class there. Neighbor labels are
/// read only where `labeled` is set.
pub fn label_agreement_2hop(g: &CsrGraph, labels: &[usize], labeled: &[bool], u: usize) -> f64 {
    agreement_with(&mut HopScratch::new(g.n()), g, labels, labeled, u)
}

/// [`label_agreement_2hop`] for each node of `nodes`, sharing one scratch buffer.
pub fn label_agreement_many(g: &CsrGraph, labels: &[usize], labeled: &[bool], nodes: &[usize]) -> Vec<f64> {
    let mut scratch = HopScratch::new(g.n());
    nodes.iter().map(|&u| agreement_with(&mut scratch, g, labels, labeled, u)).collect()
}

/// Share of `v`'s labeled neighbors carrying `labels[v]`; 0 without any.
pub fn homophily(g: &CsrGraph, labels: &[usize], labeled: &[bool], v: usize) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for &u in g.neighbors(v) {
        if labeled[u] {
            total += 1;
            if labels[u] == labels[v] {
                hits += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Shannon entropy (natural log) of the softmax of `−‖x_v − x_u‖²` over the
/// neighbors `u` of `v`; 0 at degree ≤ 1.
pub fn similarity_entropy(g: &CsrGraph, features: &DenseMatrix<f64>, v: usize) -> f64 {
    let nb = g.neighbors(v);
    if nb.len() <= 1 {
        return 0.0;
    }
    let xv = features.row(v);
    let logits: Vec<f64> = nb
        .iter()
        .map(|&u| -features.row(u).iter().zip(xv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .collect();
    let w = softmax_row(&logits).expect("non-empty neighbor list");
    -w.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// How the agreement feature treats nodes outside the labeled mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterLabel {
    /// Compare against `labels[u]` for every node.
    Given,
    /// Report [`NEUTRAL_AGREEMENT`] for unlabeled centers.
    NeutralIfUnlabeled,
}

/// Per-node fact vectors `[degree, clustering, agreement]`, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FactMatrix(pub DenseMatrix<f64>);

pub const FACT_NAMES: [&str; 3] = ["degree", "clustering", "label_agreement"];

impl FactMatrix {
    pub fn matrix(&self) -> &DenseMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn row(&self, u: usize) -> [f64; 3] {
        let r = self.0.row(u);
        [r[0], r[1], r[2]]
    }

    /// Column means and population standard deviations over `nodes`.
    pub fn column_stats(&self, nodes: &[usize]) -> ([f64; 3], [f64; 3]) {
        let mut mean = [0.0; 3];
        let mut std = [0.0; 3];
        if nodes.is_empty() {
            return (mean, std);
        }
        let m = nodes.len() as f64;
        for &u in nodes {
            for (j, &x) in self.0.row(u).iter().enumerate() {
                mean[j] += x / m;
            }
        }
        for &u in nodes {
            for (j, &x) in self.0.row(u).iter().enumerate() {
                std[j] += (x - mean[j]).powi(2) / m;
            }
        }
        for s in &mut std {
            *s = s.sqrt();
        }
        (mean, std)
    }
}

/// Fact vectors with `labels[u]` as the center label everywhere.
pub fn fact_matrix(g: &CsrGraph, labels: &[usize], labeled: &[bool]) -> FactMatrix {
    fact_matrix_with(g, labels, labeled, CenterLabel::Given)
}

pub fn fact_matrix_with(g: &CsrGraph, labels: &[usize], labeled: &[bool], center: CenterLabel) -> FactMatrix {
    let n = g.n();
    let mut scratch = HopScratch::new(n);
    let mut data = Vec::with_capacity(n * 3);
    for u in 0..n {
        let agreement = if center == CenterLabel::NeutralIfUnlabeled && !labeled[u] {
            NEUTRAL_AGREEMENT
        } else {
            agreement_with(&mut scratch, g, labels, labeled, u)
        };
        data.extend_from_slice(&[g.degree(u) as f64, clustering_coeff(g, u), agreement]);
    }
    FactMatrix(DenseMatrix::new(n, 3, data).expect("n x 3"))
}

/// Regression targets for the auxiliary heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxTargets {
    pub homophily: Vec<f64>,
    pub entropy: Vec<f64>,
}

pub fn aux_targets(g: &CsrGraph, labels: &[usize], labeled: &[bool], features: &DenseMatrix<f64>) -> AuxTargets {
    let n = g.n();
    AuxTargets {
        homophily: (0..n).map(|v| homophily(g, labels, labeled, v)).collect(),
        entropy: (0..n).map(|v| similarity_entropy(g, features, v)).collect(),
    }
}
