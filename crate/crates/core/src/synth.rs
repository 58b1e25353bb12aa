//! Planted-partition datasets with controllable edge homophily.
//!
//! Labels are balanced and shuffled; features are `s·e_c + N(0, I)` for class
//! `c` (so `dim ≥ classes`), stored at `f32` precision to match FGNF. The
//! edge count is `round(n·mean_degree/2)`, of which exactly `round(q·m)` join
//! same-class pairs; pairs are drawn uniformly with duplicate rejection.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphio::{DatasetBundle, Splits};
use crate::numkit::{DenseMatrix, Rng};

const LABEL_STREAM: u64 = 1;
const FEATURE_STREAM: u64 = 2;
const EDGE_STREAM: u64 = 3;
const SPLIT_STREAM: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub classes: usize,
    pub dim: usize,
    /// Distance of each class centroid from the origin along its own axis.
    pub separation: f64,
    /// Target fraction of intra-class edges.
    pub homophily: f64,
    pub mean_degree: f64,
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            classes: 4,
            dim: 16,
            separation: 1.0,
            homophily: 0.4,
            mean_degree: 10.0,
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.classes == 0 || self.n < self.classes {
            return bad(format!("need n >= classes >= 1, got n={} classes={}", self.n, self.classes));
        }
        if self.dim < self.classes {
            return bad(format!("dim {} smaller than class count {}", self.dim, self.classes));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return bad(format!("separation {} must be finite and >= 0", self.separation));
        }
        if !(0.0..=1.0).contains(&self.homophily) {
            return bad(format!("homophily {} outside [0, 1]", self.homophily));
        }
        if !(self.mean_degree >= 0.0 && self.mean_degree.is_finite()) {
            return bad(format!("mean degree {} must be finite and >= 0", self.mean_degree));
        }
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {fr:?} must lie in [0, 1] and sum to 1"));
        }
        Ok(())
    }
}

fn sample_pairs(
    count: usize,
    capacity: u128,
    what: &str,
    seen: &mut HashSet<(usize, usize)>,
    out: &mut Vec<(usize, usize)>,
    mut draw: impl FnMut() -> Option<(usize, usize)>,
) -> Result<()> {
    if count as u128 > capacity {
        return Err(Error::Infeasible(format!("{count} {what} edges requested, only {capacity} pairs exist")));
    }
    let mut added = 0;
    while added < count {
        let Some((u, v)) = draw() else { continue };
        let e = (u.min(v), u.max(v));
        if seen.insert(e) {
            out.push(e);
            added += 1;
        }
    }
    Ok(())
}

pub fn generate(cfg: &SynthConfig) -> Result<DatasetBundle> {
    cfg.validate()?;
    let (n, c) = (cfg.n, cfg.classes);

    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    Rng::stream(cfg.seed, LABEL_STREAM).shuffle(&mut labels);

    let mut rng = Rng::stream(cfg.seed, FEATURE_STREAM);
    let mut data = Vec::with_capacity(n * cfg.dim);
    for &y in &labels {
        for j in 0..cfg.dim {
            let centroid = if j == y { cfg.separation } else { 0.0 };
            data.push((centroid + rng.normal()) as f32 as f64);
        }
    }
    let features = DenseMatrix::new(n, cfg.dim, data)?;

    let mut members = vec![Vec::new(); c];
    for (u, &y) in labels.iter().enumerate() {
        members[y].push(u);
    }
    let m = (n as f64 * cfg.mean_degree / 2.0).round() as usize;
    let intra = (cfg.homophily * m as f64).round() as usize;
    let inter = m - intra;
    let intra_cap: u128 = members.iter().map(|g| (g.len() as u128 * (g.len() as u128).saturating_sub(1)) / 2).sum();
    let all_pairs = (n as u128 * (n as u128 - 1)) / 2;
    let mut rng = Rng::stream(cfg.seed, EDGE_STREAM);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    sample_pairs(intra, intra_cap, "intra-class", &mut seen, &mut edges, || {
        let u = rng.below(n);
        let group = &members[labels[u]];
        let v = group[rng.below(group.len())];
        (u != v).then_some((u, v))
    })
    .and_then(|_| {
        sample_pairs(inter, all_pairs - intra_cap, "inter-class", &mut seen, &mut edges, || {
            let u = rng.below(n);
            let v = rng.below(n);
            (labels[u] != labels[v]).then_some((u, v))
        })
    })
    .map_err(|e| match e {
        Error::Infeasible(msg) => Error::Infeasible(format!("homophily {} at mean degree {}: {msg}", cfg.homophily, cfg.mean_degree)),
        other => other,
    })?;
    edges.sort_unstable();

    let mut order: Vec<usize> = (0..n).collect();
    Rng::stream(cfg.seed, SPLIT_STREAM).shuffle(&mut order);
    let n_train = (cfg.train_frac * n as f64).round() as usize;
    let n_val = ((cfg.val_frac * n as f64).round() as usize).min(n - n_train);
    let splits = Splits {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    };
    DatasetBundle::new(features, labels, splits, Some(edges))
}

/// Fraction of edges whose endpoints share a label.
pub fn edge_homophily(edges: &[(usize, usize)], labels: &[usize]) -> f64 {
    if edges.is_empty() {
        return 0.0;
    }
    edges.iter().filter(|&&(u, v)| labels[u] == labels[v]).count() as f64 / edges.len() as f64
}
