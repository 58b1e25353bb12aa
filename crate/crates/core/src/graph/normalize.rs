use super::CsrGraph;
use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, Scalar};

/// The operator `D̃^{-1/2}(A + I)D̃^{-1/2}` over a [`CsrGraph`], applied by
/// neighbor loops. `D̃` counts the implicit self-loop, so isolated nodes map to
/// themselves with weight 1.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    graph: CsrGraph,
    inv_sqrt_degree: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn new(graph: &CsrGraph) -> Self {
        let inv_sqrt_degree = (0..graph.n()).map(|u| 1.0 / ((graph.degree(u) + 1) as f64).sqrt()).collect();
        Self { graph: graph.clone(), inv_sqrt_degree }
    }

    pub fn graph(&self) -> &CsrGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Computes `Â·H`. The operator is symmetric, so this also serves the
    /// backward pass.
    pub fn apply<T: Scalar>(&self, h: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let n = self.graph.n();
        if h.rows() != n {
            return Err(Error::Shape { op: "normalized_adjacency", left: (n, n), right: h.shape() });
        }
        let mut out = DenseMatrix::zeros(n, h.cols());
        for u in 0..n {
            let du = self.inv_sqrt_degree[u];
            let self_w = T::of(du * du);
            let row = out.row_mut(u);
            for (o, &x) in row.iter_mut().zip(h.row(u)) {
                *o += self_w * x;
            }
            for &v in self.graph.neighbors(u) {
                let w = T::of(du * self.inv_sqrt_degree[v]);
                for (o, &x) in row.iter_mut().zip(h.row(v)) {
                    *o += w * x;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let n = self.graph.n();
        let mut m = DenseMatrix::zeros(n, n);
        for u in 0..n {
            let du = self.inv_sqrt_degree[u];
            m.set(u, u, du * du);
            for &v in self.graph.neighbors(u) {
                m.set(u, v, du * self.inv_sqrt_degree[v]);
            }
        }
        m
    }
}

/// Symmetric normalized propagation operator of `g`.
pub fn normalized_adjacency(g: &CsrGraph) -> NormalizedAdjacency {
    NormalizedAdjacency::new(g)
}
