use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, Scalar};

/// Undirected simple graph in compressed sparse row form.
///
/// Adjacency lists are sorted ascending, contain no self-loops and no
/// duplicates, and every edge is stored in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl CsrGraph {
    pub fn empty(n: usize) -> Self {
        Self { n, offsets: vec![0; n + 1], neighbors: Vec::new() }
    }

    /// Undirected union of `edges` over `n` nodes. Self-loops are dropped and
    /// duplicate or reversed pairs collapse into one edge.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!("edge ({u}, {v}) outside node range 0..{n}")));
            }
            if u != v {
                lists[u].push(v);
                lists[v].push(u);
            }
        }
        Ok(Self::from_lists(lists))
    }

    /// Builds from per-node lists, sorting and deduplicating each. The caller
    /// guarantees symmetry.
    pub(crate) fn from_lists(mut lists: Vec<Vec<usize>>) -> Self {
        let n = lists.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Self { n, offsets, neighbors }
    }

    pub fn from_csr(n: usize, offsets: Vec<usize>, neighbors: Vec<usize>) -> Result<Self> {
        let g = Self { n, offsets, neighbors };
        g.validate()?;
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn neighbor_array(&self) -> &[usize] {
        &self.neighbors
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub(crate) fn to_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|u| self.neighbors(u).to_vec()).collect()
    }

    /// Subgraph induced on `nodes`, relabelled so `nodes[i]` becomes `i`.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.n];
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = i;
        }
        let lists = nodes
            .iter()
            .map(|&u| self.neighbors(u).iter().map(|&v| local[v]).filter(|&v| v != usize::MAX).collect())
            .collect();
        Self::from_lists(lists)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.offsets.len() != self.n + 1 || self.offsets[0] != 0 {
            return bad("offsets must have n+1 entries starting at 0".into());
        }
        if *self.offsets.last().unwrap() != self.neighbors.len() {
            return bad("last offset must equal neighbor count".into());
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("offsets must be nondecreasing".into());
        }
        for u in 0..self.n {
            let nb = self.neighbors(u);
            for (i, &v) in nb.iter().enumerate() {
                if v >= self.n {
                    return bad(format!("node {u} has out-of-range neighbor {v}"));
                }
                if v == u {
                    return bad(format!("self-loop at {u}"));
                }
                if i > 0 && nb[i - 1] >= v {
                    return bad(format!("adjacency of {u} not strictly ascending"));
                }
                if !self.has_edge(v, u) {
                    return bad(format!("edge ({u}, {v}) has no reverse"));
                }
            }
        }
        Ok(())
    }

    /// `A·H`: the sum of neighbor rows for every node.
    pub fn aggregate<T: Scalar>(&self, h: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if h.rows() != self.n {
            return Err(Error::Shape { op: "aggregate", left: (self.n, self.n), right: h.shape() });
        }
        let mut out = DenseMatrix::zeros(self.n, h.cols());
        for u in 0..self.n {
            let nb = self.neighbors(u);
            let row = out.row_mut(u);
            for &v in nb {
                for (o, &x) in row.iter_mut().zip(h.row(v)) {
                    *o += x;
                }
            }
        }
        Ok(out)
    }
}

/// Undirected union of a directed edge set; alias of [`CsrGraph::from_edges`].
pub fn symmetrize(n: usize, edges: &[(usize, usize)]) -> Result<CsrGraph> {
    CsrGraph::from_edges(n, edges)
}
