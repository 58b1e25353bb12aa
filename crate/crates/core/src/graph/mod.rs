//! Similarity-graph construction and the normalized propagation operator.

mod augment;
mod csr;
mod knn;
mod normalize;

pub use augment::{add_label_edges, attach_nodes, augment, build_graph, rewire_edges, BuildConfig};
pub use csr::{symmetrize, CsrGraph};
pub use knn::{knn_attach, knn_edges, CosineIndex};
pub use normalize::{normalized_adjacency, NormalizedAdjacency};
