//! Graph neural networks with trainable fuzzy rules over topological node
//! descriptors (degree, clustering coefficient, 2-hop label agreement), fused
//! into the node embedding through a learned gate.
//!
//! Numerics are generic over [`numkit::Scalar`]; the aliases below fix the
//! scalar to `f64`, which is what training and gradient checking use.

pub mod error;
pub mod explain;
pub mod graph;
pub mod graphio;
pub mod metrics;
pub mod model;
pub mod numkit;
pub mod synth;
pub mod topo;
pub mod train;

pub use error::{Error, Result};

/// `f64` dense matrix.
pub type Matrix = numkit::DenseMatrix<f64>;
/// `f32` dense matrix.
pub type Matrix32 = numkit::DenseMatrix<f32>;
