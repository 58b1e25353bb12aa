use super::{AuxHeads, Mlp};
use crate::error::{Error, Result};
use crate::graph::{CsrGraph, NormalizedAdjacency};
use crate::numkit::{relu, sigmoid, softplus, DenseMatrix, Scalar};

fn with_bias<T: Scalar>(mut m: DenseMatrix<T>, bias: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    m.add_row_broadcast(bias.data())?;
    Ok(m)
}

/// `x·Wᵀ + b`.
pub(crate) fn affine<T: Scalar>(x: &DenseMatrix<T>, w: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    with_bias(x.matmul_nt(w)?, b)
}

/// Cached pieces of one MLP evaluation.
#[derive(Debug, Clone)]
pub(crate) struct MlpCache<T> {
    pub hidden_pre: DenseMatrix<T>,
    pub hidden: DenseMatrix<T>,
    pub out: DenseMatrix<T>,
}

pub(crate) fn mlp_forward<T: Scalar>(mlp: &Mlp<T>, x: &DenseMatrix<T>) -> Result<MlpCache<T>> {
    let hidden_pre = affine(x, &mlp.w1, &mlp.b1)?;
    let hidden = hidden_pre.map(relu);
    let out = affine(&hidden, &mlp.w2, &mlp.b2)?;
    Ok(MlpCache { hidden_pre, hidden, out })
}

/// `act(Â·H·W)`, with a rectifier unless `last`.
pub fn gcn_layer_forward<T: Scalar>(
    h: &DenseMatrix<T>,
    adjacency: &NormalizedAdjacency,
    weight: &DenseMatrix<T>,
    last: bool,
) -> Result<DenseMatrix<T>> {
    let z = adjacency.apply(h)?.matmul(weight)?;
    Ok(if last { z } else { z.map(relu) })
}

/// `act(MLP(H_u + Σ_{v∈N(u)} H_v))` (GIN with ε = 0), rectified unless `last`.
pub fn gin_layer_forward<T: Scalar>(h: &DenseMatrix<T>, graph: &CsrGraph, mlp: &Mlp<T>, last: bool) -> Result<DenseMatrix<T>> {
    let summed = h.add(&graph.aggregate(h)?)?;
    let z = mlp_forward(mlp, &summed)?.out;
    Ok(if last { z } else { z.map(relu) })
}

/// Firing strengths `r_i(u) = σ(α_i·(f_u[i] − θ_i))`.
pub fn rule_activation<T: Scalar>(facts: &DenseMatrix<T>, theta: &[T], alpha: &[T]) -> Result<DenseMatrix<T>> {
    if facts.cols() != theta.len() || theta.len() != alpha.len() {
        return Err(Error::Shape { op: "rule_activation", left: facts.shape(), right: (theta.len(), alpha.len()) });
    }
    let mut r = facts.clone();
    for u in 0..r.rows() {
        for ((x, &t), &a) in r.row_mut(u).iter_mut().zip(theta).zip(alpha) {
            *x = sigmoid(a * (*x - t));
        }
    }
    Ok(r)
}

/// `e_u = W_r·r(u) + b_r`.
pub fn rule_embed<T: Scalar>(rules: &DenseMatrix<T>, w_r: &DenseMatrix<T>, b_r: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    affine(rules, w_r, b_r)
}

/// `g_u = σ(W_g·[h_u ‖ e_u] + b_g)`.
pub fn gate<T: Scalar>(h: &DenseMatrix<T>, e: &DenseMatrix<T>, w_g: &DenseMatrix<T>, b_g: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    Ok(affine(&h.hstack(e)?, w_g, b_g)?.map(sigmoid))
}

/// `h'_u = g_u ⊙ h_u + (1 − g_u) ⊙ e_u`.
pub fn fuse<T: Scalar>(h: &DenseMatrix<T>, e: &DenseMatrix<T>, g: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if h.shape() != e.shape() || h.shape() != g.shape() {
        return Err(Error::Shape { op: "fuse", left: h.shape(), right: g.shape() });
    }
    let data = h
        .data()
        .iter()
        .zip(e.data())
        .zip(g.data())
        .map(|((&hv, &ev), &gv)| gv * hv + (T::one() - gv) * ev)
        .collect();
    DenseMatrix::new(h.rows(), h.cols(), data)
}

/// Predicted homophily (sigmoid output) and similarity entropy (softplus
/// output) for every node.
pub fn aux_predict<T: Scalar>(h: &DenseMatrix<T>, heads: &AuxHeads<T>) -> Result<(Vec<T>, Vec<T>)> {
    let hom = mlp_forward(&heads.homophily, h)?.out.into_data().into_iter().map(sigmoid).collect();
    let ent = mlp_forward(&heads.entropy, h)?.out.into_data().into_iter().map(softplus).collect();
    Ok((hom, ent))
}
