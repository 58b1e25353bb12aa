use crate::error::{Error, Result};
use crate::numkit::{cross_entropy, softmax_rows, DenseMatrix, Scalar, PROB_FLOOR};
use crate::topo::AuxTargets;

/// Mean softmax cross-entropy of `logits` over the nodes in `mask`.
pub fn classification_loss<T: Scalar>(logits: &DenseMatrix<T>, labels: &[usize], mask: &[usize]) -> Result<T> {
    cross_entropy(&softmax_rows(logits)?, labels, mask)
}

/// Loss and its gradient with respect to the logits.
pub fn classification_loss_grad<T: Scalar>(
    logits: &DenseMatrix<T>,
    labels: &[usize],
    mask: &[usize],
) -> Result<(T, DenseMatrix<T>)> {
    let probs = softmax_rows(logits)?;
    let loss = cross_entropy(&probs, labels, mask)?;
    let scale = T::one() / T::of(mask.len() as f64);
    let floor = T::of(PROB_FLOOR);
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    for &u in mask {
        let p = probs.row(u);
        let y = labels[u];
        let row = grad.row_mut(u);
        if p[y] < floor {
            // the clamp makes the loss locally constant
            continue;
        }
        for (j, (g, &pj)) in row.iter_mut().zip(p).enumerate() {
            let target = if j == y { T::one() } else { T::zero() };
            *g += (pj - target) * scale;
        }
    }
    Ok((loss, grad))
}

/// Mean over `mask` of squared errors of both auxiliary predictions.
pub fn aux_loss<T: Scalar>(homophily: &[T], entropy: &[T], targets: &AuxTargets, mask: &[usize]) -> Result<T> {
    Ok(aux_loss_grad(homophily, entropy, targets, mask)?.0)
}

/// Aux loss and its gradients with respect to both prediction vectors.
pub fn aux_loss_grad<T: Scalar>(
    homophily: &[T],
    entropy: &[T],
    targets: &AuxTargets,
    mask: &[usize],
) -> Result<(T, Vec<T>, Vec<T>)> {
    if mask.is_empty() {
        return Err(Error::Empty("aux_loss mask"));
    }
    let n = homophily.len();
    if entropy.len() != n || targets.homophily.len() != n || targets.entropy.len() != n {
        return Err(Error::Shape { op: "aux_loss", left: (n, 2), right: (targets.homophily.len(), 2) });
    }
    let m = T::of(mask.len() as f64);
    let two = T::of(2.0);
    let mut loss = T::zero();
    let mut d_h = vec![T::zero(); n];
    let mut d_s = vec![T::zero(); n];
    for &v in mask {
        let eh = homophily[v] - T::of(targets.homophily[v]);
        let es = entropy[v] - T::of(targets.entropy[v]);
        if !(eh.is_finite() && es.is_finite()) {
            return Err(Error::NonFinite(format!("aux prediction at node {v}")));
        }
        loss += eh * eh + es * es;
        d_h[v] += two * eh / m;
        d_s[v] += two * es / m;
    }
    Ok((loss / m, d_h, d_s))
}

/// `L_cls + λ·L_aux`.
pub fn total_loss<T: Scalar>(classification: T, auxiliary: T, lambda: T) -> T {
    classification + lambda * auxiliary
}
