use super::{DenseMatrix, Scalar};
use crate::error::{Error, Result};

/// Logistic function, branching on sign so neither branch overflows.
#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + eˣ)` without overflow for large `x`.
#[inline]
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Max-subtracted softmax of a single vector.
pub fn softmax_row<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::Empty("softmax_row"));
    }
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

pub(crate) fn softmax_in_place<T: Scalar>(v: &mut [T]) {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Row-wise softmax of a logit matrix.
pub fn softmax_rows<T: Scalar>(logits: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if logits.cols() == 0 {
        return Err(Error::Empty("softmax_rows"));
    }
    let mut out = logits.clone();
    for i in 0..out.rows() {
        softmax_in_place(out.row_mut(i));
    }
    Ok(out)
}

/// Lower clamp applied to probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Mean negative log-likelihood of `labels` over the rows listed in `mask`.
pub fn cross_entropy<T: Scalar>(probs: &DenseMatrix<T>, labels: &[usize], mask: &[usize]) -> Result<T> {
    if mask.is_empty() {
        return Err(Error::Empty("cross_entropy mask"));
    }
    let floor = T::of(PROB_FLOOR);
    let mut total = T::zero();
    for &u in mask {
        if u >= probs.rows() || u >= labels.len() {
            return Err(Error::InvalidArgument(format!("masked node {u} out of range")));
        }
        let row = probs.row(u);
        let label = labels[u];
        if label >= row.len() {
            return Err(Error::InvalidArgument(format!(
                "label {label} of node {u} outside [0, {})",
                row.len()
            )));
        }
        let sum: T = row.iter().copied().sum();
        if (sum - T::one()).abs().as_f64() > 1e-9 {
            return Err(Error::InvalidArgument(format!("row {u} sums to {sum}, not 1")));
        }
        total -= row[label].max(floor).ln();
    }
    Ok(total / T::of(mask.len() as f64))
}
