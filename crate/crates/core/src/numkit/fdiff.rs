use super::Scalar;
use crate::error::{Error, Result};

/// Central-difference gradient of `loss` at `params`, one coordinate at a time.
pub fn finite_diff_grad<T, F>(mut loss: F, params: &[T], h: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let hf = h.as_f64();
    if !(1e-7..=1e-3).contains(&hf) {
        return Err(Error::InvalidArgument(format!("step {hf} outside [1e-7, 1e-3]")));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = loss(&p);
        p[i] = orig - h;
        let down = loss(&p);
        p[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!("loss at coordinate {i}")));
        }
        grad.push((up - down) / (h + h));
    }
    Ok(grad)
}

/// Absolute gradients smaller than this are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// `|a − b| / max(|a|, |b|, REL_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}
