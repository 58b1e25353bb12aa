use serde::{Deserialize, Serialize};

use super::{DenseMatrix, Scalar};
use crate::error::{Error, Result};

/// Adam hyperparameters. Weight decay is applied as an L2 term added to the
/// gradient before the moment updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

/// Moment estimates for an ordered set of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    m: Vec<DenseMatrix<T>>,
    v: Vec<DenseMatrix<T>>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (m, v) = shapes
            .into_iter()
            .map(|(r, c)| (DenseMatrix::zeros(r, c), DenseMatrix::zeros(r, c)))
            .unzip();
        Self { config, m, v, t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [&mut DenseMatrix<T>], grads: &[&DenseMatrix<T>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::InvalidArgument(format!(
                "adam_step expects {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != self.m[i].shape() || g.shape() != self.m[i].shape() {
                return Err(Error::Shape { op: "adam_step", left: p.shape(), right: g.shape() });
            }
            if !g.all_finite() {
                return Err(Error::NonFinite(format!("gradient tensor {i}")));
            }
        }
        self.t += 1;
        let c = self.config;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let bias1 = T::one() - T::of(c.beta1.powi(self.t as i32));
        let bias2 = T::one() - T::of(c.beta2.powi(self.t as i32));
        let (lr, eps, wd) = (T::of(c.lr), T::of(c.eps), T::of(c.weight_decay));
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                let gi = gi + wd * *w;
                *mi = b1 * *mi + (T::one() - b1) * gi;
                *vi = b2 * *vi + (T::one() - b2) * gi * gi;
                let m_hat = *mi / bias1;
                let v_hat = *vi / bias2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let before = p.clone();
        let g = DenseMatrix::zeros(2, 2);
        let mut st = AdamState::<f64>::new(AdamConfig::default(), [(2, 2)]);
        for _ in 0..10 {
            st.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(st.steps(), 10);
    }

    #[test]
    fn first_step_moves_by_lr() {
        for &g in &[3.5f64, -0.002, 100.0] {
            let mut p = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
            let grad = DenseMatrix::new(1, 1, vec![g]).unwrap();
            let cfg = AdamConfig { lr: 0.05, ..AdamConfig::default() };
            let mut st = AdamState::<f64>::new(cfg, [(1, 1)]);
            st.step(&mut [&mut p], &[&grad]).unwrap();
            let delta = 1.0 - p.get(0, 0);
            assert!((delta - 0.05 * g.signum()).abs() < 1e-6, "g={g} delta={delta}");
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let mut x = DenseMatrix::new(1, 1, vec![3.0f64]).unwrap();
        let cfg = AdamConfig { lr: 0.05, ..AdamConfig::default() };
        let mut st = AdamState::new(cfg, [(1, 1)]);
        for _ in 0..500 {
            let g = DenseMatrix::new(1, 1, vec![2.0 * x.get(0, 0)]).unwrap();
            st.step(&mut [&mut x], &[&g]).unwrap();
        }
        assert!(x.get(0, 0).abs() < 0.05, "x = {}", x.get(0, 0));
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut p = DenseMatrix::<f64>::zeros(2, 2);
        let g = DenseMatrix::zeros(2, 3);
        let mut st = AdamState::new(AdamConfig::default(), [(2, 2)]);
        assert!(st.step(&mut [&mut p], &[&g]).is_err());
    }
}
