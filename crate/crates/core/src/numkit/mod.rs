//! Dense numeric kernels, the deterministic RNG, Adam, and finite differences.

mod adam;
mod fdiff;
mod matrix;
mod ops;
mod rng;
mod scalar;

pub use adam::{AdamConfig, AdamState};
pub use fdiff::{finite_diff_grad, relative_error, REL_ERROR_FLOOR};
pub use matrix::{dot, DenseMatrix};
pub use ops::{cross_entropy, relu, sigmoid, softmax_row, softmax_rows, softplus, PROB_FLOOR};
pub use rng::Rng;
pub use scalar::Scalar;

#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn sigmoid_monotone_and_symmetric(a in -700.0f64..700.0, b in -700.0f64..700.0) {
            prop_assert!((sigmoid(a) + sigmoid(-a) - 1.0).abs() <= 1e-15);
            if a < b {
                prop_assert!(sigmoid(a) <= sigmoid(b));
            }
        }

        #[test]
        fn softmax_sums_to_one_and_shift_invariant(
            v in proptest::collection::vec(-50.0f64..50.0, 1..12),
            c in -100.0f64..100.0,
        ) {
            let p = softmax_row(&v).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|&x| x > 0.0));
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let q = softmax_row(&shifted).unwrap();
            for (x, y) in p.iter().zip(&q) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
