//! Shared inputs for the benchmarks.

use mtorus::{IntMatrix, TorusAutomorphism};

pub fn matrix(rows: &[&[i64]]) -> IntMatrix {
    IntMatrix::from_i64_rows(rows).expect("valid literal")
}

/// Order 2, order 3 and order 6 in `GL(2, Z)`, plus the Klein bottle flip.
pub fn finite_order_samples() -> Vec<IntMatrix> {
    vec![
        matrix(&[&[-1, 0], &[0, -1]]),
        matrix(&[&[0, 1], &[-1, -1]]),
        matrix(&[&[0, -1], &[1, 1]]),
        matrix(&[&[-1]]),
    ]
}

/// A dense 4x4 integer matrix (det -2), for exact arithmetic costs.
pub fn dense_4x4() -> IntMatrix {
    matrix(&[&[1, 2, 0, 1], &[0, 1, 3, -1], &[2, 5, 1, 1], &[1, 3, 4, 1]])
}

/// The orientable pair with coprime periods 2 and 3.
pub fn orientable_pair() -> (TorusAutomorphism, TorusAutomorphism) {
    let a = TorusAutomorphism::new(matrix(&[&[-1, 0], &[0, -1]])).expect("unimodular");
    let b = TorusAutomorphism::new(matrix(&[&[0, 1], &[-1, -1]])).expect("unimodular");
    (a, b)
}
