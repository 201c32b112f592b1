//! Oracles shared by unit tests.

use nalgebra::DMatrix;

/// Matrix exponential by scaling and squaring of a long Taylor series.
pub fn expm(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let mut s = 0;
    let mut x = c.clone();
    while x.norm() > 0.5 {
        x /= 2.0;
        s += 1;
    }
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &x / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}
