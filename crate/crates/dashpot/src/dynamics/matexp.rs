//! Dense matrix exponential by scaling and squaring.

use super::DynamicsError;
use nalgebra::DMatrix;

/// Computes `e^{m t}`: the argument is scaled down until its row-sum norm
/// is at most 1/2, summed as a truncated Taylor series to machine
/// precision, then squared back up.
pub fn matrix_exponential(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>, DynamicsError> {
    assert!(m.is_square(), "matrix exponential of a non-square matrix");
    if !t.is_finite() || m.iter().any(|x| !x.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let n = m.nrows();
    let a = m * t;

    let norm = row_sum_norm(&a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = &a / 2f64.powi(squarings);

    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    for k in 1..=48u32 {
        term = &term * &b / f64::from(k);
        sum += &term;
        if term.amax() <= 1e-18 * sum.amax() {
            break;
        }
    }

    let mut exp = sum;
    for _ in 0..squarings {
        exp = &exp * &exp;
    }
    if exp.iter().any(|x| !x.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    Ok(exp)
}

fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
