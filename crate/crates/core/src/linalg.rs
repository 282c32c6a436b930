//! Dense complex matrix helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].norm(),
        _ => m.singular_values().iter().copied().fold(0.0, f64::max),
    }
}

/// Maximum absolute column sum.
pub fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse by partial-pivot LU, `None` when a pivot vanishes.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    let inv = m.clone().lu().try_inverse()?;
    inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(inv)
}

/// `c * 1 1^T` of size `n`.
pub fn ones_outer(n: usize, c: Complex64) -> CMatrix {
    CMatrix::from_element(n, n, c)
}

pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
