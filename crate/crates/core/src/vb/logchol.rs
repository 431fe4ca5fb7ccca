//! Log-Cholesky parameterization `L = ⌊B⌋ + exp(diag B)`, `Σ = L Lᵀ`.

use ndarray::{Array2, ArrayView2};

use crate::error::Result;
use crate::linalg::cholesky;
use crate::scalar::Real;

/// `L` from the unconstrained lower-triangular `B`; the strict upper part
/// of `B` is ignored.
pub fn factor_from_log_cholesky<T: Real>(b: ArrayView2<'_, T>) -> Array2<T> {
    let p = b.nrows();
    Array2::from_shape_fn((p, p), |(i, j)| match i.cmp(&j) {
        std::cmp::Ordering::Greater => b[[i, j]],
        std::cmp::Ordering::Equal => b[[i, i]].exp(),
        std::cmp::Ordering::Less => T::zero(),
    })
}

/// `(L, Σ)` for a log-Cholesky matrix `B`.
pub fn chol_log_roundtrip<T: Real>(b: ArrayView2<'_, T>) -> (Array2<T>, Array2<T>) {
    let l = factor_from_log_cholesky(b);
    let sigma = l.dot(&l.t());
    (l, sigma)
}

/// Inverse map `Σ ↦ B`.
pub fn log_cholesky_from_sigma<T: Real>(sigma: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let mut l = cholesky(sigma)?;
    for i in 0..l.nrows() {
        l[[i, i]] = l[[i, i]].ln();
    }
    Ok(l)
}

/// Chain rule from `∂ℒ/∂Σ` (symmetric, entries treated as independent) to
/// `∂ℒ/∂B`: `2 (G L)_ij` below the diagonal, `2 (G L)_ii exp(B_ii)` on it,
/// zero above.
pub fn grad_b<T: Real>(grad_sigma: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Array2<T> {
    let l = factor_from_log_cholesky(b);
    let gl = grad_sigma.dot(&l);
    let p = b.nrows();
    let two = T::lit(2.0);
    Array2::from_shape_fn((p, p), |(i, j)| match i.cmp(&j) {
        std::cmp::Ordering::Greater => two * gl[[i, j]],
        std::cmp::Ordering::Equal => two * gl[[i, i]] * b[[i, i]].exp(),
        std::cmp::Ordering::Less => T::zero(),
    })
}
