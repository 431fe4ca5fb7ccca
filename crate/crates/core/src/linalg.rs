//! Small dense helpers for the `P × P` covariance blocks.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky<T: Real>(a: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let p = a.nrows();
    if a.ncols() != p {
        return Err(Error::Shape(format!("cholesky needs a square matrix, got {:?}", a.dim())));
    }
    let mut l = Array2::zeros((p, p));
    for j in 0..p {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > T::zero()) {
            return Err(Error::Domain("matrix is not positive definite".into()));
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..p {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
pub fn lower_inverse<T: Real>(l: ArrayView2<'_, T>) -> Array2<T> {
    let p = l.nrows();
    let mut inv = Array2::zeros((p, p));
    for j in 0..p {
        inv[[j, j]] = l[[j, j]].recip();
        for i in j + 1..p {
            let mut s = T::zero();
            for k in j..i {
                s += l[[i, k]] * inv[[k, j]];
            }
            inv[[i, j]] = -s / l[[i, i]];
        }
    }
    inv
}

/// `Σ⁻¹` from the lower factor of `Σ = L Lᵀ`.
pub fn inverse_from_factor<T: Real>(l: ArrayView2<'_, T>) -> Array2<T> {
    let li = lower_inverse(l);
    li.t().dot(&li)
}

/// `log det(L Lᵀ)`.
pub fn log_det_from_factor<T: Real>(l: ArrayView2<'_, T>) -> T {
    l.diag().iter().map(|&d| d.ln()).sum::<T>() * T::lit(2.0)
}

/// `‖Lᵀ x‖² = xᵀ Σ x`.
pub fn quad_form_factor<T: Real>(l: ArrayView2<'_, T>, x: ArrayView1<'_, T>) -> T {
    let p = x.len();
    let mut total = T::zero();
    for c in 0..p {
        let mut s = T::zero();
        for r in c..p {
            s += l[[r, c]] * x[r];
        }
        total += s * s;
    }
    total
}

pub fn trace<T: Real>(a: ArrayView2<'_, T>) -> T {
    a.diag().sum()
}

pub fn squared_distance<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum()
}

pub fn identity<T: Real>(p: usize) -> Array2<T> {
    Array2::from_diag(&Array1::from_elem(p, T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn factor_inverse_and_logdet() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 3.0, 0.5], [0.4, 0.5, 2.0]];
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
        let inv = inverse_from_factor(l.view());
        let eye = a.dot(&inv);
        for ((i, j), v) in eye.indexed_iter() {
            assert_relative_eq!(*v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-13);
        }
        // det by cofactor expansion
        let det = 4.0 * (3.0 * 2.0 - 0.25) - 2.0 * (2.0 * 2.0 - 0.5 * 0.4) + 0.4 * (2.0 * 0.5 - 3.0 * 0.4);
        assert_relative_eq!(log_det_from_factor(l.view()), f64::ln(det), epsilon = 1e-13);
        let x = array![0.3, -1.0, 2.0];
        assert_relative_eq!(quad_form_factor(l.view(), x.view()), x.dot(&a.dot(&x)), epsilon = 1e-13);
        assert!(cholesky(array![[1.0, 2.0], [2.0, 1.0]].view()).is_err());
    }
}
