use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Leading left singular vectors of an adjacency matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    /// `N × d`.
    pub coordinates: Array2<f64>,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
}

/// Top-`d` left singular vectors of `adjacency`. Each column's sign is
/// fixed so that its largest-magnitude entry (first on ties) is positive.
pub fn spectral_embed(adjacency: &Array2<f64>, d: usize) -> Result<Embedding> {
    let (n, m) = adjacency.dim();
    ensure!(n == m, Shape, "adjacency must be square, got {n}×{m}");
    ensure!(d >= 1 && d <= n, Domain, "embedding dimension {d} must lie in 1..={n}");
    let a = DMatrix::from_fn(n, n, |i, j| adjacency[[i, j]]);
    let svd = a.svd(true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut coordinates = Array2::zeros((n, d));
    let mut singular_values = Vec::with_capacity(d);
    for (c, &src) in order.iter().take(d).enumerate() {
        singular_values.push(svd.singular_values[src]);
        let col = u.column(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coordinates[[i, c]] = sign * col[i];
        }
    }
    Ok(Embedding { coordinates, singular_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn permutation_matrix_has_unit_spectrum() {
        let a = array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        let e = spectral_embed(&a, 3).unwrap();
        for s in &e.singular_values {
            assert_relative_eq!(*s, 1.0, epsilon = 1e-12);
        }
        let gram = e.coordinates.t().dot(&e.coordinates);
        for ((i, j), v) in gram.indexed_iter() {
            assert_relative_eq!(*v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
        assert!(spectral_embed(&a, 4).is_err());
        assert!(spectral_embed(&a, 0).is_err());
    }

    #[test]
    fn rank_one() {
        let u = array![1.0, -2.0, 2.0];
        let v = array![0.5, 1.0, 0.0];
        let a = Array2::from_shape_fn((3, 3), |(i, j)| u[i] * v[j]);
        let e = spectral_embed(&a, 2).unwrap();
        assert_relative_eq!(e.singular_values[1], 0.0, epsilon = 1e-12);
        let c = e.coordinates.column(0);
        // parallel to u, with the largest-magnitude entry positive
        assert_relative_eq!(c[0], -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(c[1], 2.0 / 3.0, epsilon = 1e-12);
    }
}
