use ndarray::Array2;

use crate::assignment::linear_sum_assignment;
use crate::error::{ensure, Result};
use crate::eval::confusion_matrix;

/// Permutation `π` of `0..k` maximizing `Σ_i 1{reference_i = π(target_i)}`,
/// found as an optimal assignment on the confusion counts.
pub fn align_labels(reference: &[usize], target: &[usize], k: usize) -> Result<Vec<usize>> {
    ensure!(reference.len() == target.len(), Shape, "label vectors differ in length");
    ensure!(k >= 1, Domain, "label count must be positive");
    if reference.is_empty() {
        return Ok((0..k).collect());
    }
    // rows: target label, columns: reference label
    let counts = confusion_matrix(target, reference, k, k)?;
    let cost: Array2<f64> = counts.mapv(|c| -(c as f64));
    linear_sum_assignment(&cost)
}

/// Number of agreements after applying `perm` to `target`.
pub fn agreement(reference: &[usize], target: &[usize], perm: &[usize]) -> usize {
    reference.iter().zip(target).filter(|&(&r, &t)| perm[t] == r).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_swap() {
        let r = [0, 0, 1, 2, 2];
        assert_eq!(align_labels(&r, &r, 3).unwrap(), vec![0, 1, 2]);
        let swapped = [1, 1, 0, 2, 2];
        assert_eq!(align_labels(&r, &swapped, 3).unwrap(), vec![1, 0, 2]);
        assert!(align_labels(&r, &[0, 1], 3).is_err());
    }
}
