//! Hard assignments, normalized mutual information and label alignment.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::embed::align_labels;
use crate::error::{ensure, Result};
use crate::model::GroundTruth;
use crate::scalar::Real;
use crate::vb::VariationalState;

/// Most responsible group per node and per `(layer, node)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub global_labels: Vec<usize>,
    /// `L × N`.
    pub layer_labels: Array2<usize>,
    pub occupied_global: usize,
    /// Distinct layer groups used across all layers.
    pub occupied_layer: usize,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax<T: Real>(row: ArrayView1<'_, T>) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

fn distinct(labels: impl Iterator<Item = usize>) -> usize {
    let mut seen: Vec<usize> = labels.collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

pub fn extract_assignments<T: Real>(state: &VariationalState<T>) -> ClusteringResult {
    let global_labels: Vec<usize> = state.phi_w.rows().into_iter().map(argmax).collect();
    let (l, n, _) = state.phi_z.dim();
    let layer_labels = Array2::from_shape_fn((l, n), |(layer, i)| argmax(state.phi_z.slice(ndarray::s![layer, i, ..])));
    ClusteringResult {
        occupied_global: distinct(global_labels.iter().copied()),
        occupied_layer: distinct(layer_labels.iter().copied()),
        global_labels,
        layer_labels,
    }
}

/// Contingency counts: entry `(r, c)` counts indices with `a = r` and `b = c`.
pub fn confusion_matrix(a: &[usize], b: &[usize], k_a: usize, k_b: usize) -> Result<Array2<usize>> {
    ensure!(!a.is_empty(), Domain, "labelings must be non-empty");
    ensure!(a.len() == b.len(), Shape, "labelings have lengths {} and {}", a.len(), b.len());
    ensure!(
        a.iter().all(|&x| x < k_a) && b.iter().all(|&x| x < k_b),
        Invalid,
        "label exceeds the declared label count"
    );
    let mut m = Array2::zeros((k_a, k_b));
    for (&r, &c) in a.iter().zip(b) {
        m[[r, c]] += 1;
    }
    Ok(m)
}

/// How mutual information is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiNormalization {
    /// `I / ((H_a + H_b) / 2)`.
    #[default]
    Arithmetic,
    /// `I / sqrt(H_a H_b)`.
    Geometric,
}

/// Normalized mutual information with arithmetic-mean normalization.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    nmi_with(a, b, NmiNormalization::Arithmetic)
}

/// Normalized mutual information. Two constant labelings score 1.
pub fn nmi_with(a: &[usize], b: &[usize], norm: NmiNormalization) -> Result<f64> {
    ensure!(a.len() == b.len(), Shape, "labelings have lengths {} and {}", a.len(), b.len());
    ensure!(!a.is_empty(), Domain, "labelings must be non-empty");
    let k_a = a.iter().max().unwrap() + 1;
    let k_b = b.iter().max().unwrap() + 1;
    let table = confusion_matrix(a, b, k_a, k_b)?;
    let n = a.len() as f64;
    let row: Vec<f64> = table.sum_axis(Axis(1)).iter().map(|&c| c as f64).collect();
    let col: Vec<f64> = table.sum_axis(Axis(0)).iter().map(|&c| c as f64).collect();
    let entropy = |counts: &[f64]| -> f64 {
        counts.iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).ln()).sum()
    };
    let (h_a, h_b) = (entropy(&row), entropy(&col));
    let mut mi = 0.0;
    for ((r, c), &count) in table.indexed_iter() {
        if count > 0 {
            let p = count as f64 / n;
            mi += p * (p * n * n / (row[r] * col[c])).ln();
        }
    }
    let denom = match norm {
        NmiNormalization::Arithmetic => 0.5 * (h_a + h_b),
        NmiNormalization::Geometric => (h_a * h_b).sqrt(),
    };
    if h_a == 0.0 && h_b == 0.0 {
        return Ok(1.0);
    }
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn relabel(labels: &[usize], perm: &[usize]) -> Vec<usize> {
    labels.iter().map(|&l| perm[l]).collect()
}

/// Renames inferred groups to best match the simulated ones, separately for
/// the global labels and for each layer.
pub fn align_to_truth(result: &ClusteringResult, truth: &GroundTruth) -> Result<ClusteringResult> {
    let n = result.global_labels.len();
    ensure!(truth.global_groups.len() == n, Shape, "truth has a different node count");
    ensure!(truth.layer_groups.dim() == result.layer_labels.dim(), Shape, "truth has a different layer shape");
    let span = |x: &[usize], y: &[usize]| x.iter().chain(y).max().map_or(1, |m| m + 1);

    let k = span(&result.global_labels, &truth.global_groups);
    let perm = align_labels(&truth.global_groups, &result.global_labels, k)?;
    let global_labels = relabel(&result.global_labels, &perm);

    let mut layer_labels = result.layer_labels.clone();
    for (mut row, t) in layer_labels.outer_iter_mut().zip(truth.layer_groups.outer_iter()) {
        let target = row.to_vec();
        let reference = t.to_vec();
        let k = span(&target, &reference);
        let perm = align_labels(&reference, &target, k)?;
        for (dst, src) in row.iter_mut().zip(relabel(&target, &perm)) {
            *dst = src;
        }
    }
    Ok(ClusteringResult { global_labels, layer_labels, ..result.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nmi_reference_cases() {
        let a = [0, 0, 1, 1, 2, 2];
        assert_relative_eq!(nmi(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(nmi(&a, &[2, 2, 0, 0, 1, 1]).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(nmi(&[0, 0, 0], &[0, 0, 0]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0], &[4, 4, 4]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert!(nmi(&[0], &[0, 1]).is_err());
        // two equal halves, one split further: I = ln 2, H = ln 2 and 1.5 ln 2
        let v = nmi(&[0, 0, 1, 1], &[0, 1, 2, 2]).unwrap();
        assert_relative_eq!(v, 2.0 / 2.5, epsilon = 1e-12);
        let g = nmi_with(&[0, 0, 1, 1], &[0, 1, 2, 2], NmiNormalization::Geometric).unwrap();
        assert_relative_eq!(g, 1.0 / 1.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn confusion_counts() {
        let m = confusion_matrix(&[0, 1, 1], &[1, 1, 0], 2, 2).unwrap();
        assert_eq!(m, ndarray::array![[0, 1], [1, 1]]);
        assert!(confusion_matrix(&[], &[], 1, 1).is_err());
        assert!(confusion_matrix(&[2], &[0], 2, 2).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(ndarray::array![0.25, 0.25, 0.25, 0.25].view()), 0);
        assert_eq!(argmax(ndarray::array![0.1, 0.45, 0.45].view()), 1);
    }
}
