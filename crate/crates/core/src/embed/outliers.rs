use ndarray::Array2;

use super::density::{nearest, ClusterLabels};
use crate::error::{ensure, Result};

/// Moves every outlier into the cluster with the nearest centroid (lowest
/// cluster index on ties). Centroids are computed from non-outliers only.
pub fn assign_outliers(points: &Array2<f64>, clusters: &ClusterLabels) -> Result<Vec<usize>> {
    ensure!(points.nrows() == clusters.labels.len(), Shape, "points and labels differ in length");
    let k = clusters.num_clusters;
    ensure!(k > 0 && clusters.labels.iter().any(Option::is_some), Invalid, "every point is an outlier");
    let mut centroids = Array2::<f64>::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (i, l) in clusters.labels.iter().enumerate() {
        if let Some(c) = *l {
            centroids.row_mut(c).scaled_add(1.0, &points.row(i));
            counts[c] += 1;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        ensure!(count > 0, Invalid, "cluster {c} has no members");
        centroids.row_mut(c).mapv_inplace(|v| v / count as f64);
    }
    Ok(clusters
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| l.unwrap_or_else(|| nearest(points.row(i), &centroids)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn outliers_join_nearest_centroid() {
        let pts = array![[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 0.0], [5.0, 5.0]];
        let c = ClusterLabels { labels: vec![Some(0), Some(1), None, Some(0), None], num_clusters: 2, warning: None };
        // centroids (0.5, 0) and (2, 0); point 2 is nearer cluster 0
        assert_eq!(assign_outliers(&pts, &c).unwrap(), vec![0, 1, 0, 0, 1]);
        let tie = ClusterLabels { labels: vec![Some(0), Some(1), None], num_clusters: 2, warning: None };
        let pts = array![[0.0], [2.0], [1.0]];
        assert_eq!(assign_outliers(&pts, &tie).unwrap(), vec![0, 1, 0]);
        let none = ClusterLabels { labels: vec![None, None], num_clusters: 0, warning: None };
        assert!(assign_outliers(&array![[0.0], [1.0]], &none).is_err());
    }
}
