//! Density-based clustering with an automatic cluster count: mutual
//! reachability, a minimum spanning tree, the condensed cluster tree and
//! excess-of-mass cluster selection.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::linalg::squared_distance;

/// Flat clustering, `None` marking an outlier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabels {
    pub labels: Vec<Option<usize>>,
    pub num_clusters: usize,
    /// Set when the clusterer gave up and returned a single cluster.
    pub warning: Option<String>,
}

impl ClusterLabels {
    pub fn single(n: usize) -> Self {
        Self { labels: vec![Some(0); n], num_clusters: 1, warning: None }
    }
}

/// Which clusterer runs under the escalation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    #[default]
    Hdbscan,
    /// Lloyd's k-means with `k` equal to the cap.
    Kmeans,
}

fn pairwise(points: &Array2<f64>) -> Array2<f64> {
    let n = points.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v = squared_distance(points.row(i), points.row(j)).sqrt();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Distances from each point to all points, sorted ascending (self first).
fn sorted_rows(dist: &Array2<f64>) -> Vec<Vec<f64>> {
    dist.rows()
        .into_iter()
        .map(|r| {
            let mut v = r.to_vec();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect()
}

/// Minimum spanning tree of the mutual reachability graph as
/// `(weight, a, b)` edges sorted by weight, ties by discovery order.
fn mutual_reachability_mst(dist: &Array2<f64>, core: &[f64]) -> Vec<(f64, usize, usize)> {
    let n = core.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = dist[[current, j]].max(core[current]).max(core[j]);
            if w < best[j] {
                best[j] = w;
                parent[j] = current;
            }
        }
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((best[next], parent[next], next));
        current = next;
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    edges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Single-linkage dendrogram: internal node `n + t` merges `children[t]` at `heights[t]`.
struct Dendrogram {
    n: usize,
    children: Vec<(usize, usize)>,
    heights: Vec<f64>,
    sizes: Vec<usize>,
}

impl Dendrogram {
    fn from_mst(n: usize, mst: &[(f64, usize, usize)]) -> Self {
        // union-find over dendrogram nodes; every root is its own subtree
        let mut uf = UnionFind::new(2 * n);
        let mut children = Vec::with_capacity(n);
        let mut heights = Vec::with_capacity(n);
        let mut sizes = vec![1usize; n];
        for (t, &(w, a, b)) in mst.iter().enumerate() {
            let (ra, rb) = (uf.find(a), uf.find(b));
            let new = n + t;
            children.push((ra, rb));
            heights.push(w);
            sizes.push(sizes[ra] + sizes[rb]);
            uf.parent[ra] = new;
            uf.parent[rb] = new;
        }
        Self { n, children, heights, sizes }
    }

    fn size(&self, node: usize) -> usize {
        self.sizes[node]
    }

    fn leaves(&self, node: usize, out: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < self.n {
                out.push(v);
            } else {
                let (a, b) = self.children[v - self.n];
                stack.push(a);
                stack.push(b);
            }
        }
    }
}

fn lambda(height: f64) -> f64 {
    1.0 / height.max(1e-12)
}

struct CondensedCluster {
    /// Dendrogram node where the cluster is born.
    root: usize,
    birth: f64,
    stability: f64,
    children: Vec<usize>,
}

/// Condensed tree over clusters of at least `min_size` points.
fn condense(tree: &Dendrogram, min_size: usize) -> Vec<CondensedCluster> {
    let root = tree.n + tree.children.len() - 1;
    let mut clusters = vec![CondensedCluster { root, birth: 0.0, stability: 0.0, children: Vec::new() }];
    // (dendrogram node, owning cluster)
    let mut stack = vec![(root, 0usize)];
    while let Some((node, owner)) = stack.pop() {
        if node < tree.n {
            continue;
        }
        let t = node - tree.n;
        let (a, b) = tree.children[t];
        let lam = lambda(tree.heights[t]);
        let birth = clusters[owner].birth;
        let (big_a, big_b) = (tree.size(a) >= min_size, tree.size(b) >= min_size);
        if big_a && big_b {
            // both sides leave the owner here and become new clusters
            clusters[owner].stability += (lam - birth) * (tree.size(a) + tree.size(b)) as f64;
            for child in [a, b] {
                let id = clusters.len();
                clusters.push(CondensedCluster { root: child, birth: lam, stability: 0.0, children: Vec::new() });
                clusters[owner].children.push(id);
                stack.push((child, id));
            }
        } else {
            for (child, big) in [(a, big_a), (b, big_b)] {
                if big {
                    stack.push((child, owner));
                } else {
                    // points falling out of the owner
                    clusters[owner].stability += (lam - birth) * tree.size(child) as f64;
                }
            }
        }
    }
    clusters
}

/// Excess-of-mass selection; the root is never selected.
fn select(clusters: &mut [CondensedCluster]) -> Vec<usize> {
    let mut selected = vec![false; clusters.len()];
    // children always have larger ids than their parent
    for id in (1..clusters.len()).rev() {
        let child_sum: f64 = clusters[id].children.iter().map(|&c| clusters[c].stability).sum();
        if clusters[id].children.is_empty() || clusters[id].stability >= child_sum {
            selected[id] = true;
            let mut stack = clusters[id].children.clone();
            while let Some(c) = stack.pop() {
                selected[c] = false;
                stack.extend(clusters[c].children.iter().copied());
            }
        } else {
            clusters[id].stability = child_sum;
        }
    }
    (1..clusters.len()).filter(|&id| selected[id]).collect()
}

/// One HDBSCAN-style pass with minimum cluster size (and neighbour count) `min_size`.
fn hdbscan_once(dist: &Array2<f64>, sorted: &[Vec<f64>], min_size: usize) -> ClusterLabels {
    let n = sorted.len();
    if n == 1 {
        return ClusterLabels::single(1);
    }
    // the k-th nearest neighbour counts the point itself
    let k = (min_size - 1).min(n - 1);
    let core: Vec<f64> = sorted.iter().map(|r| r[k]).collect();
    let mst = mutual_reachability_mst(dist, &core);
    let tree = Dendrogram::from_mst(n, &mst);
    let mut clusters = condense(&tree, min_size);
    let chosen = select(&mut clusters);
    let mut members: Vec<Vec<usize>> = chosen
        .iter()
        .map(|&id| {
            let mut out = Vec::new();
            tree.leaves(clusters[id].root, &mut out);
            out.sort_unstable();
            out
        })
        .collect();
    members.sort_by_key(|m| m[0]);
    let mut labels = vec![None; n];
    for (c, m) in members.iter().enumerate() {
        for &i in m {
            labels[i] = Some(c);
        }
    }
    ClusterLabels { labels, num_clusters: members.len(), warning: None }
}

/// Lloyd's algorithm with farthest-point seeding from point 0.
pub fn kmeans(points: &Array2<f64>, k: usize) -> ClusterLabels {
    let n = points.nrows();
    let k = k.min(n).max(1);
    let mut centres = vec![0usize];
    while centres.len() < k {
        let far = (0..n)
            .map(|i| centres.iter().map(|&c| squared_distance(points.row(i), points.row(c))).fold(f64::INFINITY, f64::min))
            .enumerate()
            .fold((0, -1.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc })
            .0;
        centres.push(far);
    }
    let mut c: Array2<f64> = Array2::from_shape_fn((k, points.ncols()), |(r, j)| points[[centres[r], j]]);
    let mut labels = vec![0usize; n];
    for _ in 0..300 {
        let new: Vec<usize> = (0..n).map(|i| nearest(points.row(i), &c)).collect();
        let changed = new != labels;
        labels = new;
        let mut sums = Array2::<f64>::zeros(c.dim());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &points.row(i));
            counts[l] += 1;
        }
        for r in 0..k {
            if counts[r] > 0 {
                c.row_mut(r).assign(&(&sums.row(r) / counts[r] as f64));
            }
        }
        if !changed {
            break;
        }
    }
    compact(labels.into_iter().map(Some).collect())
}

/// Renumbers cluster ids to `0..count` in order of first appearance.
fn compact(labels: Vec<Option<usize>>) -> ClusterLabels {
    let mut map: Vec<(usize, usize)> = Vec::new();
    let labels: Vec<Option<usize>> = labels
        .into_iter()
        .map(|l| {
            l.map(|v| match map.iter().find(|(old, _)| *old == v) {
                Some(&(_, new)) => new,
                None => {
                    map.push((v, map.len()));
                    map.len() - 1
                }
            })
        })
        .collect();
    ClusterLabels { num_clusters: map.len(), labels, warning: None }
}

/// Index of the nearest row of `centres`, lowest index on ties.
pub(crate) fn nearest(p: ndarray::ArrayView1<'_, f64>, centres: &Array2<f64>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (r, c) in centres.rows().into_iter().enumerate() {
        let d = squared_distance(p, c);
        if d < best_d {
            best_d = d;
            best = r;
        }
    }
    best
}

/// Clusters `points`, raising the minimum cluster size by one until at most
/// `max_clusters` clusters remain. If the size passes the point count, one
/// cluster is returned with a warning. A run that finds no cluster at all
/// also yields a single cluster.
pub fn density_cluster(
    points: &Array2<f64>,
    max_clusters: usize,
    min_cluster_size_start: usize,
    method: ClusterMethod,
) -> Result<ClusterLabels> {
    ensure!(max_clusters >= 1, Domain, "max_clusters must be at least 1");
    ensure!(points.iter().all(|v| v.is_finite()), Invalid, "points must be finite");
    let n = points.nrows();
    ensure!(n >= 1, Domain, "no points to cluster");
    if max_clusters == 1 {
        return Ok(ClusterLabels::single(n));
    }
    if method == ClusterMethod::Kmeans {
        return Ok(kmeans(points, max_clusters));
    }
    let dist = pairwise(points);
    let sorted = sorted_rows(&dist);
    let mut size = min_cluster_size_start.max(2);
    loop {
        if size > n {
            let mut out = ClusterLabels::single(n);
            out.warning = Some(format!("no clustering with at most {max_clusters} clusters; using one cluster"));
            return Ok(out);
        }
        let labels = hdbscan_once(&dist, &sorted, size);
        if labels.num_clusters == 0 {
            return Ok(ClusterLabels::single(n));
        }
        if labels.num_clusters <= max_clusters {
            return Ok(labels);
        }
        size += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(centres: &[(f64, f64)], per: usize, spread: f64) -> Array2<f64> {
        let mut pts = Array2::zeros((centres.len() * per, 2));
        for (c, &(x, y)) in centres.iter().enumerate() {
            for k in 0..per {
                // deterministic jitter on a small spiral
                let t = k as f64 * 2.399;
                let r = spread * ((k as f64 + 0.5) / per as f64).sqrt();
                pts[[c * per + k, 0]] = x + r * t.cos();
                pts[[c * per + k, 1]] = y + r * t.sin();
            }
        }
        pts
    }

    #[test]
    fn separated_blobs() {
        let pts = blobs(&[(0.0, 0.0), (10.0, 0.0)], 30, 1.0);
        let c = density_cluster(&pts, 5, 5, ClusterMethod::Hdbscan).unwrap();
        assert_eq!(c.num_clusters, 2);
        for i in 0..60 {
            if let Some(l) = c.labels[i] {
                assert_eq!(l, i / 30);
            }
        }
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let pts = Array2::from_elem((12, 3), 0.5);
        let c = density_cluster(&pts, 4, 3, ClusterMethod::Hdbscan).unwrap();
        assert_eq!(c.num_clusters, 1);
    }

    #[test]
    fn escalation_respects_cap() {
        let pts = blobs(&[(0.0, 0.0), (20.0, 0.0), (0.0, 20.0)], 15, 1.0);
        let c = density_cluster(&pts, 2, 3, ClusterMethod::Hdbscan).unwrap();
        assert!(c.num_clusters <= 2);
        let k = density_cluster(&pts, 3, 3, ClusterMethod::Kmeans).unwrap();
        assert_eq!(k.num_clusters, 3);
    }
}
