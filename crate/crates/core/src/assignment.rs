//! Linear sum assignment (shortest augmenting paths, Jonker–Volgenant style).

use ndarray::Array2;

use crate::error::{ensure, Result};

/// Minimum-cost perfect matching of a square cost matrix. Returns `col[r]`,
/// the column assigned to row `r`.
pub fn linear_sum_assignment(cost: &Array2<f64>) -> Result<Vec<usize>> {
    let n = cost.nrows();
    ensure!(cost.ncols() == n, Shape, "assignment needs a square cost matrix, got {:?}", cost.dim());
    ensure!(cost.iter().all(|c| c.is_finite()), Domain, "assignment costs must be finite");
    // potentials u (rows) and v (columns), 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for r in 1..=n {
        row_of[0] = r;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col = vec![0; n];
    for j in 1..=n {
        col[row_of[j] - 1] = j - 1;
    }
    Ok(col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn small_known_problem() {
        let c = array![[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let a = linear_sum_assignment(&c).unwrap();
        let total: f64 = a.iter().enumerate().map(|(r, &j)| c[[r, j]]).sum();
        assert_eq!(total, 5.0);
        assert!(linear_sum_assignment(&Array2::zeros((2, 3))).is_err());
        assert_eq!(linear_sum_assignment(&Array2::zeros((0, 0))).unwrap(), Vec::<usize>::new());
    }
}
