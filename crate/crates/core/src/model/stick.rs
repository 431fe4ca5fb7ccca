use ndarray::{Array2, ArrayView1};

use crate::error::{ensure, Result};
use crate::scalar::Real;
use crate::special::norm_cdf;

/// Finite stick-breaking weights together with the unbroken remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct StickWeights<T> {
    pub weights: Vec<T>,
    pub remainder: T,
}

impl<T: Real> StickWeights<T> {
    /// Weights with the remainder folded into the last component, so the
    /// result is a proper probability vector over `K` outcomes.
    pub fn absorbed(&self) -> Vec<T> {
        let mut w = self.weights.clone();
        if let Some(last) = w.last_mut() {
            *last += self.remainder;
        }
        w
    }
}

/// `weight_s = b_s ∏_{r<s} (1 − b_r)`.
pub fn stick_breaking_weights<T: Real>(breaks: &[T]) -> Result<StickWeights<T>> {
    let mut weights = Vec::with_capacity(breaks.len());
    let mut rest = T::one();
    for (s, &b) in breaks.iter().enumerate() {
        ensure!(b >= T::zero() && b <= T::one(), Domain, "stick break {s} = {b} lies outside [0, 1]");
        weights.push(b * rest);
        rest *= T::one() - b ;
    }
    Ok(StickWeights { weights, remainder: rest })
}

/// Probit stick-breaking mixture weights `τ_k = Φ(xᵀφ_k) ∏_{l<k} (1 − Φ(xᵀφ_l))`
/// for one covariate row `x` and weights `phi` (one row per component).
pub fn probit_stick_probs<T: Real>(x: ArrayView1<'_, T>, phi: &Array2<T>) -> Result<StickWeights<T>> {
    ensure!(
        phi.ncols() == x.len(),
        Shape,
        "covariate row has length {} but probit weights have {} columns",
        x.len(),
        phi.ncols()
    );
    let breaks: Vec<T> = phi.rows().into_iter().map(|row| norm_cdf(row.dot(&x))).collect();
    stick_breaking_weights(&breaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::{array, Array1};

    #[test]
    fn closed_form_examples() {
        let s = stick_breaking_weights(&[1.0, 0.3, 0.7]).unwrap();
        assert_eq!(s.weights, vec![1.0, 0.0, 0.0]);
        assert_eq!(s.remainder, 0.0);
        let s = stick_breaking_weights(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(s.weights, vec![0.5, 0.25, 0.125]);
        assert_eq!(s.remainder, 0.125);
        let s = stick_breaking_weights(&[0.0f64, 0.0]).unwrap();
        assert_eq!((s.weights, s.remainder), (vec![0.0, 0.0], 1.0));
        assert!(stick_breaking_weights(&[0.2, 1.1]).is_err());
        assert!(stick_breaking_weights(&[-0.1]).is_err());
        assert!(stick_breaking_weights(&[f64::NAN]).is_err());
    }

    #[test]
    fn probit_sticks() {
        let phi = array![[1.0, -2.0], [0.3, 0.3], [5.0, 1.0]];
        let zero = Array1::<f64>::zeros(2);
        let s = probit_stick_probs(zero.view(), &phi).unwrap();
        assert_eq!(s.weights, vec![0.5, 0.25, 0.125]);
        assert_eq!(s.remainder, 0.125);

        let x = array![38.0, 0.0];
        let s = probit_stick_probs(x.view(), &array![[1.0, 0.0]]).unwrap();
        assert_relative_eq!(s.weights[0], 1.0, epsilon = 1e-12);

        let x = array![1.0, 2.0, 3.0];
        assert!(probit_stick_probs(x.view(), &phi).is_err());
    }

    #[test]
    fn absorbed_is_a_distribution() {
        let s = stick_breaking_weights(&[0.2, 0.4]).unwrap();
        let total: f64 = s.absorbed().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-15);
    }
}
