//! Gauss–Hermite quadrature for expectations under a univariate normal.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Larger rules underflow in the Hermite recurrence.
pub const MAX_NODES: usize = 150;

/// Gauss–Hermite rule, stored already rescaled for standard normal
/// expectations: `E[f(Z)] ≈ Σ_i w_i f(z_i)`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermite<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussHermite<T> {
    /// Builds an `n`-point rule. Nodes and weights are computed in `f64` by
    /// Newton iteration on the orthonormal Hermite recurrence.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_NODES {
            return Err(Error::Domain(format!("quadrature rules need 1..={MAX_NODES} nodes, got {n}")));
        }
        let (x, w) = hermite_rule(n);
        // physicists' rule integrates against exp(-x^2); map to N(0, 1)
        let scale = std::f64::consts::PI.sqrt().recip();
        let nodes = x.iter().map(|&xi| T::lit(xi * std::f64::consts::SQRT_2)).collect();
        let weights = w.iter().map(|&wi| T::lit(wi * scale)).collect();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Standard-normal abscissae and their weights.
    pub fn points(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `E[f(S)]` for `S ~ N(mean, var)`.
    pub fn expect<F: FnMut(T) -> T>(&self, mean: T, var: T, mut f: F) -> T {
        if var <= T::zero() {
            return f(mean);
        }
        let sd = var.sqrt();
        self.points().map(|(z, w)| w * f(mean + sd * z)).sum()
    }
}

fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_normal_moments_exactly() {
        let rule = GaussHermite::<f64>::new(32).unwrap();
        assert_relative_eq!(rule.expect(0.0, 1.0, |_| 1.0), 1.0, epsilon = 1e-13);
        assert_relative_eq!(rule.expect(0.0, 1.0, |z| z * z), 1.0, epsilon = 1e-12);
        assert_relative_eq!(rule.expect(0.0, 1.0, |z| z.powi(4)), 3.0, epsilon = 1e-11);
        // E[S^2] = m^2 + v
        assert_relative_eq!(rule.expect(1.5, 2.0, |s| s * s), 4.25, epsilon = 1e-11);
        // E[exp(S)] = exp(m + v/2)
        assert_relative_eq!(rule.expect(0.3, 0.5, f64::exp), (0.3f64 + 0.25).exp(), max_relative = 1e-12);
    }

    #[test]
    fn nodes_are_symmetric_and_ordered() {
        for n in [1, 2, 5, 10, 32, 64, MAX_NODES] {
            let rule = GaussHermite::<f64>::new(n).unwrap();
            let pts: Vec<_> = rule.points().collect();
            for i in 0..n {
                assert_relative_eq!(pts[i].0, -pts[n - 1 - i].0, epsilon = 1e-12);
                assert!(pts[i].1 > 0.0);
            }
            let total: f64 = pts.iter().map(|p| p.1).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
        assert!(GaussHermite::<f64>::new(0).is_err());
        assert!(GaussHermite::<f64>::new(MAX_NODES + 1).is_err());
    }

    #[test]
    fn zero_variance_is_point_evaluation() {
        let rule = GaussHermite::<f64>::new(8).unwrap();
        assert_eq!(rule.expect(0.7, 0.0, |s| s * 3.0), 0.7 * 3.0);
    }
}
