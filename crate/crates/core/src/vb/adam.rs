use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Bias-corrected Adam moments for one parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub first_moment: Vec<T>,
    pub second_moment: Vec<T>,
    pub step_count: u64,
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            first_moment: vec![T::zero(); len],
            second_moment: vec![T::zero(); len],
            step_count: 0,
            learning_rate: T::lit(learning_rate),
            beta1: T::lit(beta1),
            beta2: T::lit(beta2),
            epsilon: T::lit(epsilon),
        }
    }
}

/// One Adam step along the ascent direction `grad` (the objective is
/// maximized, so the parameter moves with the gradient).
pub fn adam_step<T: Real>(param: &mut [T], grad: &[T], state: &mut AdamState<T>) {
    debug_assert_eq!(param.len(), grad.len());
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for (((p, &g), m), v) in param
        .iter_mut()
        .zip(grad)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p += state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = AdamState::<f64>::new(3, 0.05, 0.9, 0.999, 1e-8);
        let mut p = [1.0, -2.0, 0.0];
        adam_step(&mut p, &[3.0, -0.5, 0.0], &mut s);
        assert_relative_eq!(p[0], 1.05, epsilon = 1e-9);
        assert_relative_eq!(p[1], -2.05, epsilon = 1e-9);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = AdamState::<f64>::new(2, 0.1, 0.9, 0.999, 1e-8);
        let mut p = [0.3, 0.4];
        for _ in 0..50 {
            adam_step(&mut p, &[0.0, 0.0], &mut s);
        }
        assert_eq!(p, [0.3, 0.4]);
    }

    #[test]
    fn climbs_a_concave_bowl() {
        // maximize −(x−2)² − 3(y+1)²
        let mut s = AdamState::<f64>::new(2, 0.05, 0.9, 0.999, 1e-8);
        let mut p = [0.0, 0.0];
        let f = |p: &[f64; 2]| -(p[0] - 2.0).powi(2) - 3.0 * (p[1] + 1.0).powi(2);
        let start = f(&p);
        let mut values = Vec::new();
        for _ in 0..400 {
            let g = [-2.0 * (p[0] - 2.0), -6.0 * (p[1] + 1.0)];
            adam_step(&mut p, &g, &mut s);
            values.push(f(&p));
        }
        assert!(values[99] > start);
        assert!(*values.last().unwrap() > -1e-3);
    }
}
