//! Special functions: digamma, the standard normal CDF in log space and
//! the derivatives of `log Φ`.

use crate::scalar::Real;

/// Below this point `log Φ` and its derivative go through the Mills-ratio
/// continued fraction instead of `erfc`.
const LOWER_TAIL: f64 = -8.0;

/// Digamma function ψ(x) for x > 0.
pub fn digamma<T: Real>(x: T) -> T {
    if x.is_nan() || x <= T::zero() {
        return T::nan();
    }
    let mut x = x;
    let mut acc = T::zero();
    let ten = T::lit(10.0);
    while x < ten {
        acc -= x.recip();
        x += T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    // Bernoulli tail: 1/12, 1/120, 1/252, 1/240, 1/132, 691/32760, 1/12
    let series = inv2
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 120.0)
                    - inv2
                        * (T::lit(1.0 / 252.0)
                            - inv2
                                * (T::lit(1.0 / 240.0)
                                    - inv2
                                        * (T::lit(1.0 / 132.0)
                                            - inv2
                                                * (T::lit(691.0 / 32760.0)
                                                    - inv2 * T::lit(1.0 / 12.0)))))));
    acc + x.ln() - T::lit(0.5) * inv - series
}

/// `ln B(a, b)`.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    a.ln_gamma() + b.ln_gamma() - (a + b).ln_gamma()
}

/// Log of the standard normal density.
#[inline]
pub fn log_norm_pdf<T: Real>(x: T) -> T {
    -T::lit(0.5) * x * x - T::lit(0.5) * (T::TAU()).ln()
}

/// Standard normal CDF Φ(x).
pub fn norm_cdf<T: Real>(x: T) -> T {
    T::lit(0.5) * (-x * T::FRAC_1_SQRT_2()).erfc()
}

/// Mills ratio R(t) = (1 - Φ(t)) / φ(t) by Lentz's continued fraction,
/// accurate for t ≥ 4.
fn mills_ratio<T: Real>(t: T) -> T {
    // R(t) = 1/(t + 1/(t + 2/(t + 3/(t + ...))))
    let tiny = T::lit(1e-300).max(T::min_positive_value());
    let eps = T::epsilon();
    let mut f = t;
    let mut c = t;
    let mut d = T::zero();
    for n in 1..500 {
        let a = T::from_usize(n).unwrap();
        d = t + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = t + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f *= delta;
        if (delta - T::one()).abs() < eps {
            break;
        }
    }
    f.recip()
}

/// `log Φ(x)`, finite for every finite x.
pub fn log_norm_cdf<T: Real>(x: T) -> T {
    if x < T::lit(LOWER_TAIL) {
        log_norm_pdf(x) + mills_ratio(-x).ln()
    } else if x > T::zero() {
        (-norm_cdf(-x)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

/// `d/dx log Φ(x) = φ(x)/Φ(x)`.
pub fn d_log_norm_cdf<T: Real>(x: T) -> T {
    if x < T::lit(LOWER_TAIL) {
        mills_ratio(-x).recip()
    } else {
        (log_norm_pdf(x) - log_norm_cdf(x)).exp()
    }
}

/// First and second derivatives of `log Φ` at x.
#[inline]
pub fn log_norm_cdf_derivs<T: Real>(x: T) -> (T, T) {
    let d1 = d_log_norm_cdf(x);
    (d1, -d1 * (x + d1))
}

/// `log Φ(x)` with its first two derivatives, sharing one CDF evaluation.
#[inline]
pub fn log_norm_cdf_all<T: Real>(x: T) -> (T, T, T) {
    let (h, d1) = if x < T::lit(LOWER_TAIL) {
        let r = mills_ratio(-x);
        (log_norm_pdf(x) + r.ln(), r.recip())
    } else {
        let h = log_norm_cdf(x);
        (h, (log_norm_pdf(x) - h).exp())
    };
    (h, d1, -d1 * (x + d1))
}

/// Numerically stable `log Σ exp(v_i)`. Returns -∞ for an empty or all -∞ slice.
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

/// Normalizes log-weights in place into a probability vector.
pub fn softmax_in_place<T: Real>(values: &mut [T]) {
    let lse = log_sum_exp(values);
    for v in values.iter_mut() {
        *v = (*v - lse).exp();
    }
}

/// `x log x` with the convention `0 log 0 = 0`.
#[inline]
pub fn xlogx<T: Real>(x: T) -> T {
    if x > T::zero() {
        x * x.ln()
    } else {
        T::zero()
    }
}

/// `n log p` with `0 · log 0 = 0` and `n > 0, p = 0` giving -∞.
#[inline]
pub fn xlogy<T: Real>(n: T, p: T) -> T {
    if n == T::zero() {
        T::zero()
    } else {
        n * p.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn digamma_reference_values() {
        // ψ(1) = -γ, ψ(1/2) = -γ - 2 ln 2, ψ(x+1) = ψ(x) + 1/x
        let euler = 0.577_215_664_901_532_9_f64;
        assert_relative_eq!(digamma(1.0), -euler, epsilon = 1e-14);
        assert_relative_eq!(digamma(0.5), -euler - 2.0 * 2f64.ln(), epsilon = 1e-14);
        for &x in &[1e-6, 0.3, 2.5, 17.0, 1e6] {
            assert_relative_eq!(digamma(x + 1.0) - digamma(x), 1.0 / x, max_relative = 1e-12, epsilon = 1e-13);
        }
        assert!(digamma(0.0f64).is_nan());
    }

    #[test]
    fn log_cdf_branches_are_continuous() {
        for &x in &[LOWER_TAIL, 0.0] {
            let lo = log_norm_cdf(x - 1e-9);
            let hi = log_norm_cdf(x + 1e-9);
            assert_relative_eq!(lo, hi, max_relative = 1e-7);
            let lo = d_log_norm_cdf(x - 1e-9);
            let hi = d_log_norm_cdf(x + 1e-9);
            assert_relative_eq!(lo, hi, max_relative = 1e-8);
        }
    }

    #[test]
    fn log_cdf_reference_values() {
        assert_relative_eq!(log_norm_cdf(0.0), 0.5f64.ln(), epsilon = 1e-15);
        // Φ(-10) = 7.619853024160527e-24
        assert_relative_eq!(log_norm_cdf(-10.0), 7.619_853_024_160_527e-24f64.ln(), max_relative = 1e-13);
        // Φ(-3) = 1.3498980316300946e-3
        assert_relative_eq!(log_norm_cdf(-3.0), 1.349_898_031_630_094_6e-3f64.ln(), max_relative = 1e-13);
        assert!(log_norm_cdf(-40.0f64).is_finite());
        assert!(log_norm_cdf(38.0f64) <= 0.0);
        // the asymptotic derivative approaches -x
        assert_relative_eq!(d_log_norm_cdf(-30.0), 30.0, max_relative = 2e-3);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &x in &[-12.0, -8.5, -3.0, 0.0, 2.0, 6.0] {
            let h = 1e-5;
            let fd = (log_norm_cdf(x + h) - log_norm_cdf(x - h)) / (2.0 * h);
            let (d1, d2) = log_norm_cdf_derivs(x);
            assert_relative_eq!(d1, fd, max_relative = 1e-7, epsilon = 1e-12);
            let fd2 = (d_log_norm_cdf(x + h) - d_log_norm_cdf(x - h)) / (2.0 * h);
            assert_relative_eq!(d2, fd2, max_relative = 1e-6, epsilon = 1e-10);
            assert_eq!(log_norm_cdf_all(x), (log_norm_cdf(x), d1, d2));
        }
    }

    #[test]
    fn softmax_handles_neg_infinity() {
        let mut v = [0.0, f64::NEG_INFINITY, 0.0];
        softmax_in_place(&mut v);
        assert_eq!(v, [0.5, 0.0, 0.5]);
        assert_eq!(xlogx(0.0f64), 0.0);
        assert_eq!(xlogy(0.0f64, 0.0), 0.0);
        assert_eq!(xlogy(1.0f64, 0.0), f64::NEG_INFINITY);
    }
}
