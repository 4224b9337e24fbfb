//! Standard normal tail quantities used by truncated-normal imputation.

use statrs::function::erf::{erfc, erfc_inv};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Above this point the upper tail is replaced by its asymptotic expansion.
pub const MILLS_ASYMPTOTIC_FROM: f64 = 8.0;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `1 - Phi(x)`, accurate far into the upper tail.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

pub fn cdf(x: f64) -> f64 {
    upper_tail(-x)
}

/// `x` with `1 - Phi(x) = q`.
pub fn upper_tail_inv(q: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * q)
}

/// Inverse Mills ratio `pdf(a) / (1 - Phi(a))`: the mean of a standard
/// normal truncated below at `a`.
pub fn inverse_mills(a: f64) -> f64 {
    if a > MILLS_ASYMPTOTIC_FROM {
        a + 1.0 / a
    } else {
        pdf(a) / upper_tail(a)
    }
}

/// Median of a standard normal truncated below at `a`, i.e.
/// `Phi^-1((1 + Phi(a)) / 2)` evaluated through the upper tail.
pub fn truncated_median(a: f64) -> f64 {
    upper_tail_inv(0.5 * upper_tail(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mills_at_zero_and_one() {
        assert_relative_eq!(inverse_mills(0.0), (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(inverse_mills(0.0), 0.7978845608, epsilon = 1e-10);
        // 0.2419707 / 0.1586553
        assert_relative_eq!(inverse_mills(1.0), 1.525135, epsilon = 1e-6);
    }

    #[test]
    fn mills_continuous_at_switch() {
        let below = pdf(8.0) / upper_tail(8.0);
        let above = inverse_mills(8.0 + 1e-12);
        // next term of the expansion is -2/a^3
        assert!((below - above).abs() < 2.5 / 512.0);
    }

    #[test]
    fn median_values() {
        assert_relative_eq!(truncated_median(0.0), 0.6744897501960817, epsilon = 1e-10);
        assert!(truncated_median(-40.0).abs() < 1e-12);
        assert_relative_eq!(cdf(truncated_median(1.3)), (1.0 + cdf(1.3)) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn mean_exceeds_median_exceeds_cut() {
        let mut a = -6.0;
        while a <= 6.0 {
            let median = truncated_median(a);
            assert!(inverse_mills(a) > median, "a = {a}");
            assert!(median > a, "a = {a}");
            a += 0.01;
        }
    }
}
