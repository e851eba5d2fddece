//! Standard normal tail probability `Q(x) = P(Z > x)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Beyond this point [`log_q_function`] switches to the asymptotic series.
const ASYMPTOTIC_FROM: f64 = 8.0;

/// `Q(x)` for finite or infinite `x`. NaN is rejected.
pub fn q_function(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain {
            name: "tail argument",
            value: x,
            reason: "must not be NaN",
        });
    }
    Ok(q(x))
}

/// `ln Q(x)`, finite well past the point where `Q(x)` underflows.
pub fn log_q_function(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain {
            name: "tail argument",
            value: x,
            reason: "must not be NaN",
        });
    }
    Ok(log_q(x))
}

/// Infallible `Q`; NaN propagates.
#[inline]
pub(crate) fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub(crate) fn log_q(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::NEG_INFINITY
    } else if x < 0.0 {
        (-q(-x)).ln_1p()
    } else if x <= ASYMPTOTIC_FROM {
        q(x).ln()
    } else {
        // Q(x) = φ(x)/x · Σ (-1)^n (2n-1)!! / x^{2n}; truncated at the smallest term.
        let inv_x2 = 1.0 / (x * x);
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for n in 1..200 {
            let next = -term * (2 * n - 1) as f64 * inv_x2;
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                break;
            }
            term = next;
            sum += term;
        }
        -0.5 * x * x - x.ln() - 0.5 * (2.0 * PI).ln() + sum.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `P(0 < Z < x)` by composite Simpson on the normal density.
    fn central_mass(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut acc = pdf(0.0) + pdf(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(i as f64 * h);
        }
        acc * h / 3.0
    }

    /// Upper tail by Simpson on `[x, x + 40]`, usable where `0.5 - central` cancels.
    fn tail_mass(x: f64) -> f64 {
        let n = 200_000;
        let h = 40.0 / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut acc = pdf(x) + pdf(x + 40.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(x + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn centre_and_symmetry() {
        assert_eq!(q_function(0.0).unwrap(), 0.5);
        for &x in &[0.1, 0.7, 1.3, 2.9, 5.5, 7.9] {
            let s = q(x) + q(-x);
            assert!((s - 1.0).abs() < 1e-15, "{x}: {s}");
        }
        assert_eq!(q(f64::INFINITY), 0.0);
        assert_eq!(q(f64::NEG_INFINITY), 1.0);
    }

    #[test]
    fn five_percent_point() {
        let oracle = 0.5 - central_mass(1.6449);
        assert!((q(1.6449) - 0.05).abs() < 1e-4);
        assert!((q(1.6449) - oracle).abs() < 1e-12);
    }

    #[test]
    fn matches_quadrature_over_working_range() {
        let mut x = -8.0;
        while x <= 8.0 {
            let oracle = if x >= 0.0 {
                tail_mass(x)
            } else {
                1.0 - tail_mass(-x)
            };
            assert!((q(x) - oracle).abs() <= 1e-10, "x = {x}");
            if x > 0.0 {
                assert!(((q(x) - oracle) / oracle).abs() < 1e-8, "relative x = {x}");
            }
            x += 0.125;
        }
    }

    #[test]
    fn frozen_high_precision_values() {
        // mpmath, 50 digits
        let cases = [
            (1.0, 0.158_655_253_931_457_05),
            (2.0f64.sqrt(), 0.078_649_603_525_142_565),
            (6.0, 9.865_876_450_376_981_4e-10),
            (10.0, 7.619_853_024_160_526_1e-24),
            (30.0, 4.906_713_927_148_187_1e-198),
        ];
        for (x, want) in cases {
            assert!(((q(x) - want) / want).abs() < 1e-13, "x = {x}: {}", q(x));
        }
    }

    #[test]
    fn log_tail_is_continuous_and_accurate() {
        // ln Q at 40 and 100 (mpmath): far beyond underflow of Q itself
        let cases = [
            (40.0, -804.608_442_013_753_79),
            (100.0, -5_005.524_208_694_205),
        ];
        for (x, want) in cases {
            assert!(
                ((log_q(x) - want) / want).abs() < 1e-14,
                "x = {x}: {}",
                log_q(x)
            );
        }
        let below = q(ASYMPTOTIC_FROM).ln();
        let above = log_q(ASYMPTOTIC_FROM + 1e-12);
        assert!((below - above).abs() < 1e-10);
        for &x in &[-5.0, -1.0, 0.0, 3.0, 12.0, 25.0] {
            assert!(
                (log_q(x) - q(x).ln()).abs() < 1e-12 * (1.0 + q(x).ln().abs()),
                "{x}"
            );
        }
        assert_eq!(log_q(f64::INFINITY), f64::NEG_INFINITY);
    }

    #[test]
    fn nan_is_a_domain_error() {
        assert!(q_function(f64::NAN).is_err());
        assert!(log_q_function(f64::NAN).is_err());
    }

    #[test]
    fn strictly_decreasing_on_grid() {
        let mut prev = q(-8.0);
        let mut x = -8.0 + 1e-3;
        while x < 8.0 {
            let cur = q(x);
            // below about -6 the values sit within an ulp of one
            if x > -6.0 {
                assert!(cur < prev, "{x}");
            } else {
                assert!(cur <= prev, "{x}");
            }
            prev = cur;
            x += 1e-3;
        }
    }
}
