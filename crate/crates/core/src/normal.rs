//! Standard normal distribution: CDF, two-sided tail and quantile.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)`, accurate in both tails.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `2 (1 - Φ(|t|))`, computed without cancellation.
pub fn two_sided_p_value(t: f64) -> f64 {
    libm::erfc(t.abs() * FRAC_1_SQRT_2).min(1.0)
}

// Acklam's rational approximation, relative error below 1.15e-9.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549671010229528e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`.
///
/// Rational starting value refined by one Halley step on the erfc-based
/// CDF, giving absolute error well under 1e-9.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    // Work in the lower half and reflect so Φ⁻¹(1-p) = -Φ⁻¹(p) holds exactly.
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = cdf(x) - p;
    let u = e / pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_and_symmetry() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        // powers of two keep 1 - p exact
        for &p in &[2f64.powi(-40), 2f64.powi(-17), 0.015625, 0.25, 0.375, 0.4999] {
            let lo = normal_quantile(p).unwrap();
            let hi = normal_quantile(1.0 - p).unwrap();
            assert!((lo + hi).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(p).is_err());
        }
    }

    #[test]
    fn p_value_tails() {
        assert_eq!(two_sided_p_value(0.0), 1.0);
        assert!(two_sided_p_value(10.0) < 1e-15);
        assert!((two_sided_p_value(1.959963984540054) - 0.05).abs() < 1e-12);
    }
}
