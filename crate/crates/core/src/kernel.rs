//! Triangular kernel and its two-sided, bandwidth-scaled forms.

use crate::error::{Error, Result};

/// One-sided triangular kernel `(1 - u) 1{0 <= u <= 1}`.
#[inline]
pub fn triangular_kernel(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        1.0 - u
    } else {
        0.0
    }
}

/// Symmetric kernel `K(u) = k(|u|)`, supported on `[-1, 1]`.
#[inline]
pub fn two_sided_kernel(u: f64) -> f64 {
    triangular_kernel(u.abs())
}

/// `K(u / h) / h`.
pub fn scaled_kernel(u: f64, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    Ok(two_sided_kernel(u / h) / h)
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveBandwidth(h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triangular_values() {
        assert_eq!(triangular_kernel(0.0), 1.0);
        assert_eq!(triangular_kernel(0.5), 0.5);
        assert_eq!(triangular_kernel(1.2), 0.0);
        assert_eq!(triangular_kernel(-0.1), 0.0);
    }

    #[test]
    fn two_sided_values() {
        assert_eq!(two_sided_kernel(-0.5), 0.5);
        assert_eq!(two_sided_kernel(0.0), 1.0);
        assert_eq!(two_sided_kernel(-1.0), 0.0);
    }

    #[test]
    fn scaled_values() {
        assert_eq!(scaled_kernel(1.0, 2.0).unwrap(), 0.25);
        assert_eq!(scaled_kernel(0.0, 0.5).unwrap(), 2.0);
        assert_eq!(scaled_kernel(3.0, 1.0).unwrap(), 0.0);
        assert_eq!(scaled_kernel(0.0, 0.0), Err(Error::NonPositiveBandwidth(0.0)));
        assert!(scaled_kernel(0.0, -1.0).is_err());
    }

    #[test]
    fn integrates_to_one() {
        let v = crate::quadrature::integrate(two_sided_kernel, -1.0, 0.0, 1e-12).unwrap()
            + crate::quadrature::integrate(two_sided_kernel, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(u in -3.0f64..3.0) {
            prop_assert_eq!(two_sided_kernel(u), two_sided_kernel(-u));
            let k = triangular_kernel(u);
            prop_assert!((0.0..=1.0).contains(&k));
        }
    }
}
