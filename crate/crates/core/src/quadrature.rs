//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Maximum bisection depth. Kinks and jumps refine along a single branch,
/// so the cost of a deep branch is linear in its depth.
pub const MAX_DEPTH: u32 = 50;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Fails with [`Error::QuadratureFailure`] if some branch is still above its
/// share of the tolerance at [`MAX_DEPTH`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut ok = true;
    let v = step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut ok);
    if ok && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure { a, b, tolerance: tol })
    }
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    ok: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Roundoff floor: once the estimate is stable to a few ulps there is
    // nothing left to gain from bisecting.
    let floor = 8.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol || delta.abs() <= floor {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *ok = false;
        return left + right + delta / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok)
        + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_cubics() {
        let v = integrate(|x| 1.0 + x + x * x + x * x * x, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1.0 + 0.5 + 1.0 / 3.0 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrand() {
        let v = integrate(f64::exp, 0.0, 2.0, 1e-11).unwrap();
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn reversed_and_empty_interval() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-10).unwrap(), 0.0);
        let v = integrate(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn reports_failure() {
        // 1/sqrt(x) has an integrable singularity Simpson cannot resolve at
        // 1e-14 within the depth cap.
        let r = integrate(|x: f64| if x > 0.0 { 1.0 / x.sqrt() } else { 1e300 }, 0.0, 1.0, 1e-14);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
