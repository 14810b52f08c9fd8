//! Splicing one DGP into a window around the cutoff of another, and the
//! total-variation distance this creates.
//!
//! Total variation here is `sup_{|g| <= 1} |∫g dP − ∫g dQ|`, i.e. the full
//! L1 distance between densities, which is twice the more common half-L1
//! convention. Under it, replacing a law on a set of probability `ε` moves
//! it by at most `2ε`.

use std::f64::consts::SQRT_2;

use super::{ConditionalLaw, Density, Dgp};
use crate::error::{Error, Result};
use crate::normal;
use crate::quadrature;

const TV_TOLERANCE: f64 = 1e-13;

/// `outer` everywhere except `|z| < epsilon_tilde`, where `inner` takes over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplicedDgp {
    pub outer: Dgp,
    pub inner: Dgp,
    pub epsilon_tilde: f64,
    /// `P(|Z| < epsilon_tilde)`.
    pub epsilon_mass: f64,
}

impl SplicedDgp {
    /// Radius on which the spliced law inherits the inner law's constants.
    pub fn kappa(&self) -> f64 {
        self.inner.kappa.min(self.epsilon_tilde)
    }

    pub fn in_window(&self, z: f64) -> bool {
        z.abs() < self.epsilon_tilde
    }

    pub fn with_offset(&self, offset: f64) -> Self {
        SplicedDgp {
            outer: self.outer.with_offset(offset),
            inner: self.inner.with_offset(offset),
            ..*self
        }
    }
}

impl ConditionalLaw for SplicedDgp {
    fn density(&self) -> &Density {
        &self.outer.density
    }

    fn potential(&self, z: f64) -> [(f64, f64); 2] {
        if self.in_window(z) {
            self.inner.potential(z)
        } else {
            self.outer.potential(z)
        }
    }

    /// The window always contains the cutoff, so this is the inner `theta`.
    fn theta(&self) -> f64 {
        self.inner.theta()
    }
}

pub fn splice(outer: &Dgp, inner: &Dgp, epsilon_tilde: f64) -> Result<SplicedDgp> {
    outer.validate()?;
    inner.validate()?;
    if !outer.density.same_as(&inner.density) {
        return Err(Error::DensityMismatch);
    }
    if !(epsilon_tilde > 0.0) || epsilon_tilde.is_nan() {
        return Err(Error::InvalidDgp(format!(
            "splice radius must be positive, got {epsilon_tilde}"
        )));
    }
    Ok(SplicedDgp {
        outer: *outer,
        inner: *inner,
        epsilon_tilde,
        epsilon_mass: outer.density.mass_within(epsilon_tilde),
    })
}

/// Smallest `r` with `P(|Z| < r) = mass`.
pub fn epsilon_tilde_from_mass(dgp: &Dgp, mass: f64) -> Result<f64> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::InvalidProbability(mass));
    }
    let d = &dgp.density;
    match *d {
        Density::Uniform { a, b } => {
            let width = b - a;
            let near = d.inner_radius();
            if mass <= 2.0 * near / width {
                Ok(mass * width / 2.0)
            } else {
                Ok(mass * width - near)
            }
        }
        Density::TruncatedGaussian { .. } => {
            let (mut lo, mut hi) = (0.0, d.outer_radius());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if d.mass_within(mid) < mass {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// `∫ |φ(y; m1, v1) − φ(y; m2, v2)| dy` for two Gaussians (variances may be 0).
pub fn gaussian_l1_distance(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    let (s1, s2) = (v1.max(0.0).sqrt(), v2.max(0.0).sqrt());
    if s1 == 0.0 || s2 == 0.0 {
        // a point mass against anything else is mutually singular
        return if s1 == s2 && m1 == m2 { 0.0 } else { 2.0 };
    }
    let rel = (s1 - s2).abs() / s1.max(s2);
    if rel < 1e-12 {
        let s = 0.5 * (s1 + s2);
        return 2.0 * libm::erf((m1 - m2).abs() / (2.0 * SQRT_2 * s));
    }
    // Order so that the first density is the narrower; it dominates between
    // the two crossing points x1 < x2.
    let (m1, s1, m2, s2) = if s1 < s2 { (m1, s1, m2, s2) } else { (m2, s2, m1, s1) };
    let (v1, v2) = (s1 * s1, s2 * s2);
    let qa = v2 - v1;
    let qb = -2.0 * (v2 * m1 - v1 * m2);
    let qc = v2 * m1 * m1 - v1 * m2 * m2 - 2.0 * v1 * v2 * (s2 / s1).ln();
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
    let q = -0.5 * (qb + qb.signum() * disc);
    let (mut x1, mut x2) = if q != 0.0 { (q / qa, qc / q) } else { (0.0, 0.0) };
    if x1 > x2 {
        std::mem::swap(&mut x1, &mut x2);
    }
    let p1 = normal::cdf((x2 - m1) / s1) - normal::cdf((x1 - m1) / s1);
    let p2 = normal::cdf((x2 - m2) / s2) - normal::cdf((x1 - m2) / s2);
    (2.0 * (p1 - p2)).clamp(0.0, 2.0)
}

/// `τ(P, P_k) = ∫_{|z| < ε̃} f(z) ‖P(·|z) − P_k(·|z)‖₁ dz` between the
/// observed laws of `base` and its splice.
pub fn total_variation(base: &Dgp, spliced: &SplicedDgp) -> Result<f64> {
    if !base.density.same_as(&spliced.outer.density) {
        return Err(Error::DensityMismatch);
    }
    if base != &spliced.outer {
        return Err(Error::InvalidDgp("base must be the outer DGP of the splice".into()));
    }
    let d = &base.density;
    let (a, b) = d.support();
    let e = spliced.epsilon_tilde;
    // Integrate each side against its own potential outcome so the
    // switch at the cutoff never lands inside a panel.
    let integrand = |z: f64, arm: usize| {
        let (m1, v1) = base.potential(z)[arm];
        let (m2, v2) = spliced.inner.potential(z)[arm];
        d.pdf(z) * gaussian_l1_distance(m1, v1, m2, v2)
    };
    let left = quadrature::integrate(|z| integrand(z, 0), (-e).max(a), 0.0, TV_TOLERANCE)?;
    let right = quadrature::integrate(|z| integrand(z, 1), 0.0, e.min(b), TV_TOLERANCE)?;
    Ok(left + right)
}
