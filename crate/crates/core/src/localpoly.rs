//! One-sided local polynomial fits at the cutoff.
//!
//! With regressors `r(u) = (1, u, u²)` evaluated at `u = z/h` and weights
//! `1{side} K_h(z)`, the quadratic fit's intercept is the bias-corrected
//! local linear estimate of the one-sided limit, so a single weighted least
//! squares solve gives both the point estimate and everything its variance
//! needs.

use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, two_sided_kernel};
use crate::linalg::{self, Matrix, Vector, CONDITION_CEILING};
use crate::quadrature;
use crate::sample::{Sample, Side};

/// How residuals entering the plug-in variance are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualRule {
    /// `y_i - μ̂`: the side's intercept estimate, not the fitted polynomial.
    Intercept,
}

/// Residual rule used by [`plugin_variance`] and the fitted variances.
pub const RESIDUAL_RULE: ResidualRule = ResidualRule::Intercept;

/// Absolute tolerance for [`population_moments`].
pub const POPULATION_TOLERANCE: f64 = 1e-10;

/// Weighted design moments of one side of the cutoff.
///
/// `psi_hat` is stored pre-multiplied by `h` so that it is directly
/// comparable with the population limit from [`population_moments`]. It
/// stays zero until residuals are available.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMoments {
    pub gamma: Matrix<3>,
    pub nu: Vector<3>,
    pub psi_hat: Matrix<3>,
    pub h: f64,
    pub side: Side,
    pub n_effective: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalFit {
    /// Estimates of `(μ, μ', μ''/2)` at the cutoff.
    pub beta: Vector<3>,
    pub mu_hat: f64,
    /// Plug-in variance of `mu_hat` conditional on the running variable.
    pub v_hat: f64,
    pub side: Side,
    pub h: f64,
    pub moments: DesignMoments,
}

/// Local linear fit, used only by the conventional baseline test.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLinearFit {
    pub beta: Vector<2>,
    pub mu_hat: f64,
    pub v_hat: f64,
    pub side: Side,
    pub h: f64,
    pub n_effective: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMoments {
    pub gamma: Matrix<3>,
    pub nu: Vector<3>,
    pub psi: Matrix<3>,
    pub h: f64,
    pub side: Side,
}

impl PopulationMoments {
    /// `e'Γ̃⁻¹Ψ̃Γ̃⁻¹e`, the limit of `nh · V`.
    pub fn scaled_variance(&self) -> Result<f64> {
        let inv = checked_inverse(&self.gamma, self.side)?;
        let g = column0(&inv.matrix);
        Ok(linalg::quad_form(&self.psi, &g))
    }

    /// `(nh)⁻¹ e'Γ̃⁻¹Ψ̃Γ̃⁻¹e`.
    pub fn variance(&self, n: usize) -> Result<f64> {
        Ok(self.scaled_variance()? / (n as f64 * self.h))
    }

    pub fn leading_bias(&self, mu3: f64) -> Result<f64> {
        leading_bias(&self.gamma, &self.nu, mu3, self.h)
    }
}

#[inline]
fn regressor<const N: usize>(u: f64) -> Vector<N> {
    let mut r = [1.0; N];
    for j in 1..N {
        r[j] = r[j - 1] * u;
    }
    r
}

fn column0<const N: usize>(m: &Matrix<N>) -> Vector<N> {
    let mut c = [0.0; N];
    for (i, row) in m.iter().enumerate() {
        c[i] = row[0];
    }
    c
}

struct Accumulated<const N: usize> {
    gamma: Matrix<N>,
    /// `(1/n) Σ w r u^N`
    nu: Vector<N>,
    /// `(1/n) Σ w r y`
    cross: Vector<N>,
    n_effective: usize,
}

fn accumulate<const N: usize>(sample: &Sample, h: f64, side: Side) -> Result<Accumulated<N>> {
    check_bandwidth(h)?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut gamma = linalg::zeros::<N>();
    let mut nu = [0.0; N];
    let mut cross = [0.0; N];
    let mut n_effective = 0;
    for o in sample.iter() {
        if !side.contains(o.z) {
            continue;
        }
        let u = o.z / h;
        let w = two_sided_kernel(u) / h;
        if w <= 0.0 {
            continue;
        }
        n_effective += 1;
        let r = regressor::<N>(u);
        let next = r[N - 1] * u;
        linalg::add_outer(&mut gamma, &r, w);
        for j in 0..N {
            nu[j] += w * r[j] * next;
            cross[j] += w * r[j] * o.y;
        }
    }
    let inv_n = 1.0 / sample.len() as f64;
    linalg::scale(&mut gamma, inv_n);
    for j in 0..N {
        nu[j] *= inv_n;
        cross[j] *= inv_n;
    }
    Ok(Accumulated {
        gamma,
        nu,
        cross,
        n_effective,
    })
}

fn checked_inverse<const N: usize>(gamma: &Matrix<N>, side: Side) -> Result<linalg::Inverse<N>> {
    let inv = linalg::invert(gamma).ok_or_else(|| Error::SingularDesign {
        side,
        reason: "zero determinant".into(),
    })?;
    if inv.condition > CONDITION_CEILING {
        return Err(Error::SingularDesign {
            side,
            reason: format!("condition number {:e} exceeds {:e}", inv.condition, CONDITION_CEILING),
        });
    }
    Ok(inv)
}

fn require_support(n_effective: usize, needed: usize, side: Side) -> Result<()> {
    if n_effective < needed {
        return Err(Error::SingularDesign {
            side,
            reason: format!("{n_effective} observations with positive weight, need {needed}"),
        });
    }
    Ok(())
}

/// `h Ψ̂` and the variance `n⁻¹ e'Γ⁻¹Ψ̂Γ⁻¹e`, given the first column of `Γ⁻¹`.
///
/// The variance is summed as `n⁻² Σ w² ε̂² (r'g)²`, which is algebraically the
/// sandwich and nonnegative term by term.
fn sandwich<const N: usize>(
    sample: &Sample,
    h: f64,
    side: Side,
    mu_hat: f64,
    g: &Vector<N>,
) -> (Matrix<N>, f64) {
    let mut psi = linalg::zeros::<N>();
    let mut v = 0.0;
    for o in sample.iter() {
        if !side.contains(o.z) {
            continue;
        }
        let u = o.z / h;
        let w = two_sided_kernel(u) / h;
        if w <= 0.0 {
            continue;
        }
        let resid = match RESIDUAL_RULE {
            ResidualRule::Intercept => o.y - mu_hat,
        };
        let r = regressor::<N>(u);
        let we2 = w * w * resid * resid;
        linalg::add_outer(&mut psi, &r, we2);
        let rg = linalg::dot(&r, g);
        v += we2 * rg * rg;
    }
    let n = sample.len() as f64;
    linalg::scale(&mut psi, h / n);
    (psi, v / (n * n))
}

/// Weighted design moments `Γ` and `ν` of one side; `psi_hat` is left zero.
pub fn design_moments(sample: &Sample, h: f64, side: Side) -> Result<DesignMoments> {
    let acc = accumulate::<3>(sample, h, side)?;
    Ok(DesignMoments {
        gamma: acc.gamma,
        nu: acc.nu,
        psi_hat: linalg::zeros(),
        h,
        side,
        n_effective: acc.n_effective,
    })
}

/// Local quadratic fit on one side, with its plug-in variance.
pub fn local_quadratic_fit(sample: &Sample, h: f64, side: Side) -> Result<LocalFit> {
    let acc = accumulate::<3>(sample, h, side)?;
    require_support(acc.n_effective, 3, side)?;
    let inv = checked_inverse(&acc.gamma, side)?;
    let coef = linalg::mat_vec(&inv.matrix, &acc.cross);
    let beta = [coef[0], coef[1] / h, coef[2] / (h * h)];
    let mu_hat = beta[0];
    let (psi_hat, v_hat) = sandwich(sample, h, side, mu_hat, &column0(&inv.matrix));
    Ok(LocalFit {
        beta,
        mu_hat,
        v_hat,
        side,
        h,
        moments: DesignMoments {
            gamma: acc.gamma,
            nu: acc.nu,
            psi_hat,
            h,
            side,
            n_effective: acc.n_effective,
        },
    })
}

/// Plug-in variance `n⁻¹ e'Γ⁻¹Ψ̂Γ⁻¹e` of a side's intercept, with `Ψ̂`
/// built from squared residuals `y_i - mu_hat`.
pub fn plugin_variance(sample: &Sample, h: f64, side: Side, mu_hat: f64) -> Result<f64> {
    let acc = accumulate::<3>(sample, h, side)?;
    require_support(acc.n_effective, 3, side)?;
    let inv = checked_inverse(&acc.gamma, side)?;
    Ok(sandwich(sample, h, side, mu_hat, &column0(&inv.matrix)).1)
}

/// Local linear fit with the same kernel, weights and residual rule.
pub fn local_linear_fit(sample: &Sample, h: f64, side: Side) -> Result<LocalLinearFit> {
    let acc = accumulate::<2>(sample, h, side)?;
    require_support(acc.n_effective, 2, side)?;
    let inv = checked_inverse(&acc.gamma, side)?;
    let coef = linalg::mat_vec(&inv.matrix, &acc.cross);
    let beta = [coef[0], coef[1] / h];
    let mu_hat = beta[0];
    let (_, v_hat) = sandwich(sample, h, side, mu_hat, &column0(&inv.matrix));
    Ok(LocalLinearFit {
        beta,
        mu_hat,
        v_hat,
        side,
        h,
        n_effective: acc.n_effective,
    })
}

/// Population limits of `Γ`, `ν` and `hΨ` for a running-variable density
/// and conditional variance, by adaptive quadrature in `u = z/h`.
///
/// The plus side integrates over `u ∈ [0, 1]`, the minus side over
/// `u ∈ [-1, 0]`.
pub fn population_moments(
    z_density: impl Fn(f64) -> f64,
    cond_var: impl Fn(f64) -> f64,
    h: f64,
    side: Side,
) -> Result<PopulationMoments> {
    check_bandwidth(h)?;
    let (lo, hi) = match side {
        Side::Plus => (0.0, 1.0),
        Side::Minus => (-1.0, 0.0),
    };
    // Five entries per matrix plus three for ν; split the tolerance.
    let tol = POPULATION_TOLERANCE / 4.0;
    let mut gamma_pow = [0.0; 5];
    let mut psi_pow = [0.0; 5];
    let mut nu_pow = [0.0; 3];
    for (p, slot) in gamma_pow.iter_mut().enumerate() {
        *slot = quadrature::integrate(
            |u| two_sided_kernel(u) * u.powi(p as i32) * z_density(u * h),
            lo,
            hi,
            tol,
        )?;
    }
    for (p, slot) in psi_pow.iter_mut().enumerate() {
        *slot = quadrature::integrate(
            |u| {
                let k = two_sided_kernel(u);
                k * k * u.powi(p as i32) * cond_var(u * h) * z_density(u * h)
            },
            lo,
            hi,
            tol,
        )?;
    }
    for (j, slot) in nu_pow.iter_mut().enumerate() {
        *slot = quadrature::integrate(
            |u| two_sided_kernel(u) * u.powi(j as i32 + 3) * z_density(u * h),
            lo,
            hi,
            tol,
        )?;
    }
    let mut gamma = linalg::zeros::<3>();
    let mut psi = linalg::zeros::<3>();
    for j in 0..3 {
        for k in 0..3 {
            gamma[j][k] = gamma_pow[j + k];
            psi[j][k] = psi_pow[j + k];
        }
    }
    Ok(PopulationMoments {
        gamma,
        nu: nu_pow,
        psi,
        h,
        side,
    })
}

/// Leading conditional bias `h³ e'Γ⁻¹ν μ⁽³⁾ / 6` of the local quadratic
/// intercept.
pub fn leading_bias(gamma: &Matrix<3>, nu: &Vector<3>, mu3: f64, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let inv = checked_inverse(gamma, Side::Plus)?;
    let b = linalg::mat_vec(&inv.matrix, nu)[0];
    Ok(h.powi(3) * b * mu3 / 6.0)
}
