//! Certificates for the local smoothness and boundedness conditions.
//!
//! On `(−κ, κ)` the conditions are: (i) the running-variable density lies in
//! `[L, U]`; (ii) both conditional fourth moments are at most `U`; (iii) the
//! first three derivatives of both conditional means are bounded by `U`;
//! (iv) both conditional variances lie in `[L, U]`.
//!
//! Every quantity is bounded exactly on each grid cell: quadratics and the
//! Gaussian density through their stationary points, the cubic means
//! through the roots of their derivative. The fourth moment of a Gaussian,
//! `μ⁴ + 6μ²σ² + 3σ⁴`, is increasing in `|μ|` and `σ²`, so plugging in the
//! cell maxima bounds it from above. The result is a proof on the whole
//! window, not a sampled estimate.

use std::fmt;

use super::{ConditionalLaw, Cubic, Density, Dgp, Law, SplicedDgp};
use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clause {
    /// Density bounds.
    Density,
    /// Conditional fourth moments.
    FourthMoment,
    /// Derivatives of the conditional means (and their continuity).
    MeanDerivatives,
    /// Conditional variance bounds.
    Variance,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::Density => "(i) density",
            Clause::FourthMoment => "(ii) fourth moment",
            Clause::MeanDerivatives => "(iii) mean derivatives",
            Clause::Variance => "(iv) variance",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub clause: Clause,
    pub z: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClauseBound {
    pub clause: Clause,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCertificate {
    pub holds: bool,
    pub kappa_used: f64,
    pub l: f64,
    pub u: f64,
    /// Per-clause bounds, in clause order.
    pub clause_bounds: Vec<ClauseBound>,
    pub violations: Vec<Violation>,
}

impl AssumptionCertificate {
    pub fn bound(&self, clause: Clause) -> Option<&ClauseBound> {
        self.clause_bounds.iter().find(|b| b.clause == clause)
    }
}

#[derive(Debug, Clone, Copy)]
struct Extremes {
    min: f64,
    argmin: f64,
    max: f64,
    argmax: f64,
}

impl Extremes {
    fn empty() -> Self {
        Extremes {
            min: f64::INFINITY,
            argmin: f64::NAN,
            max: f64::NEG_INFINITY,
            argmax: f64::NAN,
        }
    }

    fn absorb(&mut self, min: f64, argmin: f64, max: f64, argmax: f64) {
        if min < self.min || min.is_nan() {
            self.min = min;
            self.argmin = argmin;
        }
        if max > self.max || max.is_nan() {
            self.max = max;
            self.argmax = argmax;
        }
    }

    fn abs_max(&self) -> (f64, f64) {
        if self.max.abs() >= self.min.abs() {
            (self.max.abs(), self.argmax)
        } else {
            (self.min.abs(), self.argmin)
        }
    }
}

fn density_extremes(d: &Density, lo: f64, hi: f64) -> (f64, f64, f64, f64) {
    match *d {
        Density::Uniform { .. } => {
            let f = d.pdf(lo);
            (f, lo, f, lo)
        }
        Density::TruncatedGaussian { mean, .. } => {
            // unimodal: maximum at the clamped mode, minimum at an end
            let peak = mean.clamp(lo, hi);
            let (fl, fh) = (d.pdf(lo), d.pdf(hi));
            let (min, argmin) = if fl <= fh { (fl, lo) } else { (fh, hi) };
            (min, argmin, d.pdf(peak), peak)
        }
    }
}

/// Exact extremes of a cubic on `[lo, hi]`.
fn cubic_extremes(c: &Cubic, lo: f64, hi: f64) -> (f64, f64, f64, f64) {
    let s = c.slope().0;
    let mut pts = vec![lo, hi];
    if s[2] != 0.0 {
        let disc = s[1] * s[1] - 4.0 * s[2] * s[0];
        if disc >= 0.0 {
            let r = disc.sqrt();
            pts.push((-s[1] + r) / (2.0 * s[2]));
            pts.push((-s[1] - r) / (2.0 * s[2]));
        }
    } else if s[1] != 0.0 {
        pts.push(-s[0] / s[1]);
    }
    let mut e = Extremes::empty();
    for z in pts.into_iter().filter(|z| *z >= lo && *z <= hi) {
        let f = c.eval(z);
        e.absorb(f, z, f, z);
    }
    (e.min, e.argmin, e.max, e.argmax)
}

fn linear_extremes(c0: f64, c1: f64, lo: f64, hi: f64) -> (f64, f64, f64, f64) {
    let (fl, fh) = (c0 + c1 * lo, c0 + c1 * hi);
    if fl <= fh {
        (fl, lo, fh, hi)
    } else {
        (fh, hi, fl, lo)
    }
}

#[derive(Debug)]
struct Scan {
    density: Extremes,
    variance: Extremes,
    fourth: Extremes,
    derivs: Extremes,
}

impl Scan {
    fn new() -> Self {
        Scan {
            density: Extremes::empty(),
            variance: Extremes::empty(),
            fourth: Extremes::empty(),
            derivs: Extremes::empty(),
        }
    }

    fn cell(&mut self, dgp: &Dgp, lo: f64, hi: f64) {
        let (a, b, c, d) = density_extremes(&dgp.density, lo, hi);
        self.density.absorb(a, b, c, d);
        for (mu, var) in [(&dgp.mu_minus, &dgp.var_minus), (&dgp.mu_plus, &dgp.var_plus)] {
            let (vmin, vmin_at, vmax, vmax_at) = var.extrema(lo, hi);
            self.variance.absorb(vmin, vmin_at, vmax, vmax_at);

            let mut m = Extremes::empty();
            let (a, b, c, d) = cubic_extremes(mu, lo, hi);
            m.absorb(a, b, c, d);
            let (mabs, mabs_at) = m.abs_max();
            let s2 = vmax.max(0.0);
            let m4 = mabs.powi(4) + 6.0 * mabs * mabs * s2 + 3.0 * s2 * s2;
            self.fourth.absorb(0.0, lo, m4, mabs_at);

            let d1 = mu.slope();
            let c = &mu.0;
            let mut dv = Extremes::empty();
            let (a, b, c1, d) = d1.extrema(lo, hi);
            dv.absorb(a, b, c1, d);
            let (mx, at) = dv.abs_max();
            self.derivs.absorb(0.0, lo, mx, at);
            let (a, b, c2, d) = linear_extremes(2.0 * c[2], 6.0 * c[3], lo, hi);
            let mut dv = Extremes::empty();
            dv.absorb(a, b, c2, d);
            let (mx, at) = dv.abs_max();
            self.derivs.absorb(0.0, lo, mx, at);
            self.derivs.absorb(0.0, lo, (6.0 * c[3]).abs(), lo);
        }
    }
}

fn cells(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = (f64, f64)> {
    let width = (hi - lo) / count as f64;
    (0..count).map(move |i| {
        let a = lo + width * i as f64;
        let b = if i + 1 == count { hi } else { lo + width * (i + 1) as f64 };
        (a, b)
    })
}

fn check_radius(density: &Density, kappa: f64, grid: usize) -> Result<()> {
    let max = density.inner_radius();
    if !(kappa > 0.0 && kappa <= max) {
        return Err(Error::KappaOutOfSupport { kappa, max });
    }
    if grid == 0 {
        return Err(Error::InvalidCount(grid));
    }
    Ok(())
}

fn finish(scan: Scan, kappa: f64, mut violations: Vec<Violation>) -> AssumptionCertificate {
    let Scan { density, variance, fourth, derivs } = scan;
    if !(density.min > 0.0) {
        violations.push(Violation { clause: Clause::Density, z: density.argmin, value: density.min });
    }
    if !(variance.min > 0.0) {
        violations.push(Violation { clause: Clause::Variance, z: variance.argmin, value: variance.min });
    }
    if !fourth.max.is_finite() {
        violations.push(Violation { clause: Clause::FourthMoment, z: fourth.argmax, value: fourth.max });
    }
    if !derivs.max.is_finite() {
        violations.push(Violation { clause: Clause::MeanDerivatives, z: derivs.argmax, value: derivs.max });
    }
    let l = density.min.min(variance.min);
    let u = density.max.max(variance.max).max(fourth.max).max(derivs.max);
    AssumptionCertificate {
        holds: violations.is_empty(),
        kappa_used: kappa,
        l,
        u,
        clause_bounds: vec![
            ClauseBound { clause: Clause::Density, lower: density.min, upper: density.max },
            ClauseBound { clause: Clause::FourthMoment, lower: 0.0, upper: fourth.max },
            ClauseBound { clause: Clause::MeanDerivatives, lower: 0.0, upper: derivs.max },
            ClauseBound { clause: Clause::Variance, lower: variance.min, upper: variance.max },
        ],
        violations,
    }
}

fn check_plain(dgp: &Dgp, kappa: f64, grid: usize) -> Result<AssumptionCertificate> {
    check_radius(&dgp.density, kappa, grid)?;
    let mut scan = Scan::new();
    for (lo, hi) in cells(-kappa, kappa, grid) {
        scan.cell(dgp, lo, hi);
    }
    Ok(finish(scan, kappa, Vec::new()))
}

/// Continuity of means (with three derivatives) and variances where the
/// window edge meets the outer law.
fn seam_violations(s: &SplicedDgp, z: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let pairs = [
        (&s.inner.mu_minus, &s.outer.mu_minus, &s.inner.var_minus, &s.outer.var_minus),
        (&s.inner.mu_plus, &s.outer.mu_plus, &s.inner.var_plus, &s.outer.var_plus),
    ];
    for (mi, mo, vi, vo) in pairs {
        if let Some(v) = (0..=3).find(|&v| mi.derivative(v, z) != mo.derivative(v, z)) {
            out.push(Violation {
                clause: Clause::MeanDerivatives,
                z,
                value: mo.derivative(v, z) - mi.derivative(v, z),
            });
        }
        if vi.eval(z) != vo.eval(z) {
            out.push(Violation { clause: Clause::Variance, z, value: vo.eval(z) - vi.eval(z) });
        }
    }
    out
}

fn check_spliced(s: &SplicedDgp, kappa: f64, grid: usize) -> Result<AssumptionCertificate> {
    let e = s.epsilon_tilde;
    if kappa <= e {
        let mut cert = check_plain(&s.inner, kappa, grid)?;
        cert.kappa_used = kappa;
        return Ok(cert);
    }
    check_radius(s.density(), kappa, grid)?;
    let mut scan = Scan::new();
    let inner_cells = ((grid as f64 * e / kappa).ceil() as usize).max(1);
    let outer_cells = ((grid - inner_cells.min(grid)) / 2).max(1);
    for (lo, hi) in cells(-e, e, inner_cells) {
        scan.cell(&s.inner, lo, hi);
    }
    for (lo, hi) in cells(-kappa, -e, outer_cells).chain(cells(e, kappa, outer_cells)) {
        scan.cell(&s.outer, lo, hi);
    }
    let mut seams = seam_violations(s, -e);
    seams.extend(seam_violations(s, e));
    Ok(finish(scan, kappa, seams))
}

/// Certifies the local conditions on `(−kappa, kappa)` using `grid` cells.
pub fn check_assumption1(law: &Law, kappa: f64, grid: usize) -> Result<AssumptionCertificate> {
    match law {
        Law::Plain(d) => check_plain(d, kappa, grid),
        Law::Spliced(s) => check_spliced(s, kappa, grid),
    }
}

/// True iff the conditions hold on `(−kappa_tilde, kappa_tilde)` with
/// constants inside the fixed bounds `[l_tilde, u_tilde]`.
pub fn check_assumption2(law: &Law, kappa_tilde: f64, l_tilde: f64, u_tilde: f64) -> Result<bool> {
    if !(l_tilde > 0.0 && u_tilde > 0.0) {
        return Err(Error::InvalidDgp(format!(
            "uniform constants must be positive, got L = {l_tilde}, U = {u_tilde}"
        )));
    }
    let cert = check_assumption1(law, kappa_tilde, DEFAULT_GRID)?;
    Ok(cert.holds && cert.l >= l_tilde && cert.u <= u_tilde)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{splice, Quadratic};
    use proptest::prelude::*;

    fn unif() -> Density {
        Density::Uniform { a: -1.0, b: 1.0 }
    }

    fn dgp(m: [f64; 4], p: [f64; 4]) -> Dgp {
        Dgp::homoskedastic(unif(), Cubic(m), Cubic(p), 1.0, 0.5).unwrap()
    }

    /// Every clause evaluated pointwise, for a dense-grid soundness check.
    fn pointwise(dgp: &Dgp, z: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let f = dgp.density.pdf(z);
        let mut lower = vec![f];
        let mut upper = vec![f];
        for (mu, var) in [(&dgp.mu_minus, &dgp.var_minus), (&dgp.mu_plus, &dgp.var_plus)] {
            let m = mu.eval(z);
            let s2 = var.eval(z);
            lower.push(s2);
            upper.push(s2);
            upper.push(m.powi(4) + 6.0 * m * m * s2 + 3.0 * s2 * s2);
            for v in 1..=3 {
                upper.push(mu.derivative(v, z).abs());
            }
        }
        (f, lower, upper)
    }

    #[test]
    fn uniform_density_constant_bounds() {
        let law = Law::Plain(dgp([0.5, -1.0, 0.3, 1.0], [-0.2, 0.7, -1.0, 0.9]));
        let cert = check_assumption1(&law, 0.5, DEFAULT_GRID).unwrap();
        assert!(cert.holds);
        let b = cert.bound(Clause::Density).unwrap();
        assert_eq!((b.lower, b.upper), (0.5, 0.5));
        assert_eq!(cert.l, 0.5);
        assert!(cert.l <= cert.u);
        assert_eq!(cert.kappa_used, 0.5);
    }

    #[test]
    fn vanishing_variance_violates_clause_iv() {
        let d = Dgp {
            var_minus: Quadratic([0.0, 0.0, 1.0]),
            ..dgp([0.0; 4], [0.0; 4])
        };
        let cert = check_assumption1(&Law::Plain(d), 0.5, 4096).unwrap();
        assert!(!cert.holds);
        let v = cert.violations.iter().find(|v| v.clause == Clause::Variance).unwrap();
        assert_eq!(v.z, 0.0);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn derivative_bound_covers_symbolic_derivatives() {
        let d = dgp([0.1, 0.9, -0.8, 1.0], [0.0, -0.6, 0.4, -1.0]);
        let cert = check_assumption1(&Law::Plain(d), 0.5, 64).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=10_000 {
            let z = -0.5 + i as f64 / 10_000.0;
            for mu in [&d.mu_minus, &d.mu_plus] {
                // d/dz (c0 + c1 z + c2 z² + c3 z³) written out by hand
                let c = mu.0;
                worst = worst
                    .max((c[1] + 2.0 * c[2] * z + 3.0 * c[3] * z * z).abs())
                    .max((2.0 * c[2] + 6.0 * c[3] * z).abs())
                    .max((6.0 * c[3]).abs());
            }
        }
        let b = cert.bound(Clause::MeanDerivatives).unwrap();
        assert!(b.upper >= worst - 1e-12);
        assert!(b.upper <= worst + 1e-9, "exact bound expected: {} vs {worst}", b.upper);
        assert!(cert.u >= worst);
    }

    #[test]
    fn radius_must_fit_support() {
        let law = Law::Plain(dgp([0.0; 4], [0.0; 4]));
        assert!(matches!(
            check_assumption1(&law, 1.5, 10),
            Err(Error::KappaOutOfSupport { .. })
        ));
        assert!(check_assumption1(&law, 0.5, 0).is_err());
    }

    #[test]
    fn assumption2_monotone_in_constants() {
        let law = Law::Plain(dgp([0.0, 0.5, 0.0, 0.1], [1.0, 0.2, 0.0, 0.0]));
        let cert = check_assumption1(&law, 0.4, DEFAULT_GRID).unwrap();
        assert!(check_assumption2(&law, 0.4, cert.l * 0.9, cert.u * 1.1).unwrap());
        assert!(!check_assumption2(&law, 0.4, cert.l, cert.u * 0.5).unwrap());
        assert!(!check_assumption2(&law, 0.4, cert.l * 1.5, cert.u * 2.0).unwrap());
        let mut prev = false;
        for k in 0..20 {
            let widen = 1.0 + k as f64 * 0.1;
            let now = check_assumption2(&law, 0.4, cert.l / widen, cert.u * widen).unwrap();
            assert!(!(prev && !now));
            prev = now;
        }
        assert!(check_assumption2(&law, 0.4, 0.0, 1.0).is_err());
    }

    #[test]
    fn spliced_law_inherits_inner_constants() {
        let null = dgp([0.0, 0.3, 0.1, 0.0], [0.0, 0.2, -0.1, 0.0]);
        let alt = dgp([0.5, -0.4, 0.2, 0.9], [2.0, 0.1, 0.0, -0.5]);
        let s = splice(&alt, &null, 0.05).unwrap();
        let radius = null.kappa.min(0.05);
        let cert = check_assumption1(&Law::Spliced(s), radius, 512).unwrap();
        let own = check_assumption1(&Law::Plain(null), radius, 512).unwrap();
        assert!(cert.holds);
        assert_eq!((cert.l, cert.u), (own.l, own.u));
        assert_eq!(cert.kappa_used, s.kappa());
        // over a wider window the seam breaks continuity
        let wide = check_assumption1(&Law::Spliced(s), 0.3, 512).unwrap();
        assert!(!wide.holds);
        assert!(wide.violations.iter().any(|v| v.clause == Clause::MeanDerivatives && v.z.abs() == 0.05));
    }

    #[test]
    fn truncated_gaussian_density_bounds() {
        let d = Dgp {
            density: Density::TruncatedGaussian { mean: 0.1, sd: 0.5, a: -1.0, b: 1.0 },
            ..dgp([0.0; 4], [0.0; 4])
        };
        let cert = check_assumption1(&Law::Plain(d), 0.8, 128).unwrap();
        let b = cert.bound(Clause::Density).unwrap();
        assert!((b.upper - d.density.pdf(0.1)).abs() < 1e-15);
        assert!((b.lower - d.density.pdf(-0.8)).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn certificate_is_sound(m in prop::array::uniform4(-2.0f64..2.0),
                                p in prop::array::uniform4(-2.0f64..2.0),
                                v in prop::array::uniform3(0.0f64..1.0),
                                kappa in 0.05f64..0.9, grid in 4usize..200) {
            let var = Quadratic([0.2 + v[0], v[1] - 0.5, v[2]]);
            let d = Dgp {
                density: Density::TruncatedGaussian { mean: m[0] * 0.2, sd: 0.6, a: -1.0, b: 1.0 },
                mu_minus: Cubic(m),
                mu_plus: Cubic(p),
                var_minus: var,
                var_plus: Quadratic::constant(0.5),
                kappa: 0.5,
            };
            prop_assume!(d.validate().is_ok());
            let cert = check_assumption1(&Law::Plain(d), kappa, grid).unwrap();
            if cert.holds {
                let dense = grid * 10;
                for i in 0..=dense {
                    let z = -kappa + 2.0 * kappa * i as f64 / dense as f64;
                    let (_, lower, upper) = pointwise(&d, z);
                    for x in lower {
                        prop_assert!(x >= cert.l - 1e-12, "{x} < L {}", cert.l);
                    }
                    for x in upper {
                        prop_assert!(x <= cert.u * (1.0 + 1e-12), "{x} > U {}", cert.u);
                    }
                }
            }
        }
    }
}
