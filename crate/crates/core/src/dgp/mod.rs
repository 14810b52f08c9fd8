//! Parametric data-generating processes for `(Y(0), Y(1), Z)`.
//!
//! The running variable has a uniform or truncated Gaussian density; given
//! `Z = z` the potential outcomes are independent Gaussians with cubic
//! conditional means and quadratic conditional variances. The observed
//! outcome is `Y(1)` when `z >= 0` and `Y(0)` otherwise.

mod assumption;
pub mod catalog;
mod sampler;
mod splice;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

pub use assumption::{
    check_assumption1, check_assumption2, AssumptionCertificate, Clause, ClauseBound, Violation,
    DEFAULT_GRID,
};
pub use sampler::{sample_observed, sample_potential, PotentialOutcome};
pub(crate) use sampler::sample_from;
pub use splice::{
    epsilon_tilde_from_mass, gaussian_l1_distance, splice, total_variation, SplicedDgp,
};

/// Density of the running variable. Supports must straddle zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Density {
    Uniform { a: f64, b: f64 },
    TruncatedGaussian { mean: f64, sd: f64, a: f64, b: f64 },
}

impl Density {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.support();
        if !(a.is_finite() && b.is_finite() && a < 0.0 && b > 0.0) {
            return Err(Error::InvalidDgp(format!(
                "support [{a}, {b}] must be finite and contain a neighbourhood of 0"
            )));
        }
        if let Density::TruncatedGaussian { mean, sd, .. } = *self {
            if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
                return Err(Error::InvalidDgp(format!("bad truncated Gaussian ({mean}, {sd})")));
            }
            if self.normalizer() <= 0.0 {
                return Err(Error::InvalidDgp("truncated Gaussian has no mass on its support".into()));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Density::Uniform { a, b } | Density::TruncatedGaussian { a, b, .. } => (a, b),
        }
    }

    /// Distance from 0 to the nearer support boundary.
    pub fn inner_radius(&self) -> f64 {
        let (a, b) = self.support();
        (-a).min(b)
    }

    /// Distance from 0 to the farther support boundary.
    pub fn outer_radius(&self) -> f64 {
        let (a, b) = self.support();
        (-a).max(b)
    }

    fn normalizer(&self) -> f64 {
        match *self {
            Density::Uniform { a, b } => b - a,
            Density::TruncatedGaussian { mean, sd, a, b } => {
                normal::cdf((b - mean) / sd) - normal::cdf((a - mean) / sd)
            }
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        let (a, b) = self.support();
        if z < a || z > b {
            return 0.0;
        }
        match *self {
            Density::Uniform { a, b } => 1.0 / (b - a),
            Density::TruncatedGaussian { mean, sd, .. } => {
                normal::pdf((z - mean) / sd) / (sd * self.normalizer())
            }
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let (a, b) = self.support();
        if z <= a {
            return 0.0;
        }
        if z >= b {
            return 1.0;
        }
        match *self {
            Density::Uniform { a, b } => (z - a) / (b - a),
            Density::TruncatedGaussian { mean, sd, a, .. } => {
                (normal::cdf((z - mean) / sd) - normal::cdf((a - mean) / sd)) / self.normalizer()
            }
        }
    }

    /// `P(|Z| < r)`.
    pub fn mass_within(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match *self {
            Density::Uniform { a, b } => (r.min(b) + r.min(-a)) / (b - a),
            Density::TruncatedGaussian { .. } => (self.cdf(r) - self.cdf(-r)).clamp(0.0, 1.0),
        }
    }

    /// Inverse CDF, used to draw `z` from a single uniform.
    pub fn quantile(&self, u: f64) -> f64 {
        let (a, b) = self.support();
        let z = match *self {
            Density::Uniform { a, b } => a + (b - a) * u,
            Density::TruncatedGaussian { mean, sd, a, .. } => {
                let p = normal::cdf((a - mean) / sd) + u * self.normalizer();
                match normal::normal_quantile(p) {
                    Ok(x) => mean + sd * x,
                    Err(_) if p <= 0.0 => a,
                    Err(_) => b,
                }
            }
        };
        z.clamp(a, b)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Density::Uniform { a, b } => 0.5 * (a + b),
            Density::TruncatedGaussian { mean, sd, a, b } => {
                let (al, be) = ((a - mean) / sd, (b - mean) / sd);
                mean + sd * (normal::pdf(al) - normal::pdf(be)) / self.normalizer()
            }
        }
    }

    pub fn std_dev(&self) -> f64 {
        match *self {
            Density::Uniform { a, b } => (b - a) / 12f64.sqrt(),
            Density::TruncatedGaussian { mean, sd, a, b } => {
                let (al, be) = ((a - mean) / sd, (b - mean) / sd);
                let z = self.normalizer();
                let (pa, pb) = (normal::pdf(al), normal::pdf(be));
                let ratio = (pa - pb) / z;
                let var = sd * sd * (1.0 + (al * pa - be * pb) / z - ratio * ratio);
                var.max(0.0).sqrt()
            }
        }
    }

    /// Bit-for-bit parameter equality.
    pub fn same_as(&self, other: &Density) -> bool {
        let bits = |d: &Density| match *d {
            Density::Uniform { a, b } => (0u8, [a.to_bits(), b.to_bits(), 0, 0]),
            Density::TruncatedGaussian { mean, sd, a, b } => {
                (1u8, [mean.to_bits(), sd.to_bits(), a.to_bits(), b.to_bits()])
            }
        };
        bits(self) == bits(other)
    }
}

/// `c0 + c1 z + c2 z² + c3 z³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    pub fn eval(&self, z: f64) -> f64 {
        let c = &self.0;
        ((c[3] * z + c[2]) * z + c[1]) * z + c[0]
    }

    /// `v`-th derivative at `z`.
    pub fn derivative(&self, v: usize, z: f64) -> f64 {
        let c = &self.0;
        match v {
            0 => self.eval(z),
            1 => (3.0 * c[3] * z + 2.0 * c[2]) * z + c[1],
            2 => 6.0 * c[3] * z + 2.0 * c[2],
            3 => 6.0 * c[3],
            _ => 0.0,
        }
    }

    /// First derivative as a quadratic.
    pub fn slope(&self) -> Quadratic {
        let c = &self.0;
        Quadratic([c[1], 2.0 * c[2], 3.0 * c[3]])
    }

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        if c.is_empty() || c.len() > 4 {
            return Err(Error::InvalidDgp(format!(
                "mean needs 1 to 4 coefficients, got {}",
                c.len()
            )));
        }
        let mut out = [0.0; 4];
        out[..c.len()].copy_from_slice(c);
        Ok(Cubic(out))
    }
}

/// `c0 + c1 z + c2 z²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadratic(pub [f64; 3]);

impl Quadratic {
    pub fn constant(c: f64) -> Self {
        Quadratic([c, 0.0, 0.0])
    }

    pub fn eval(&self, z: f64) -> f64 {
        let c = &self.0;
        (c[2] * z + c[1]) * z + c[0]
    }

    /// Exact `(min, argmin, max, argmax)` over `[lo, hi]`.
    pub fn extrema(&self, lo: f64, hi: f64) -> (f64, f64, f64, f64) {
        let mut pts = [lo, hi, lo];
        let c = &self.0;
        if c[2] != 0.0 {
            let v = -c[1] / (2.0 * c[2]);
            if v > lo && v < hi {
                pts[2] = v;
            }
        }
        let mut best = (f64::INFINITY, lo, f64::NEG_INFINITY, lo);
        for &z in &pts {
            let f = self.eval(z);
            if f < best.0 {
                best.0 = f;
                best.1 = z;
            }
            if f > best.2 {
                best.2 = f;
                best.3 = z;
            }
        }
        best
    }

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        if c.is_empty() || c.len() > 3 {
            return Err(Error::InvalidDgp(format!(
                "variance needs 1 to 3 coefficients, got {}",
                c.len()
            )));
        }
        let mut out = [0.0; 3];
        out[..c.len()].copy_from_slice(c);
        Ok(Quadratic(out))
    }
}

/// A fully parametric law of `(Y(0), Y(1), Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dgp {
    pub density: Density,
    /// Conditional mean of `Y(0)`.
    pub mu_minus: Cubic,
    /// Conditional mean of `Y(1)`.
    pub mu_plus: Cubic,
    pub var_minus: Quadratic,
    pub var_plus: Quadratic,
    /// Radius of the neighbourhood the assumption constants refer to.
    pub kappa: f64,
}

impl Dgp {
    pub fn new(
        density: Density,
        mu_minus: Cubic,
        mu_plus: Cubic,
        var_minus: Quadratic,
        var_plus: Quadratic,
        kappa: f64,
    ) -> Result<Self> {
        let dgp = Dgp {
            density,
            mu_minus,
            mu_plus,
            var_minus,
            var_plus,
            kappa,
        };
        dgp.validate()?;
        Ok(dgp)
    }

    /// Finite parameters, a valid density, `kappa > 0`, and conditional
    /// variances nonnegative on the whole support (so sampling is defined).
    /// Strict positivity near the cutoff is left to the assumption checker.
    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        let finite = self
            .mu_minus
            .0
            .iter()
            .chain(&self.mu_plus.0)
            .chain(&self.var_minus.0)
            .chain(&self.var_plus.0)
            .all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidDgp("non-finite coefficient".into()));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidDgp(format!("kappa must be positive, got {}", self.kappa)));
        }
        let (a, b) = self.density.support();
        for (name, v) in [("var_minus", &self.var_minus), ("var_plus", &self.var_plus)] {
            let (min, at, _, _) = v.extrema(a, b);
            if min < 0.0 {
                return Err(Error::InvalidDgp(format!("{name} is negative ({min}) at z = {at}")));
            }
        }
        Ok(())
    }

    /// Gaussian noise with constant variances and the given mean functions.
    pub fn homoskedastic(density: Density, mu_minus: Cubic, mu_plus: Cubic, var: f64, kappa: f64) -> Result<Self> {
        Self::new(density, mu_minus, mu_plus, Quadratic::constant(var), Quadratic::constant(var), kappa)
    }

    /// `μ₊(0) − μ₋(0)`.
    pub fn theta(&self) -> f64 {
        self.mu_plus.0[0] - self.mu_minus.0[0]
    }

    /// Shifts `μ₊` by `offset`, moving `theta` by the same amount.
    pub fn with_offset(&self, offset: f64) -> Self {
        let mut out = *self;
        out.mu_plus.0[0] += offset;
        out
    }
}

/// Conditional law of the potential outcomes given the running variable.
pub trait ConditionalLaw: Send + Sync {
    fn density(&self) -> &Density;

    /// `[(mean, variance) of Y(0), (mean, variance) of Y(1)]` given `Z = z`.
    fn potential(&self, z: f64) -> [(f64, f64); 2];

    fn theta(&self) -> f64;

    /// Mean and variance of the observed outcome given `Z = z`.
    fn observed(&self, z: f64) -> (f64, f64) {
        let [y0, y1] = self.potential(z);
        if z >= 0.0 {
            y1
        } else {
            y0
        }
    }
}

impl ConditionalLaw for Dgp {
    fn density(&self) -> &Density {
        &self.density
    }

    fn potential(&self, z: f64) -> [(f64, f64); 2] {
        [
            (self.mu_minus.eval(z), self.var_minus.eval(z)),
            (self.mu_plus.eval(z), self.var_plus.eval(z)),
        ]
    }

    fn theta(&self) -> f64 {
        Dgp::theta(self)
    }
}

/// A plain or spliced DGP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Plain(Dgp),
    Spliced(SplicedDgp),
}

impl Law {
    pub fn with_offset(&self, offset: f64) -> Self {
        match self {
            Law::Plain(d) => Law::Plain(d.with_offset(offset)),
            Law::Spliced(s) => Law::Spliced(s.with_offset(offset)),
        }
    }

    /// The DGP governing behaviour at the cutoff.
    pub fn local(&self) -> &Dgp {
        match self {
            Law::Plain(d) => d,
            Law::Spliced(s) => &s.inner,
        }
    }
}

impl ConditionalLaw for Law {
    fn density(&self) -> &Density {
        match self {
            Law::Plain(d) => d.density(),
            Law::Spliced(s) => s.density(),
        }
    }

    fn potential(&self, z: f64) -> [(f64, f64); 2] {
        match self {
            Law::Plain(d) => d.potential(z),
            Law::Spliced(s) => s.potential(z),
        }
    }

    fn theta(&self) -> f64 {
        match self {
            Law::Plain(d) => d.theta(),
            Law::Spliced(s) => s.theta(),
        }
    }
}

impl From<Dgp> for Law {
    fn from(d: Dgp) -> Self {
        Law::Plain(d)
    }
}

impl From<SplicedDgp> for Law {
    fn from(s: SplicedDgp) -> Self {
        Law::Spliced(s)
    }
}
