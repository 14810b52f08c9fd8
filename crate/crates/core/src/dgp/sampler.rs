use rand::Rng;
use rand_distr::StandardNormal;

use super::ConditionalLaw;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::sample::{Observation, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialOutcome {
    pub y0: f64,
    pub y1: f64,
    pub z: f64,
}

impl PotentialOutcome {
    /// The observed pair: `Y(1)` when `z >= 0`, `Y(0)` otherwise.
    pub fn observe(&self) -> Observation {
        let y = if self.z >= 0.0 { self.y1 } else { self.y0 };
        Observation { y, z: self.z }
    }
}

/// One draw: a uniform for `z` by inversion, then one standard normal per
/// potential outcome. The consumption pattern never depends on the law, so
/// two laws sampled from the same stream share `z` and the noise exactly.
pub(crate) fn draw<L: ConditionalLaw + ?Sized>(law: &L, rng: &mut StreamRng) -> PotentialOutcome {
    let u: f64 = rng.random();
    let z = law.density().quantile(u);
    let e0: f64 = rng.sample(StandardNormal);
    let e1: f64 = rng.sample(StandardNormal);
    let [(m0, v0), (m1, v1)] = law.potential(z);
    PotentialOutcome {
        y0: m0 + v0.max(0.0).sqrt() * e0,
        y1: m1 + v1.max(0.0).sqrt() * e1,
        z,
    }
}

/// Draws `n` observed pairs from stream `rng`.
pub(crate) fn sample_from<L: ConditionalLaw + ?Sized>(
    law: &L,
    n: usize,
    rng: &mut StreamRng,
) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InvalidCount(n));
    }
    Sample::new((0..n).map(|_| draw(law, rng).observe()).collect())
}

/// `n` i.i.d. observed pairs; deterministic in `seed`.
pub fn sample_observed<L: ConditionalLaw + ?Sized>(law: &L, n: usize, seed: u64) -> Result<Sample> {
    sample_from(law, n, &mut rng::stream(seed))
}

/// `n` i.i.d. potential-outcome triples; with the same seed, observing each
/// triple reproduces [`sample_observed`] exactly.
pub fn sample_potential<L: ConditionalLaw + ?Sized>(
    law: &L,
    n: usize,
    seed: u64,
) -> Result<Vec<PotentialOutcome>> {
    if n == 0 {
        return Err(Error::InvalidCount(n));
    }
    let mut rng = rng::stream(seed);
    Ok((0..n).map(|_| draw(law, &mut rng)).collect())
}
