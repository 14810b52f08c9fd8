use std::fmt;

use crate::error::{Error, Result};

/// Side of the cutoff. `Plus` holds `z >= 0`, `Minus` holds `z < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    #[inline]
    pub fn contains(self, z: f64) -> bool {
        match self {
            Side::Plus => z >= 0.0,
            Side::Minus => z < 0.0,
        }
    }

    pub fn of(z: f64) -> Side {
        if z >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub z: f64,
}

/// An ordered, non-empty set of finite `(y, z)` observations.
///
/// Ingestion order is kept so weighted sums are reproducible bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    obs: Vec<Observation>,
}

impl Sample {
    pub fn new(obs: Vec<Observation>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(index) = obs.iter().position(|o| !o.y.is_finite() || !o.z.is_finite()) {
            return Err(Error::NonFiniteObservation { index });
        }
        Ok(Sample { obs })
    }

    pub fn from_pairs(y: &[f64], z: &[f64]) -> Result<Self> {
        assert_eq!(y.len(), z.len(), "y and z must have equal length");
        Self::new(y.iter().zip(z).map(|(&y, &z)| Observation { y, z }).collect())
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.obs.iter()
    }

    /// Returns a copy with every outcome passed through `f`.
    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.obs
                .iter()
                .map(|o| Observation { y: f(o.y), z: o.z })
                .collect(),
        )
    }

    /// Sample standard deviation of the running variable (0 when n = 1).
    pub fn z_std_dev(&self) -> f64 {
        let n = self.obs.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.obs.iter().map(|o| o.z).sum::<f64>() / n as f64;
        let ss: f64 = self.obs.iter().map(|o| (o.z - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_belongs_to_plus() {
        assert!(Side::Plus.contains(0.0));
        assert!(!Side::Minus.contains(0.0));
        assert_eq!(Side::of(-1e-300), Side::Minus);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert_eq!(Sample::new(vec![]), Err(Error::EmptySample));
        let err = Sample::from_pairs(&[1.0, f64::NAN], &[0.1, 0.2]).unwrap_err();
        assert_eq!(err, Error::NonFiniteObservation { index: 1 });
        assert!(Sample::from_pairs(&[1.0], &[f64::INFINITY]).is_err());
    }

    #[test]
    fn keeps_order() {
        let s = Sample::from_pairs(&[3.0, 1.0, 2.0], &[0.3, -0.1, 0.2]).unwrap();
        let ys: Vec<f64> = s.iter().map(|o| o.y).collect();
        assert_eq!(ys, vec![3.0, 1.0, 2.0]);
    }
}
