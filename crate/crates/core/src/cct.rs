//! Bias-corrected robust test of `H0: θ = θ0` at the cutoff.
//!
//! `θ̂ = μ̂₊ − μ̂₋` where each `μ̂` is the intercept of a one-sided local
//! quadratic fit, and the standard error is `sqrt(V̂₊ + V̂₋)` from the
//! sandwich plug-in. The test rejects when `|T| > z_{1-α/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localpoly::{local_linear_fit, local_quadratic_fit};
use crate::normal::{normal_quantile, two_sided_p_value};
use crate::sample::{Sample, Side};

/// Default rate exponent; `n h⁷ = c⁷ n^{-2/5} → 0`.
pub const DEFAULT_RATE: f64 = 0.2;

/// Relative size below which the standard error is treated as exactly zero.
///
/// Noiseless inputs leave residuals at rounding level, so an exact `== 0`
/// test would miss them.
pub const DEGENERATE_SE_RATIO: f64 = 1e-10;

/// Deterministic bandwidth choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    /// `h = c n^(-r)`, with `1/7 < r < 1`.
    Rate { c: f64, r: f64 },
    Fixed { h: f64 },
}

impl BandwidthRule {
    /// `c = sd(z)` and `r = 1/5`.
    pub fn default_for(sample: &Sample) -> Self {
        BandwidthRule::Rate {
            c: sample.z_std_dev(),
            r: DEFAULT_RATE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthRule::Rate { c, r } => {
                if !(c > 0.0 && c.is_finite() && r > 1.0 / 7.0 && r < 1.0) {
                    return Err(Error::InvalidRate { c, r });
                }
            }
            BandwidthRule::Fixed { h } => crate::kernel::check_bandwidth(h)?,
        }
        Ok(())
    }
}

pub fn bandwidth(n: usize, rule: &BandwidthRule) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidCount(n));
    }
    rule.validate()?;
    Ok(match *rule {
        BandwidthRule::Rate { c, r } => c * (n as f64).powf(-r),
        BandwidthRule::Fixed { h } => h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AteEstimate {
    pub theta_hat: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    pub n_plus: usize,
    pub n_minus: usize,
}

impl AteEstimate {
    pub fn se(&self) -> f64 {
        (self.v_plus + self.v_minus).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub theta_hat: f64,
    pub se: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub theta0: f64,
    pub h: f64,
    pub n_plus: usize,
    pub n_minus: usize,
}

/// Observations with positive kernel weight on `side`.
fn effective_count(sample: &Sample, h: f64, side: Side) -> usize {
    sample
        .iter()
        .filter(|o| side.contains(o.z) && o.z.abs() < h)
        .count()
}

fn check_support(sample: &Sample, h: f64, needed: usize) -> Result<(usize, usize)> {
    crate::kernel::check_bandwidth(h)?;
    let n_plus = effective_count(sample, h, Side::Plus);
    let n_minus = effective_count(sample, h, Side::Minus);
    for (side, count) in [(Side::Plus, n_plus), (Side::Minus, n_minus)] {
        if count < needed {
            return Err(Error::InsufficientSupport { side, count });
        }
    }
    Ok((n_plus, n_minus))
}

/// Bias-corrected estimate of the jump and the per-side plug-in variances.
pub fn ate_estimate(sample: &Sample, h: f64) -> Result<AteEstimate> {
    let (n_plus, n_minus) = check_support(sample, h, 3)?;
    let plus = local_quadratic_fit(sample, h, Side::Plus)?;
    let minus = local_quadratic_fit(sample, h, Side::Minus)?;
    Ok(AteEstimate {
        theta_hat: plus.mu_hat - minus.mu_hat,
        v_plus: plus.v_hat,
        v_minus: minus.v_hat,
        n_plus,
        n_minus,
    })
}

/// Conventional local linear counterpart of [`ate_estimate`].
pub fn ate_estimate_local_linear(sample: &Sample, h: f64) -> Result<AteEstimate> {
    let (n_plus, n_minus) = check_support(sample, h, 2)?;
    let plus = local_linear_fit(sample, h, Side::Plus)?;
    let minus = local_linear_fit(sample, h, Side::Minus)?;
    Ok(AteEstimate {
        theta_hat: plus.mu_hat - minus.mu_hat,
        v_plus: plus.v_hat,
        v_minus: minus.v_hat,
        n_plus,
        n_minus,
    })
}

fn outcome_scale(sample: &Sample, h: f64) -> f64 {
    sample
        .iter()
        .filter(|o| o.z.abs() < h)
        .map(|o| o.y.abs())
        .fold(1.0, f64::max)
}

fn studentize(est: &AteEstimate, theta0: f64, scale: f64) -> Result<f64> {
    let se = est.se();
    if !(se > DEGENERATE_SE_RATIO * scale) {
        return Err(Error::DegenerateVariance);
    }
    Ok((est.theta_hat - theta0) / se)
}

/// `T = (θ̂ − θ0) / sqrt(V̂₊ + V̂₋)`.
pub fn cct_statistic(sample: &Sample, h: f64, theta0: f64) -> Result<f64> {
    let est = ate_estimate(sample, h)?;
    studentize(&est, theta0, outcome_scale(sample, h))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Two-sided decision from a statistic. Ties `|T| = z` do not reject.
pub fn decide(statistic: f64, alpha: f64) -> Result<(bool, f64)> {
    check_alpha(alpha)?;
    let crit = normal_quantile(1.0 - alpha / 2.0)?;
    Ok((statistic.abs() > crit, two_sided_p_value(statistic)))
}

fn finish(est: AteEstimate, sample: &Sample, h: f64, theta0: f64, alpha: f64) -> Result<TestResult> {
    let statistic = studentize(&est, theta0, outcome_scale(sample, h))?;
    let (reject, p_value) = decide(statistic, alpha)?;
    Ok(TestResult {
        theta_hat: est.theta_hat,
        se: est.se(),
        statistic,
        p_value,
        reject,
        alpha,
        theta0,
        h,
        n_plus: est.n_plus,
        n_minus: est.n_minus,
    })
}

/// Test at a given bandwidth.
pub fn cct_test_at(sample: &Sample, h: f64, theta0: f64, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let est = ate_estimate(sample, h)?;
    finish(est, sample, h, theta0, alpha)
}

pub fn cct_test(sample: &Sample, rule: &BandwidthRule, theta0: f64, alpha: f64) -> Result<TestResult> {
    let h = bandwidth(sample.len(), rule)?;
    cct_test_at(sample, h, theta0, alpha)
}

/// Non-bias-corrected local linear test with the same bandwidth.
pub fn conventional_test_at(sample: &Sample, h: f64, theta0: f64, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let est = ate_estimate_local_linear(sample, h)?;
    finish(est, sample, h, theta0, alpha)
}

pub fn conventional_test(
    sample: &Sample,
    rule: &BandwidthRule,
    theta0: f64,
    alpha: f64,
) -> Result<TestResult> {
    let h = bandwidth(sample.len(), rule)?;
    conventional_test_at(sample, h, theta0, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Observation;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn grid_sample(f: impl Fn(f64) -> f64, n_side: usize) -> Sample {
        let mut obs = Vec::new();
        for i in 0..n_side {
            let z = (i as f64 + 0.5) / n_side as f64;
            obs.push(Observation { y: f(z), z });
            obs.push(Observation { y: f(-z), z: -z });
        }
        Sample::new(obs).unwrap()
    }

    fn noisy_sample(seed: u64, n: usize) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = (0..n)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                let e: f64 = rng.sample(StandardNormal);
                let y = 0.5 + z + if z >= 0.0 { 1.0 } else { 0.0 } + 0.3 * e;
                Observation { y, z }
            })
            .collect();
        Sample::new(obs).unwrap()
    }

    /// Full pipeline with generic linear algebra: WLS by QR on raw regressors
    /// and the sandwich as an explicit matrix product.
    fn oracle_side(s: &Sample, h: f64, side: Side, p: usize) -> (f64, f64) {
        let rows: Vec<_> = s.iter().filter(|o| side.contains(o.z) && o.z.abs() < h).collect();
        let n = s.len() as f64;
        let m = rows.len();
        let w = DVector::from_fn(m, |i, _| (1.0 - (rows[i].z / h).abs()) / h);
        let r = DMatrix::from_fn(m, p, |i, j| (rows[i].z / h).powi(j as i32));
        let y = DVector::from_fn(m, |i, _| rows[i].y);
        let wd = DMatrix::from_diagonal(&w);
        let gamma = r.transpose() * &wd * &r / n;
        let gi = gamma.clone().try_inverse().unwrap();
        let coef = &gi * r.transpose() * &wd * &y / n;
        let mu = coef[0];
        let e2 = DVector::from_fn(m, |i, _| (rows[i].y - mu).powi(2));
        let sigma = DMatrix::from_diagonal(&e2);
        let psi = r.transpose() * &wd * sigma * &wd * &r / n;
        let v = (&gi * psi * &gi)[(0, 0)] / n;
        (mu, v)
    }

    #[test]
    fn bandwidth_examples() {
        let rule = BandwidthRule::Rate { c: 1.0, r: 0.2 };
        assert_eq!(bandwidth(1, &rule).unwrap(), 1.0);
        assert!((bandwidth(100_000, &rule).unwrap() - 0.1).abs() < 1e-12);
        let bad = BandwidthRule::Rate { c: 1.0, r: 0.1 };
        assert!(matches!(bandwidth(50, &bad), Err(Error::InvalidRate { .. })));
        assert!(bandwidth(50, &BandwidthRule::Rate { c: 0.0, r: 0.2 }).is_err());
        assert!(bandwidth(50, &BandwidthRule::Rate { c: 1.0, r: 1.0 }).is_err());
        assert_eq!(bandwidth(7, &BandwidthRule::Fixed { h: 0.3 }).unwrap(), 0.3);
        assert!(bandwidth(7, &BandwidthRule::Fixed { h: 0.0 }).is_err());
        assert_eq!(bandwidth(0, &rule), Err(Error::InvalidCount(0)));
    }

    #[test]
    fn constant_outcomes() {
        let s = grid_sample(|_| 5.0, 20);
        let est = ate_estimate(&s, 1.0).unwrap();
        assert!(est.theta_hat.abs() < 1e-12);
        assert_eq!(cct_statistic(&s, 1.0, 0.0), Err(Error::DegenerateVariance));
        assert_eq!(
            conventional_test_at(&s, 1.0, 0.0, 0.05),
            Err(Error::DegenerateVariance)
        );
    }

    #[test]
    fn step_function() {
        let s = grid_sample(|z| if z >= 0.0 { 1.0 } else { 0.0 }, 25);
        let est = ate_estimate(&s, 0.8).unwrap();
        assert!((est.theta_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_plus_jump() {
        let f = |z: f64| 2.0 + z * z + if z >= 0.0 { 3.0 + z } else { 0.0 };
        let s = grid_sample(f, 30);
        let est = ate_estimate(&s, 0.9).unwrap();
        let (mp, _) = oracle_side(&s, 0.9, Side::Plus, 3);
        let (mm, _) = oracle_side(&s, 0.9, Side::Minus, 3);
        assert!((mp - mm - 3.0).abs() < 1e-9);
        assert!((est.theta_hat - 3.0).abs() < 1e-9);
    }

    #[test]
    fn statistic_matches_oracle_pipeline() {
        let s = noisy_sample(20, 20);
        let h = 1.5;
        let t = cct_statistic(&s, h, 0.25).unwrap();
        let (mp, vp) = oracle_side(&s, h, Side::Plus, 3);
        let (mm, vm) = oracle_side(&s, h, Side::Minus, 3);
        let expect = (mp - mm - 0.25) / (vp + vm).sqrt();
        assert!((t - expect).abs() < 1e-9, "{t} vs {expect}");
        let est = ate_estimate(&s, h).unwrap();
        assert_eq!(cct_statistic(&s, h, est.theta_hat).unwrap(), 0.0);
    }

    #[test]
    fn conventional_matches_oracle_and_linear_reproduction() {
        let s = noisy_sample(21, 60);
        let r = conventional_test_at(&s, 0.9, 0.0, 0.05).unwrap();
        let (mp, vp) = oracle_side(&s, 0.9, Side::Plus, 2);
        let (mm, vm) = oracle_side(&s, 0.9, Side::Minus, 2);
        assert!((r.theta_hat - (mp - mm)).abs() < 1e-10);
        assert!((r.se - (vp + vm).sqrt()).abs() < 1e-10);

        let lin = grid_sample(|z| if z >= 0.0 { 4.0 - z } else { 1.0 + 2.0 * z }, 10);
        let est = ate_estimate_local_linear(&lin, 1.0).unwrap();
        assert!((est.theta_hat - 3.0).abs() < 1e-12);
    }

    #[test]
    fn insufficient_support() {
        let s = Sample::from_pairs(&[1.0, 2.0, 3.0, 4.0, 5.0], &[-0.5, -0.2, -0.1, 0.1, 0.3]).unwrap();
        assert_eq!(
            ate_estimate(&s, 1.0),
            Err(Error::InsufficientSupport { side: Side::Plus, count: 2 })
        );
    }

    #[test]
    fn decisions_at_the_extremes() {
        let (reject, p) = decide(0.0, 0.05).unwrap();
        assert!(!reject);
        assert_eq!(p, 1.0);
        let (reject, p) = decide(10.0, 0.05).unwrap();
        assert!(reject && p < 1e-15);
        assert!(decide(1.0, 0.0).is_err());
        assert!(decide(1.0, 1.0).is_err());
        let z = normal_quantile(0.975).unwrap();
        assert!(!decide(z, 0.05).unwrap().0);
        assert!(decide(1.959965, 0.05).unwrap().0);
        assert!(!decide(1.959963, 0.05).unwrap().0);
        assert!(matches!(cct_test_at(&noisy_sample(1, 50), 1.0, 0.0, 1.5), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn full_result_fields() {
        let s = noisy_sample(3, 400);
        let rule = BandwidthRule::default_for(&s);
        let r = cct_test(&s, &rule, 0.0, 0.05).unwrap();
        assert!((r.h - bandwidth(400, &rule).unwrap()).abs() < 1e-15);
        assert!(r.n_plus > 0 && r.n_minus > 0);
        assert_eq!(r.reject, r.p_value < r.alpha);
        assert!((r.statistic - r.theta_hat / r.se).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn location_scale_invariance(seed in any::<u64>(), a in -4.0f64..4.0, b in -5.0f64..5.0,
                                     theta0 in -2.0f64..2.0) {
            prop_assume!(a.abs() > 0.2);
            let s = noisy_sample(seed, 80);
            let t = s.map_y(|y| a * y + b).unwrap();
            let r1 = cct_test_at(&s, 0.9, theta0, 0.05);
            let r2 = cct_test_at(&t, 0.9, a * theta0, 0.05);
            if let (Ok(r1), Ok(r2)) = (r1, r2) {
                prop_assert!((r1.statistic.abs() - r2.statistic.abs()).abs() < 1e-8 * (1.0 + r1.statistic.abs()));
                prop_assert!((r1.p_value - r2.p_value).abs() < 1e-8);
                if (r1.statistic.abs() - 1.959964).abs() > 1e-6 {
                    prop_assert_eq!(r1.reject, r2.reject);
                }
            }
        }

        #[test]
        fn sign_antisymmetry(seed in any::<u64>(), theta0 in -2.0f64..2.0) {
            let s = noisy_sample(seed, 80);
            let neg = s.map_y(|y| -y).unwrap();
            if let (Ok(r1), Ok(r2)) = (cct_test_at(&s, 0.9, theta0, 0.05), cct_test_at(&neg, 0.9, -theta0, 0.05)) {
                prop_assert!((r1.statistic + r2.statistic).abs() < 1e-9 * (1.0 + r1.statistic.abs()));
                prop_assert!((r1.p_value - r2.p_value).abs() < 1e-9);
                prop_assert_eq!(r1.reject, r2.reject);
            }
        }

        #[test]
        fn decision_consistency(t in -8.0f64..8.0, alpha in 0.001f64..0.5) {
            let (reject, p) = decide(t, alpha).unwrap();
            prop_assert_eq!(reject, p < alpha);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
