//! Replication studies: empirical size and power, the adversarial splicing
//! demonstration, and estimator diagnostics.
//!
//! Every replication of cell `(n, rep)` draws from the stream
//! `derive_seed(master_seed, n, rep)`. The seed does not depend on the DGP,
//! the offset or the test, so all laws in a study share common random
//! numbers: two laws that agree on a region produce identical draws there.
//! A finite list of null DGPs only bounds size from below, which is all a
//! distortion witness needs.

mod engine;
pub mod stats;

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cct::{self, BandwidthRule, DEFAULT_RATE};
use crate::dgp::{
    epsilon_tilde_from_mass, sample_from, splice, total_variation, ConditionalLaw, Dgp, Law,
};
use crate::error::{Error, Result};
use crate::localpoly::{self, population_moments};
use crate::rng::{derive_seed, stream};
use crate::sample::Side;

pub use engine::run_indexed;

/// Tolerance for `theta == theta0` checks.
const THETA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Bias-corrected local quadratic test.
    Cct,
    /// Local linear test without bias correction.
    Conventional,
    /// Diagnostic: always rejects.
    ConstantReject,
    /// Diagnostic: rejects with probability `alpha`, independently of the data.
    Coin,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Cct => "cct",
            TestKind::Conventional => "conventional",
            TestKind::ConstantReject => "constant_reject",
            TestKind::Coin => "coin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dgps: Vec<(String, Law)>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub theta0: f64,
    pub alpha: f64,
    /// `None` uses `c = sd(Z)` under the law and `r = 1/5`.
    pub bandwidth: Option<BandwidthRule>,
    pub tests: Vec<TestKind>,
    pub master_seed: u64,
    /// `None` lets rayon decide; results do not depend on it.
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidCount(0));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !self.theta0.is_finite() {
            return Err(Error::InvalidExperiment(format!("theta0 = {}", self.theta0)));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::InvalidExperiment("sample sizes must be non-empty and >= 1".into()));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidExperiment("no tests selected".into()));
        }
        if self.dgps.is_empty() {
            return Err(Error::InvalidExperiment("no DGPs".into()));
        }
        for (i, (name, _)) in self.dgps.iter().enumerate() {
            if self.dgps[..i].iter().any(|(other, _)| other == name) {
                return Err(Error::InvalidExperiment(format!("duplicate DGP name {name}")));
            }
        }
        if let Some(rule) = &self.bandwidth {
            rule.validate()?;
        }
        Ok(())
    }

    fn rule_for(&self, law: &Law) -> BandwidthRule {
        self.bandwidth.unwrap_or(BandwidthRule::Rate {
            c: law.density().std_dev(),
            r: DEFAULT_RATE,
        })
    }
}

/// Result of one replication under one test.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Done { reject: bool, statistic: f64 },
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub dgp: String,
    pub offset: f64,
    pub n: usize,
    pub test: TestKind,
    pub h: f64,
    /// Over successful replications only.
    pub rejection_rate: f64,
    /// `sqrt(p(1 − p) / successes)`.
    pub mc_se: f64,
    pub successes: usize,
    pub error_count: usize,
    /// `NaN` when no replication produced a statistic.
    pub mean_statistic: f64,
    /// KS distance of the statistics to the standard normal.
    pub ks_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
    pub elapsed: Duration,
}

/// Rejection rate with its Monte Carlo error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub se: f64,
    pub error_count: usize,
}

fn run_test(test: TestKind, sample: &crate::Sample, h: f64, spec: &ExperimentSpec, coin: f64) -> Outcome {
    let result = match test {
        TestKind::Cct => cct::cct_test_at(sample, h, spec.theta0, spec.alpha),
        TestKind::Conventional => cct::conventional_test_at(sample, h, spec.theta0, spec.alpha),
        TestKind::ConstantReject => {
            return Outcome::Done { reject: true, statistic: f64::NAN };
        }
        TestKind::Coin => {
            return Outcome::Done { reject: coin < spec.alpha, statistic: f64::NAN };
        }
    };
    match result {
        Ok(r) => Outcome::Done { reject: r.reject, statistic: r.statistic },
        Err(_) => Outcome::Failed,
    }
}

/// Runs all of `spec.tests` on `R` samples from `law` at size `n`.
/// Returns one outcome vector per test, in replication order.
fn replicate(law: &Law, n: usize, h: f64, spec: &ExperimentSpec) -> Vec<Vec<Outcome>> {
    let per_rep = run_indexed(spec.replications, spec.workers, |rep| {
        let mut rng = stream(derive_seed(spec.master_seed, n as u64, rep as u64));
        let sample = sample_from(law, n, &mut rng);
        // Drawn after the sample so the data stream is shared by every test.
        let coin: f64 = rng.random();
        spec.tests
            .iter()
            .map(|&t| match &sample {
                Ok(s) => run_test(t, s, h, spec, coin),
                Err(_) => Outcome::Failed,
            })
            .collect::<Vec<_>>()
    });
    (0..spec.tests.len())
        .map(|t| per_rep.iter().map(|row| row[t]).collect())
        .collect()
}

fn summarize(dgp: &str, offset: f64, n: usize, test: TestKind, h: f64, outcomes: &[Outcome]) -> CellResult {
    let mut rejections = 0usize;
    let mut stats_seen = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if let Outcome::Done { reject, statistic } = *o {
            rejections += reject as usize;
            if statistic.is_finite() {
                stats_seen.push(statistic);
            }
        }
    }
    let error_count = outcomes.iter().filter(|o| matches!(o, Outcome::Failed)).count();
    let successes = outcomes.len() - error_count;
    let (rate, se) = if successes == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let p = rejections as f64 / successes as f64;
        (p, (p * (1.0 - p) / successes as f64).sqrt())
    };
    CellResult {
        dgp: dgp.to_string(),
        offset,
        n,
        test,
        h,
        rejection_rate: rate,
        mc_se: se,
        successes,
        error_count,
        mean_statistic: stats::mean_and_se(&stats_seen).0,
        ks_distance: stats::ks_normal(&stats_seen),
    }
}

fn run_cells(spec: &ExperimentSpec, offsets: &[f64]) -> Result<Vec<CellResult>> {
    spec.validate()?;
    let mut cells = Vec::new();
    for (name, base) in &spec.dgps {
        for &offset in offsets {
            let law = if offset == 0.0 { *base } else { base.with_offset(offset) };
            let rule = spec.rule_for(&law);
            for &n in &spec.sample_sizes {
                let h = cct::bandwidth(n, &rule)?;
                let outcomes = replicate(&law, n, h, spec);
                for (t, out) in spec.tests.iter().zip(&outcomes) {
                    cells.push(summarize(name, offset, n, *t, h, out));
                }
            }
        }
    }
    Ok(cells)
}

/// Empirical rejection rate of `test` under `law` at sample size `n`.
pub fn rejection_rate(law: &Law, n: usize, test: TestKind, spec: &ExperimentSpec) -> Result<RateEstimate> {
    let spec = ExperimentSpec {
        dgps: vec![("law".into(), *law)],
        sample_sizes: vec![n],
        tests: vec![test],
        ..spec.clone()
    };
    let cell = run_cells(&spec, &[0.0])?.remove(0);
    if cell.successes == 0 {
        return Err(Error::AllReplicationsFailed(cell.error_count));
    }
    Ok(RateEstimate {
        rate: cell.rejection_rate,
        se: cell.mc_se,
        error_count: cell.error_count,
    })
}

fn fail_if_empty(cells: &[CellResult]) -> Result<()> {
    match cells.iter().find(|c| c.successes == 0) {
        Some(c) => Err(Error::AllReplicationsFailed(c.error_count)),
        None => Ok(()),
    }
}

/// Largest rejection rate across the DGP list for one `(n, test)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupEntry {
    pub n: usize,
    pub test: TestKind,
    pub rate: f64,
    pub mc_se: f64,
    /// First DGP (in list order) attaining the maximum.
    pub dgp: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeProfile {
    pub result: ExperimentResult,
    pub sup_row: Vec<SupEntry>,
}

fn is_null(law: &Law, theta0: f64) -> bool {
    (law.theta() - theta0).abs() <= THETA_TOLERANCE * theta0.abs().max(1.0)
}

/// Rejection rates under null DGPs and their maximum per `(n, test)`.
pub fn size_profile(spec: &ExperimentSpec) -> Result<SizeProfile> {
    spec.validate()?;
    for (name, law) in &spec.dgps {
        if !is_null(law, spec.theta0) {
            return Err(Error::NotANullDgp {
                name: name.clone(),
                theta: law.theta(),
                theta0: spec.theta0,
            });
        }
    }
    let start = Instant::now();
    let cells = run_cells(spec, &[0.0])?;
    fail_if_empty(&cells)?;
    let mut sup_row = Vec::new();
    for &n in &spec.sample_sizes {
        for &test in &spec.tests {
            let best = cells
                .iter()
                .filter(|c| c.n == n && c.test == test)
                .fold(None::<&CellResult>, |acc, c| match acc {
                    Some(a) if a.rejection_rate >= c.rejection_rate => Some(a),
                    _ => Some(c),
                });
            if let Some(b) = best {
                sup_row.push(SupEntry {
                    n,
                    test,
                    rate: b.rejection_rate,
                    mc_se: b.mc_se,
                    dgp: b.dgp.clone(),
                });
            }
        }
    }
    Ok(SizeProfile {
        result: ExperimentResult { cells, elapsed: start.elapsed() },
        sup_row,
    })
}

/// Rejection rates under each DGP shifted by each offset (added to the
/// constant term of `μ₊`). With no offsets, every DGP must be an alternative.
pub fn power_curve(spec: &ExperimentSpec, offsets: &[f64]) -> Result<ExperimentResult> {
    spec.validate()?;
    if offsets.is_empty() {
        for (name, law) in &spec.dgps {
            if is_null(law, spec.theta0) {
                return Err(Error::NotAnAlternative { name: name.clone(), theta0: spec.theta0 });
            }
        }
    }
    let grid: &[f64] = if offsets.is_empty() { &[0.0] } else { offsets };
    let start = Instant::now();
    let cells = run_cells(spec, grid)?;
    fail_if_empty(&cells)?;
    Ok(ExperimentResult { cells, elapsed: start.elapsed() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialRow {
    /// Requested `P(|Z| < ε̃)`.
    pub mass: f64,
    pub epsilon_tilde: f64,
    /// Realized `P(|Z| < ε̃)`.
    pub epsilon_mass: f64,
    pub total_variation: f64,
    /// `2ε`, the single-copy bound on the total variation.
    pub tv_bound: f64,
    /// `n · τ(P, P_k)`, a bound on the distance between `n`-fold products.
    pub coupling: f64,
    pub spliced_rate: f64,
    pub spliced_se: f64,
    pub spliced_errors: usize,
    pub difference: f64,
    /// `min(1, 2nε) + 3 · sqrt(se_alt² + se_spliced²)`.
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialTable {
    pub n: usize,
    pub test: TestKind,
    pub h: f64,
    pub alt: RateEstimate,
    pub null: RateEstimate,
    pub rows: Vec<AdversarialRow>,
}

/// Splices `null` into `alt` on windows of shrinking mass and measures the
/// rejection rate of the first test in `spec.tests` under each spliced law,
/// which belongs to the null.
///
/// A schedule mass of 1 or more splices over the whole support, leaving the
/// pure null law.
pub fn adversarial_demo(
    alt: &Dgp,
    null: &Dgp,
    schedule: &[f64],
    n: usize,
    spec: &ExperimentSpec,
) -> Result<AdversarialTable> {
    let test = *spec
        .tests
        .first()
        .ok_or_else(|| Error::InvalidExperiment("no tests selected".into()))?;
    let null_law = Law::Plain(*null);
    let alt_law = Law::Plain(*alt);
    if !is_null(&null_law, spec.theta0) {
        return Err(Error::NotANullDgp {
            name: "null".into(),
            theta: null.theta(),
            theta0: spec.theta0,
        });
    }
    if is_null(&alt_law, spec.theta0) {
        return Err(Error::NotAnAlternative { name: "alt".into(), theta0: spec.theta0 });
    }
    if !alt.density.same_as(&null.density) {
        return Err(Error::DensityMismatch);
    }
    let rule = spec.rule_for(&alt_law);
    let h = cct::bandwidth(n, &rule)?;
    let one = ExperimentSpec { bandwidth: Some(rule), ..spec.clone() };
    let alt_rate = rejection_rate(&alt_law, n, test, &one)?;
    let null_rate = rejection_rate(&null_law, n, test, &one)?;
    let mut rows = Vec::with_capacity(schedule.len());
    for &mass in schedule {
        let radius = if mass >= 1.0 {
            2.0 * alt.density.outer_radius()
        } else {
            epsilon_tilde_from_mass(alt, mass)?
        };
        let s = splice(alt, null, radius)?;
        let tv = total_variation(alt, &s)?;
        let rate = rejection_rate(&Law::Spliced(s), n, test, &one)?;
        let bound = 2.0 * s.epsilon_mass;
        let combined = (alt_rate.se.powi(2) + rate.se.powi(2)).sqrt();
        rows.push(AdversarialRow {
            mass,
            epsilon_tilde: radius,
            epsilon_mass: s.epsilon_mass,
            total_variation: tv,
            tv_bound: bound,
            coupling: n as f64 * tv,
            spliced_rate: rate.rate,
            spliced_se: rate.se,
            spliced_errors: rate.error_count,
            difference: (rate.rate - alt_rate.rate).abs(),
            allowed: (n as f64 * bound).min(1.0) + 3.0 * combined,
        });
    }
    Ok(AdversarialTable { n, test, h, alt: alt_rate, null: null_rate, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub n: usize,
    pub h: f64,
    pub successes: usize,
    pub error_count: usize,
    /// Mean of `μ̂₊ − μ₊(0)`.
    pub bias: f64,
    pub bias_se: f64,
    /// `h³ e'Γ̃⁻¹ν̃ μ₊‴ / 6` from the population moments.
    pub predicted_bias: f64,
    pub bias_ratio: f64,
    /// Mean of `V̂₊ / V₊` with `V₊ = (nh)⁻¹ e'Γ̃⁻¹Ψ̃Γ̃⁻¹e`.
    pub variance_ratio: f64,
    pub variance_ratio_se: f64,
    /// KS distance of the studentized statistic at the true `θ`.
    pub ks_distance: f64,
}

/// Bias and variance of the plus-side fit against their population
/// predictions, and normality of the studentized statistic.
pub fn estimator_diagnostics(
    law: &Law,
    sample_sizes: &[usize],
    replications: usize,
    bandwidth: Option<BandwidthRule>,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<DiagnosticRow>> {
    let spec = ExperimentSpec {
        dgps: vec![("law".into(), *law)],
        sample_sizes: sample_sizes.to_vec(),
        replications,
        theta0: law.theta(),
        alpha: 0.05,
        bandwidth,
        tests: vec![TestKind::Cct],
        master_seed,
        workers,
    };
    spec.validate()?;
    let local = law.local();
    let rule = spec.rule_for(law);
    let mu0 = local.mu_plus.eval(0.0);
    let mu3 = local.mu_plus.derivative(3, 0.0);
    let mut rows = Vec::new();
    for &n in sample_sizes {
        let h = cct::bandwidth(n, &rule)?;
        let pop = population_moments(
            |z| local.density.pdf(z),
            |z| local.var_plus.eval(z),
            h,
            Side::Plus,
        )?;
        let v_theory = pop.variance(n)?;
        let predicted = pop.leading_bias(mu3)?;
        let per_rep = run_indexed(replications, workers, |rep| {
            let mut rng = stream(derive_seed(master_seed, n as u64, rep as u64));
            let sample = sample_from(law, n, &mut rng).ok()?;
            let fit = localpoly::local_quadratic_fit(&sample, h, Side::Plus).ok()?;
            let t = cct::cct_statistic(&sample, h, spec.theta0).unwrap_or(f64::NAN);
            Some((fit.mu_hat - mu0, fit.v_hat / v_theory, t))
        });
        let ok: Vec<_> = per_rep.iter().flatten().copied().collect();
        if ok.is_empty() {
            return Err(Error::AllReplicationsFailed(replications));
        }
        let (bias, bias_se) = stats::mean_and_se(&ok.iter().map(|r| r.0).collect::<Vec<_>>());
        let (vr, vr_se) = stats::mean_and_se(&ok.iter().map(|r| r.1).collect::<Vec<_>>());
        let ts: Vec<f64> = ok.iter().map(|r| r.2).filter(|t| t.is_finite()).collect();
        rows.push(DiagnosticRow {
            n,
            h,
            successes: ok.len(),
            error_count: replications - ok.len(),
            bias,
            bias_se,
            predicted_bias: predicted,
            bias_ratio: bias / predicted,
            variance_ratio: vr,
            variance_ratio_se: vr_se,
            ks_distance: stats::ks_normal(&ts),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{Cubic, Density};

    fn dgp(theta: f64, var: f64) -> Dgp {
        Dgp::homoskedastic(
            Density::Uniform { a: -1.0, b: 1.0 },
            Cubic([0.0, 0.5, 0.0, 0.0]),
            Cubic([theta, 0.5, 0.0, 0.0]),
            var,
            0.5,
        )
        .unwrap()
    }

    fn spec(laws: Vec<(&str, Dgp)>, reps: usize) -> ExperimentSpec {
        ExperimentSpec {
            dgps: laws.into_iter().map(|(n, d)| (n.to_string(), Law::Plain(d))).collect(),
            sample_sizes: vec![300],
            replications: reps,
            theta0: 0.0,
            alpha: 0.05,
            bandwidth: None,
            tests: vec![TestKind::Cct],
            master_seed: 7,
            workers: None,
        }
    }

    #[test]
    fn spec_validation() {
        let base = spec(vec![("a", dgp(0.0, 1.0))], 10);
        assert!(base.validate().is_ok());
        assert_eq!(
            ExperimentSpec { replications: 0, ..base.clone() }.validate(),
            Err(Error::InvalidCount(0))
        );
        assert!(ExperimentSpec { alpha: 1.0, ..base.clone() }.validate().is_err());
        assert!(ExperimentSpec { sample_sizes: vec![0], ..base.clone() }.validate().is_err());
        let dup = spec(vec![("a", dgp(0.0, 1.0)), ("a", dgp(0.0, 2.0))], 10);
        assert!(dup.validate().is_err());
    }

    #[test]
    fn single_rejecting_replication() {
        let s = spec(vec![("alt", dgp(5.0, 0.01))], 1);
        let r = rejection_rate(&Law::Plain(dgp(5.0, 0.01)), 300, TestKind::Cct, &s).unwrap();
        assert_eq!(r, RateEstimate { rate: 1.0, se: 0.0, error_count: 0 });
    }

    #[test]
    fn constant_reject_dummy() {
        let s = spec(vec![("null", dgp(0.0, 1.0))], 50);
        let r = rejection_rate(&Law::Plain(dgp(0.0, 1.0)), 50, TestKind::ConstantReject, &s).unwrap();
        assert_eq!(r.rate, 1.0);
    }

    #[test]
    fn every_replication_failing_is_an_error() {
        // two observations can never support a quadratic fit
        let s = spec(vec![("null", dgp(0.0, 1.0))], 20);
        assert_eq!(
            rejection_rate(&Law::Plain(dgp(0.0, 1.0)), 2, TestKind::Cct, &s),
            Err(Error::AllReplicationsFailed(20))
        );
    }

    #[test]
    fn size_profile_checks_nulls_and_sup() {
        let bad = spec(vec![("alt", dgp(1.0, 1.0))], 10);
        assert!(matches!(size_profile(&bad), Err(Error::NotANullDgp { name, .. }) if name == "alt"));

        let one = size_profile(&spec(vec![("a", dgp(0.0, 1.0))], 200)).unwrap();
        assert_eq!(one.sup_row.len(), 1);
        assert_eq!(one.sup_row[0].rate, one.result.cells[0].rejection_rate);

        let two = size_profile(&spec(vec![("a", dgp(0.0, 1.0)), ("b", dgp(0.0, 1.0))], 200)).unwrap();
        assert_eq!(two.sup_row[0].rate, one.sup_row[0].rate);
    }

    #[test]
    fn power_curve_requires_alternatives_without_offsets() {
        let s = spec(vec![("null", dgp(0.0, 1.0))], 10);
        assert!(matches!(power_curve(&s, &[]), Err(Error::NotAnAlternative { .. })));
        let res = power_curve(&s, &[0.0, 0.5, 20.0]).unwrap();
        assert_eq!(res.cells.len(), 3);
        assert_eq!(res.cells[2].rejection_rate, 1.0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut s = spec(vec![("a", dgp(0.0, 1.0)), ("b", dgp(0.3, 0.5))], 64);
        s.tests = vec![TestKind::Cct, TestKind::Conventional, TestKind::Coin];
        s.workers = Some(1);
        let base = power_curve(&s, &[0.0, 0.2]).unwrap().cells;
        for w in [Some(2), Some(5), None] {
            s.workers = w;
            let cells = power_curve(&s, &[0.0, 0.2]).unwrap().cells;
            assert_eq!(format!("{cells:?}"), format!("{base:?}"));
        }
    }

    #[test]
    fn adversarial_rows_respect_coupling_bound() {
        let s = spec(vec![], 200);
        let alt = dgp(2.0, 1.0);
        let null = dgp(0.0, 1.0);
        let table = adversarial_demo(&alt, &null, &[1.0, 0.1, 0.001], 400, &s).unwrap();
        assert_eq!(table.rows.len(), 3);
        // whole-support splice reproduces the null exactly under common numbers
        assert_eq!(table.rows[0].spliced_rate, table.null.rate);
        for row in &table.rows {
            assert!(row.total_variation <= row.tv_bound * (1.0 + 1e-9));
            assert!(row.difference <= row.allowed, "{row:?}");
        }
        assert!(adversarial_demo(&null, &null, &[0.1], 400, &s).is_err());
        assert!(adversarial_demo(&alt, &alt, &[0.1], 400, &s).is_err());
    }

    #[test]
    fn diagnostics_without_cubic_term_are_unbiased() {
        let law = Law::Plain(dgp(0.0, 1.0));
        let rows = estimator_diagnostics(&law, &[1000], 400, None, 3, None).unwrap();
        let r = &rows[0];
        assert_eq!(r.predicted_bias, 0.0);
        assert!(r.bias.abs() <= 3.0 * r.bias_se, "{r:?}");
        assert!((r.variance_ratio - 1.0).abs() < 0.2, "{r:?}");
    }
}
