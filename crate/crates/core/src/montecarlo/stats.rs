//! Summary statistics used by the replication engine.

use crate::normal;

/// Compensated (Neumaier) sum, accumulated in iteration order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean (`n − 1` denominator). `NaN` when empty.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = neumaier_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let ss = neumaier_sum(values.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup_x |F_n(x) − Φ(x)|`. `NaN` when there are no finite values.
pub fn ks_normal(values: &[f64]) -> f64 {
    let v = sorted(values);
    if v.is_empty() {
        return f64::NAN;
    }
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = normal::cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of a two-sample KS distance `d` with sizes `n`, `m`,
/// using the Kolmogorov limit law with Stephens' small-sample correction.
pub fn ks_two_sample_p_value(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n * m) as f64 / (n + m) as f64;
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    kolmogorov_survival(lambda)
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(v), 2.0);
        assert_eq!(v.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn mean_and_se_small_cases() {
        let (m, s) = mean_and_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_and_se(&[]).0.is_nan());
    }

    #[test]
    fn ks_normal_single_point() {
        assert!((ks_normal(&[0.0]) - 0.5).abs() < 1e-15);
        assert!(ks_normal(&[f64::NAN]).is_nan());
    }

    #[test]
    fn ks_two_sample_known_values() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // classical critical values: 1.358 at 5%, 1.628 at 1%
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 2e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }
}
