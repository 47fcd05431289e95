//! Empirical tails, distribution-free confidence bands and the two-sample
//! Kolmogorov-Smirnov test.

use crate::curve::TailCurve;
use crate::error::{invalid, Error, Result};

/// Minimum sample count accepted by [`ecdf_tail`].
pub const MIN_SAMPLES: usize = 100;

/// An empirical tail probability with its simultaneous confidence band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Dvoretzky-Kiefer-Wolfowitz half-width `sqrt(ln(2/delta) / (2N))`; the
/// whole ECDF lies within it of the true CDF with probability `1 - delta`.
pub fn dkw_half_width(samples: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

/// Fraction of `samples` (sorted ascending) strictly greater than `t`.
pub fn empirical_tail(sorted: &[f64], t: f64) -> f64 {
    let above = sorted.len() - sorted.partition_point(|&x| x <= t);
    above as f64 / sorted.len() as f64
}

/// Empirical `P(X > t)` with a DKW band at confidence `1 - delta`.
pub fn ecdf_tail(sorted: &[f64], t: f64, delta: f64) -> Result<TailEstimate> {
    if sorted.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: sorted.len(),
        });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let value = empirical_tail(sorted, t);
    let half = dkw_half_width(sorted.len(), delta);
    Ok(TailEstimate {
        value,
        lo: (value - half).max(0.0),
        hi: (value + half).min(1.0),
    })
}

/// Empirical tail of `sorted` on the grid `times`.
pub fn ecdf_curve(sorted: &[f64], times: &[f64]) -> Result<TailCurve> {
    TailCurve::new(times.to_vec(), times.iter().map(|&t| empirical_tail(sorted, t)).collect())
}

/// `sup_t |P_emp(X > t) - tail(t)|` for a continuous, non-increasing `tail`.
/// Both one-sided limits at every jump of the ECDF are compared.
pub fn sup_distance(sorted: &[f64], mut tail: impl FnMut(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let theory = tail(x);
        let before = (sorted.len() - i) as f64 / n;
        let after = (sorted.len() - j) as f64 / n;
        sup = sup.max((before - theory).abs()).max((after - theory).abs());
        i = j;
    }
    sup
}

/// Sorts a sample ascending; NaNs are rejected upstream so `total_cmp` is a
/// plain numeric order here.
pub fn sort_samples(samples: &mut [f64]) {
    samples.sort_unstable_by(f64::total_cmp);
}

/// Outcome of a two-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsTest {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * f64::from(j * j) * x * x).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test on sorted samples with the asymptotic p-value
/// (Stephens' small-sample correction to the effective size).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut statistic: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        statistic = statistic.max((i as f64 / na - j as f64 / nb).abs());
    }
    let effective = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_survival((effective + 0.12 + 0.11 / effective) * statistic);
    Ok(KsTest { statistic, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    fn exp_samples(count: usize, rate: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Exp::new(rate).unwrap();
        let mut v: Vec<f64> = (0..count).map(|_| dist.sample(&mut rng)).collect();
        sort_samples(&mut v);
        v
    }

    #[test]
    fn point_mass_tails() {
        let ones = vec![1.0; 100];
        assert_eq!(ecdf_tail(&ones, 0.5, 0.01).unwrap().value, 1.0);
        assert_eq!(ecdf_tail(&ones, 1.5, 0.01).unwrap().value, 0.0);
        assert_eq!(ecdf_tail(&ones, 1.0, 0.01).unwrap().value, 0.0);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            ecdf_tail(&[1.0; 99], 0.5, 0.01),
            Err(Error::TooFewSamples { needed: 100, got: 99 })
        );
        assert!(ecdf_tail(&[1.0; 100], 0.5, 0.0).is_err());
    }

    #[test]
    fn exponential_tail_within_band() {
        let s = exp_samples(10_000, 1.0, 11);
        let est = ecdf_tail(&s, 1.0, 0.01).unwrap();
        let truth = (-1.0f64).exp();
        assert!(est.lo <= truth && truth <= est.hi, "{est:?}");
        assert!((est.hi - est.lo) <= 2.0 * dkw_half_width(10_000, 0.01) + 1e-15);
        assert!(sup_distance(&s, |t| (-t).exp()) <= dkw_half_width(10_000, 0.01));
    }

    #[test]
    fn dkw_width_value() {
        // sqrt(ln(200) / 20000)
        assert!((dkw_half_width(10_000, 0.01) - 0.016_276).abs() < 1e-6);
    }

    #[test]
    fn sup_distance_counts_both_sides_of_a_jump() {
        let s = vec![1.0, 2.0];
        // Tail 0.5 everywhere: ECDF tail is 1, 0.5, 0 -> max distance 0.5.
        assert_eq!(sup_distance(&s, |_| 0.5), 0.5);
        assert_eq!(sup_distance(&s, |t| if t < 1.5 { 0.75 } else { 0.25 }), 0.25);
    }

    #[test]
    fn kolmogorov_survival_reference_points() {
        // Classic critical values: Q(1.36) ~ 0.05, Q(1.63) ~ 0.01.
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_same_law_and_rejects_different() {
        let a = exp_samples(5_000, 1.0, 1);
        let b = exp_samples(5_000, 1.0, 2);
        let c = exp_samples(5_000, 1.2, 3);
        assert!(!ks_two_sample(&a, &b).unwrap().rejects_at(0.01));
        let diff = ks_two_sample(&a, &c).unwrap();
        assert!(diff.rejects_at(0.01), "{diff:?}");
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
    }

    #[test]
    fn ks_false_rejection_rate_is_near_level() {
        let rejections = (0..200)
            .filter(|&s| {
                let a = exp_samples(500, 1.0, 1000 + s);
                let b = exp_samples(700, 1.0, 5000 + s);
                ks_two_sample(&a, &b).unwrap().rejects_at(0.05)
            })
            .count();
        assert!(rejections <= 20, "{rejections} of 200 rejected at 5%");
    }
}
