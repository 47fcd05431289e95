//! Closed-form completion-time tails for replication and MDS coding.
//!
//! Two families of formulas live here:
//!
//! * replication-`d` with redundant removal, where each job finishes with its
//!   first copy and a batch of `n` jobs finishes with its slowest job;
//! * the `n`-th order statistic of `n + m` i.i.d. sojourn times, which is the
//!   completion time of an MDS-coded batch.
//!
//! The order-statistic tail is written in the literature as an alternating
//! sum. That sum cancels catastrophically once `n` grows past roughly 15, so
//! [`order_stat_tail`] evaluates the equivalent binomial upper tail
//!
//! ```text
//! P(C > t) = sum_{j=0}^{n-1} C(n+m, j) (1-q)^j q^(n+m-j),   q = P(V > t)
//! ```
//!
//! whose terms are all non-negative. The alternating form is kept in
//! [`order_stat_tail_alternating`], evaluated in double-double arithmetic, so
//! tests can check the two agree.

use crate::error::{check_probability, Error, Result};
use crate::numeric::{binomial, binomial_upper_tail, DoubleDouble};
use crate::params::SystemParams;

/// Largest `n + m` accepted by the order-statistic routines.
pub const MAX_CODED: u32 = 30;

pub(crate) fn check_coded(n: u32, m: u32) -> Result<()> {
    if n == 0 {
        return Err(crate::error::invalid("n", "batch size must be at least 1"));
    }
    if n + m > MAX_CODED {
        return Err(Error::TooManyCopies {
            total: n + m,
            max: MAX_CODED,
        });
    }
    Ok(())
}

fn check_replication(params: &SystemParams, t: f64) -> Result<()> {
    if params.d() < 2 {
        return Err(Error::UndefinedForSingleCopy);
    }
    if params.lambda() >= 1.0 {
        return Err(Error::Unstable {
            lambda: params.lambda(),
        });
    }
    if t.is_nan() || t < 0.0 {
        return Err(crate::error::invalid("t", format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// `1 - (1 - x)^n` without cancellation for small `x`.
fn at_least_one_of(x: f64, n: u32) -> f64 {
    -(f64::from(n) * (-x).ln_1p()).exp_m1()
}

/// Mean-field tail of one copy's sojourn under replication-`d` with removal,
/// `(lambda + (1 - lambda) e^{t (d-1)})^{-1/(d-1)}`.
pub fn rep_copy_tail(params: &SystemParams, t: f64) -> Result<f64> {
    check_replication(params, t)?;
    let lambda = params.lambda();
    let dm1 = f64::from(params.d() - 1);
    let x = t * dm1;
    // log(lambda + (1-lambda) e^x) = x + log(1 - lambda + lambda e^-x)
    let log_denominator = x + (1.0 - lambda + lambda * (-x).exp()).ln();
    Ok((-log_denominator / dm1).exp().min(1.0))
}

/// Tail of a single job's completion time under replication-`d`:
/// `(lambda + (1 - lambda) e^{t (d-1)})^{-d/(d-1)}`.
///
/// Rejects `d = 1` (the exponent is undefined) and `lambda >= 1`.
pub fn rep_single_tail(params: &SystemParams, t: f64) -> Result<f64> {
    let q = rep_copy_tail(params, t)?;
    Ok(q.powi(params.d() as i32))
}

/// Tail of a batch's completion time under replication-`d`: the maximum of
/// `n` independent single-job completion times, `1 - (1 - P(R1 > t))^n`.
pub fn rep_batch_tail(params: &SystemParams, t: f64) -> Result<f64> {
    let single = rep_single_tail(params, t)?;
    Ok(at_least_one_of(single, params.n()))
}

/// `P(n-th smallest of n + m i.i.d. variables > t)` given the per-variable
/// tail `q = P(X > t)`.
pub fn order_stat_tail(n: u32, m: u32, q: f64) -> Result<f64> {
    check_coded(n, m)?;
    check_probability("q", q)?;
    // The n-th order statistic exceeds t iff at least m+1 variables do.
    Ok(binomial_upper_tail(n + m, m + 1, q))
}

/// The same quantity as [`order_stat_tail`], evaluated through the textbook
/// alternating sum
/// `(n+m) C(n+m-1, n-1) sum_i C(n-1, i) (-1)^i q^{m+i+1} / (m+i+1)`.
///
/// Every term is carried in double-double precision. Intended as a
/// cross-check, not for production use.
pub fn order_stat_tail_alternating(n: u32, m: u32, q: f64) -> Result<f64> {
    check_coded(n, m)?;
    check_probability("q", q)?;
    let lead = f64::from(n + m) * binomial(n + m - 1, n - 1);
    let q = DoubleDouble::from_f64(q);
    let mut acc = DoubleDouble::ZERO;
    for i in 0..n {
        let power = m + i + 1;
        let term = q
            .powi(power)
            .mul_f64(lead * binomial(n - 1, i))
            .div_f64(f64::from(power));
        acc = if i % 2 == 0 { acc.add(term) } else { acc.add(term.neg()) };
    }
    Ok(acc.to_f64())
}

/// Leading small-`q` term of the MDS batch tail,
/// `(n+m) C(n+m-1, n-1) q^{m+1} / (m+1)`.
pub fn mds_leading_term(n: u32, m: u32, q: f64) -> Result<f64> {
    check_coded(n, m)?;
    check_probability("q", q)?;
    let coefficient = f64::from(n + m) * binomial(n + m - 1, n - 1) / f64::from(m + 1);
    Ok(coefficient * q.powi((m + 1) as i32))
}

/// Batch tail when each of `n` jobs finishes with the fastest of `d` i.i.d.
/// copies with tail `fbar`: `1 - (1 - fbar^d)^n`, asymptotically `n fbar^d`.
pub fn rep_heuristic_tail(n: u32, d: u32, fbar: f64) -> Result<f64> {
    check_probability("fbar", fbar)?;
    Ok(at_least_one_of(fbar.powi(d as i32), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(lambda: f64, n: u32, d: u32) -> SystemParams {
        SystemParams::mean_field(lambda, n, 0, d).unwrap()
    }

    /// Enumerates which of the `n + m` variables exceed `t`; the `n`-th order
    /// statistic exceeds `t` iff fewer than `n` of them are at or below it.
    fn brute_force_order_stat(n: u32, m: u32, q: f64) -> f64 {
        let total = n + m;
        (0u32..1 << total)
            .filter(|mask| total - mask.count_ones() < n)
            .map(|mask| {
                let above = mask.count_ones() as i32;
                q.powi(above) * (1.0 - q).powi(total as i32 - above)
            })
            .sum()
    }

    #[test]
    fn rep_single_tail_examples() {
        let p = params(0.5, 1, 2);
        assert_eq!(rep_single_tail(&p, 0.0).unwrap(), 1.0);
        assert_relative_eq!(rep_single_tail(&p, 3f64.ln()).unwrap(), 0.25, epsilon = 1e-15);
        // Nearly empty system: minimum of d unit-rate exponentials.
        for d in 2..=5 {
            let p = params(1e-12, 1, d);
            for t in [0.3, 1.0, 2.5] {
                assert_relative_eq!(
                    rep_single_tail(&p, t).unwrap(),
                    (-f64::from(d) * t).exp(),
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn rep_single_tail_errors() {
        assert_eq!(
            rep_single_tail(&params(0.5, 1, 1), 1.0),
            Err(Error::UndefinedForSingleCopy)
        );
        assert_eq!(
            rep_single_tail(&params(1.0, 1, 2), 1.0),
            Err(Error::Unstable { lambda: 1.0 })
        );
        assert!(rep_single_tail(&params(0.5, 1, 2), -1.0).is_err());
    }

    #[test]
    fn rep_single_tail_far_tail_is_finite() {
        let p = params(0.5, 1, 3);
        let v = rep_single_tail(&p, 400.0).unwrap();
        assert!((0.0..1e-300).contains(&v));
    }

    #[test]
    fn rep_batch_tail_examples() {
        let t = 3f64.ln();
        assert_eq!(rep_batch_tail(&params(0.5, 4, 3), 0.0).unwrap(), 1.0);
        assert_relative_eq!(rep_batch_tail(&params(0.5, 1, 2), t).unwrap(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(rep_batch_tail(&params(0.5, 2, 2), t).unwrap(), 0.4375, epsilon = 1e-15);
    }

    #[test]
    fn rep_batch_tail_keeps_precision_deep_in_tail() {
        // 1 - (1 - x)^3 rounds to zero here when evaluated naively.
        let p = params(0.5, 3, 3);
        let single = rep_single_tail(&p, 13.0).unwrap();
        let batch = rep_batch_tail(&p, 13.0).unwrap();
        assert!(single < 1e-16);
        assert_relative_eq!(batch, 3.0 * single, max_relative = 1e-12);
    }

    #[test]
    fn order_stat_tail_examples() {
        for (n, m) in [(1, 0), (3, 2), (7, 9)] {
            assert_relative_eq!(order_stat_tail(n, m, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        }
        for m in 0..6 {
            for q in [0.0, 0.1, 0.37, 0.9] {
                assert_relative_eq!(
                    order_stat_tail(1, m, q).unwrap(),
                    q.powi(m as i32 + 1),
                    max_relative = 1e-14
                );
            }
        }
        // 6 (q^2/2 - q^3/3) = 3q^2 - 2q^3 at q = 1/2.
        assert_relative_eq!(order_stat_tail(2, 1, 0.5).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn order_stat_tail_matches_enumeration() {
        for n in 1..=6 {
            for m in 0..=6 {
                for q in [0.0, 0.05, 0.3, 0.5, 0.77, 0.99, 1.0] {
                    assert_relative_eq!(
                        order_stat_tail(n, m, q).unwrap(),
                        brute_force_order_stat(n, m, q),
                        epsilon = 1e-14
                    );
                }
            }
        }
    }

    #[test]
    fn order_stat_tail_errors() {
        assert_eq!(
            order_stat_tail(2, 1, 1.2),
            Err(Error::Domain { what: "q", value: 1.2 })
        );
        assert!(order_stat_tail(2, 1, -0.1).is_err());
        assert!(order_stat_tail(2, 1, f64::NAN).is_err());
        assert_eq!(
            order_stat_tail(20, 11, 0.5),
            Err(Error::TooManyCopies { total: 31, max: 30 })
        );
        assert!(order_stat_tail(0, 1, 0.5).is_err());
    }

    #[test]
    fn alternating_form_examples() {
        assert_relative_eq!(order_stat_tail_alternating(1, 2, 0.3).unwrap(), 0.027, epsilon = 1e-15);
        assert_relative_eq!(order_stat_tail_alternating(2, 1, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        let a = order_stat_tail_alternating(3, 3, 0.9).unwrap();
        assert!((a - brute_force_order_stat(3, 3, 0.9)).abs() < 1e-10);
    }

    #[test]
    fn forms_agree_on_grid() {
        for total in 1..=25u32 {
            for n in 1..=total {
                let m = total - n;
                assert!((order_stat_tail(n, m, 1.0).unwrap() - 1.0).abs() <= 1e-12);
                for step in 0..=100 {
                    let q = f64::from(step) / 100.0;
                    let stable = order_stat_tail(n, m, q).unwrap();
                    let literal = order_stat_tail_alternating(n, m, q).unwrap();
                    assert!(
                        (stable - literal).abs() <= 1e-10,
                        "n={n} m={m} q={q}: {stable} vs {literal}"
                    );
                }
            }
        }
    }

    #[test]
    fn order_stat_tail_monotone_in_n_at_fixed_total() {
        for total in 2..=20u32 {
            for q in [0.1, 0.5, 0.9] {
                let vals: Vec<f64> = (1..=total)
                    .map(|n| order_stat_tail(n, total - n, q).unwrap())
                    .collect();
                assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-15), "{vals:?}");
            }
        }
    }

    #[test]
    fn leading_term_examples() {
        for q in [0.0, 0.2, 0.8] {
            assert_eq!(mds_leading_term(1, 0, q).unwrap(), q);
        }
        let q = 0.01;
        let lead = mds_leading_term(2, 1, q).unwrap();
        assert_relative_eq!(lead, 3e-4, max_relative = 1e-12);
        let exact = order_stat_tail(2, 1, q).unwrap();
        assert_relative_eq!(lead - exact, 2.0 * q.powi(3), max_relative = 1e-6);

        let q = 0.001;
        assert_relative_eq!(mds_leading_term(3, 3, q).unwrap(), 15.0 * q.powi(4), max_relative = 1e-12);
        let ratio = mds_leading_term(3, 3, q).unwrap() / order_stat_tail(3, 3, q).unwrap();
        assert!((ratio - 1.0).abs() < 1e-2);
        assert!(mds_leading_term(3, 3, 1.5).is_err());
    }

    #[test]
    fn leading_term_ratio_tends_to_one() {
        for (n, m) in [(2, 1), (3, 3), (5, 2), (10, 4)] {
            let mut prev = f64::INFINITY;
            for q in [1e-2, 1e-3, 1e-4, 1e-5] {
                let gap = (mds_leading_term(n, m, q).unwrap() / order_stat_tail(n, m, q).unwrap() - 1.0).abs();
                assert!(gap < prev);
                prev = gap;
            }
            assert!(prev < 1e-3);
        }
    }

    #[test]
    fn heuristic_examples() {
        assert_eq!(rep_heuristic_tail(1, 1, 0.3).unwrap(), 0.3);
        assert_relative_eq!(rep_heuristic_tail(2, 2, 0.5).unwrap(), 0.4375, epsilon = 1e-15);
        let v = rep_heuristic_tail(3, 3, 0.01).unwrap();
        assert_relative_eq!(v, 3e-6, max_relative = 1e-5);
        assert!(rep_heuristic_tail(3, 3, 1.01).is_err());
    }

    #[test]
    fn mds_leading_term_beats_replication_at_small_q() {
        let q = 1e-3;
        assert!(mds_leading_term(3, 3, q).unwrap() <= rep_heuristic_tail(3, 3, q).unwrap());
    }

    proptest! {
        #[test]
        fn order_stat_tail_nondecreasing_in_q(n in 1u32..15, m in 0u32..15, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let f_lo = order_stat_tail(n, m, lo).unwrap();
            let f_hi = order_stat_tail(n, m, hi).unwrap();
            prop_assert!(f_lo <= f_hi + 1e-15);
            prop_assert!((0.0..=1.0).contains(&f_lo));
        }

        #[test]
        fn replication_is_coding_with_one_job(d in 1u32..12, q in 0.0f64..=1.0) {
            let coded = order_stat_tail(1, d - 1, q).unwrap();
            prop_assert!((coded - q.powi(d as i32)).abs() <= 1e-15 * q.powi(d as i32).max(1e-300));
        }

        #[test]
        fn single_job_batch_equals_single_tail(lambda in 0.01f64..0.99, d in 2u32..6, t in 0.0f64..20.0) {
            let p = params(lambda, 1, d);
            let single = rep_single_tail(&p, t).unwrap();
            prop_assert!((rep_batch_tail(&p, t).unwrap() - single).abs() <= 1e-14 * single);
        }

        #[test]
        fn rep_single_tail_nonincreasing(lambda in 0.01f64..0.99, d in 2u32..6, t in 0.0f64..20.0, dt in 0.0f64..2.0) {
            let p = params(lambda, 1, d);
            prop_assert!(rep_single_tail(&p, t + dt).unwrap() <= rep_single_tail(&p, t).unwrap());
        }
    }
}
