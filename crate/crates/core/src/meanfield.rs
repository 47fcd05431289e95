//! Mean-field tail of a virtual job's sojourn under MDS coding with removal.
//!
//! Let `q(t) = P(V > t)` be the sojourn tail of a job that is neither coded
//! nor removed. In the large-`k` limit it solves
//!
//! ```text
//! q' = -q + alpha (n+m-1) C(n+m-2, n-1)
//!           * sum_{i=0}^{n-1} C(n-1, i) (-1)^i q^{m+i+1} / ((m+i)(m+i+1)),
//! q(0) = 1,   alpha = lambda (n+m) / n,
//! ```
//!
//! and the batch completion tail is the `n`-th order statistic of `n + m`
//! copies, `order_stat_tail(n, m, q(t))`.
//!
//! The polynomial in the drift term is `alpha` times the integral over
//! `[0, q]` of `P(X_(n:n+m-1) > .)`. Integrating the binomial form term by term
//! gives the positive-term rearrangement used by [`ode_rhs`]:
//!
//! ```text
//! q' = -q + alpha / (n+m) * E[(B - m)^+],   B ~ Binomial(n+m, q).
//! ```
//!
//! With `n = 1, m = d - 1` this collapses to `q' = -q + lambda q^d`, whose
//! solution is the replication closed form in [`crate::orderstats`].

use crate::curve::{uniform_grid, TailCurve};
use crate::error::{check_probability, invalid, Error, Result};
use crate::numeric::{binomial, DoubleDouble};
use crate::orderstats::{check_coded, order_stat_tail};
use crate::params::SystemParams;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 15.0;

/// An initial-value problem for the virtual-job tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldProblem {
    params: SystemParams,
    t_max: f64,
    step: f64,
}

impl MeanFieldProblem {
    pub fn new(params: SystemParams, t_max: f64, step: f64) -> Result<Self> {
        check_coded(params.n(), params.m())?;
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid("step", format!("must be positive, got {step}")));
        }
        let min_horizon = 10.0 / f64::from(params.m() + 1);
        if !(t_max.is_finite() && t_max >= min_horizon) {
            return Err(invalid(
                "t_max",
                format!("must be at least 10/(m+1) = {min_horizon}, got {t_max}"),
            ));
        }
        if step > t_max {
            return Err(invalid("step", format!("{step} exceeds t_max = {t_max}")));
        }
        let problem = Self { params, t_max, step };
        if let Some(msg) = problem.load_warning() {
            log::warn!("{msg}");
        }
        Ok(problem)
    }

    /// Horizon 15 and step 1e-3.
    pub fn with_defaults(params: SystemParams) -> Result<Self> {
        Self::new(params, DEFAULT_HORIZON, DEFAULT_STEP)
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Set when the coded arrival rate per queue reaches one. Removal keeps
    /// such systems stable in practice, so this is advisory only.
    pub fn load_warning(&self) -> Option<String> {
        let alpha = self.params.alpha();
        (alpha >= 1.0).then(|| {
            format!(
                "coded arrival rate lambda*(n+m)/n = {alpha} >= 1 (lambda={}, n={}, m={})",
                self.params.lambda(),
                self.params.n(),
                self.params.m()
            )
        })
    }
}

/// Right-hand side of the virtual-tail ODE at `q`.
pub fn ode_rhs(problem: &MeanFieldProblem, q: f64) -> Result<f64> {
    check_probability("q", q)?;
    Ok(drift(&problem.params, q))
}

fn drift(params: &SystemParams, q: f64) -> f64 {
    let (n, m) = (params.n(), params.m());
    let total = n + m;
    let fail = 1.0 - q;
    let excess: f64 = (m + 1..=total)
        .map(|s| {
            f64::from(s - m)
                * binomial(total, s)
                * q.powi(s as i32)
                * fail.powi((total - s) as i32)
        })
        .sum();
    -q + params.alpha() / f64::from(total) * excess
}

/// [`ode_rhs`] evaluated through the textbook alternating sum in
/// double-double arithmetic. Undefined for `m = 0`.
pub fn ode_rhs_alternating(problem: &MeanFieldProblem, q: f64) -> Result<f64> {
    check_probability("q", q)?;
    let (n, m) = (problem.params.n(), problem.params.m());
    if m == 0 {
        return Err(invalid("m", "alternating form divides by m and needs m >= 1"));
    }
    let lead = f64::from(n + m - 1) * binomial(n + m - 2, n - 1);
    let qd = DoubleDouble::from_f64(q);
    let mut acc = DoubleDouble::ZERO;
    for i in 0..n {
        let power = m + i + 1;
        let term = qd
            .powi(power)
            .mul_f64(lead * binomial(n - 1, i))
            .div_f64(f64::from(m + i) * f64::from(power));
        acc = if i % 2 == 0 { acc.add(term) } else { acc.add(term.neg()) };
    }
    Ok(acc
        .mul_f64(problem.params.alpha())
        .add(DoubleDouble::from_f64(-q))
        .to_f64())
}

/// Virtual-job tail and the MDS batch tail built from it, on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualTailSolution {
    pub virtual_tail: TailCurve,
    pub batch_tail: TailCurve,
}

/// Integrates the ODE from `q(0) = 1` with fixed-step classical RK4,
/// clamping into `[0, 1]` after every step.
pub fn solve_virtual_tail(problem: &MeanFieldProblem) -> Result<VirtualTailSolution> {
    let params = problem.params;
    let h = problem.step;
    let times = uniform_grid(problem.t_max, h);
    let f = |q: f64| drift(&params, q.clamp(0.0, 1.0));

    let mut values = Vec::with_capacity(times.len());
    let mut q = 1.0;
    values.push(q);
    for &t in &times[..times.len() - 1] {
        let k1 = f(q);
        let k2 = f(q + 0.5 * h * k1);
        let k3 = f(q + 0.5 * h * k2);
        let k4 = f(q + h * k3);
        let next = q + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::Integration { step: h, t: t + h, q: next });
        }
        q = next.clamp(0.0, 1.0);
        values.push(q);
    }

    let virtual_tail = TailCurve::new(times, values)?;
    let batch_tail = virtual_tail.map(|q| order_stat_tail(params.n(), params.m(), q))?;
    debug_assert!(virtual_tail
        .values()
        .iter()
        .zip(batch_tail.values())
        .all(|(&q, &b)| order_stat_tail(params.n(), params.m(), q) == Ok(b)));
    Ok(VirtualTailSolution {
        virtual_tail,
        batch_tail,
    })
}

/// Least-squares slope of `ln P(X > t)` against `t` over the grid points in
/// `window`. A tail decaying like `e^{-c t}` yields `-c`.
pub fn tail_exponent(curve: &TailCurve, window: (f64, f64)) -> Result<f64> {
    let (start, end) = window;
    let bad = |reason: &str| Error::InvalidWindow {
        start,
        end,
        reason: reason.to_string(),
    };
    if start.is_nan() || end.is_nan() || start >= end {
        return Err(bad("start must precede end"));
    }
    let slack = 1e-9 * curve.t_max().abs().max(1.0);
    if start < curve.times()[0] - slack || end > curve.t_max() + slack {
        return Err(bad("window extends beyond the curve's grid"));
    }
    let points: Vec<(f64, f64)> = curve
        .times()
        .iter()
        .zip(curve.values())
        .filter(|(&t, _)| t >= start - slack && t <= end + slack)
        .map(|(&t, &v)| (t, v))
        .collect();
    if points.len() < 2 {
        return Err(bad("fewer than two grid points inside the window"));
    }
    if points.iter().any(|&(_, v)| v <= 0.0) {
        return Err(bad("curve is not strictly positive on the window"));
    }
    let count = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1.ln()).sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in &points {
        let dt = t - mean_t;
        sxy += dt * (v.ln() - mean_y);
        sxx += dt * dt;
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn problem(lambda: f64, n: u32, m: u32) -> MeanFieldProblem {
        MeanFieldProblem::with_defaults(SystemParams::mean_field(lambda, n, m, 2).unwrap()).unwrap()
    }

    fn closed_form(lambda: f64, d: u32, t: f64) -> f64 {
        let dm1 = f64::from(d - 1);
        (lambda + (1.0 - lambda) * (t * dm1).exp()).powf(-1.0 / dm1)
    }

    #[test]
    fn rhs_examples() {
        for (n, m) in [(1, 0), (3, 3), (5, 1)] {
            assert_eq!(ode_rhs(&problem(0.5, n, m), 0.0).unwrap(), 0.0);
        }
        for d in 2..=5u32 {
            for lambda in [0.2, 0.5, 0.8] {
                let p = problem(lambda, 1, d - 1);
                for q in [0.1, 0.5, 0.9, 1.0] {
                    assert_relative_eq!(
                        ode_rhs(&p, q).unwrap(),
                        -q + lambda * q.powi(d as i32),
                        epsilon = 1e-15
                    );
                }
            }
        }
        assert_relative_eq!(ode_rhs(&problem(0.5, 1, 1), 1.0).unwrap(), -0.5, epsilon = 1e-15);
        assert!(ode_rhs(&problem(0.5, 1, 1), 1.1).is_err());
    }

    #[test]
    fn rhs_without_redundancy_is_single_queue_drift() {
        // m = 0: every queue is an M/M/1 queue with load lambda.
        for n in 1..=6 {
            let p = problem(0.4, n, 0);
            for q in [0.2, 0.7] {
                assert_relative_eq!(ode_rhs(&p, q).unwrap(), -0.6 * q, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rhs_forms_agree() {
        for n in 1..=12 {
            for m in 1..=12 {
                let p = problem(0.5, n, m);
                for i in 0..=50 {
                    let q = f64::from(i) / 50.0;
                    let stable = ode_rhs(&p, q).unwrap();
                    let literal = ode_rhs_alternating(&p, q).unwrap();
                    assert!((stable - literal).abs() < 1e-11, "n={n} m={m} q={q}");
                }
            }
        }
        assert!(ode_rhs_alternating(&problem(0.5, 2, 0), 0.5).is_err());
    }

    #[test]
    fn rhs_negative_on_open_interval_when_lambda_below_one() {
        for (n, m) in [(3, 2), (3, 6), (10, 10)] {
            let p = problem(0.9, n, m);
            for i in 1..=100 {
                let q = f64::from(i) / 100.0;
                assert!(ode_rhs(&p, q).unwrap() <= -(1.0 - 0.9) * q + 1e-15);
            }
        }
    }

    #[test]
    fn problem_validation() {
        let params = SystemParams::mean_field(0.5, 3, 3, 2).unwrap();
        assert!(MeanFieldProblem::new(params, 15.0, 0.0).is_err());
        assert!(MeanFieldProblem::new(params, 15.0, -1e-3).is_err());
        assert!(MeanFieldProblem::new(params, 2.0, 1e-3).is_err());
        assert!(MeanFieldProblem::new(params, 2.5, 1e-3).is_ok());
        assert!(MeanFieldProblem::new(params, 15.0, 20.0).is_err());
        let big = SystemParams::mean_field(0.5, 20, 11, 2).unwrap();
        assert!(MeanFieldProblem::with_defaults(big).is_err());
    }

    #[test]
    fn load_warning_tracks_coded_rate() {
        assert!(problem(0.5, 3, 2).load_warning().is_none());
        assert!(problem(0.5, 3, 3).load_warning().is_some());
        assert!(problem(0.5, 3, 6).load_warning().is_some());
    }

    #[test]
    fn solution_matches_single_copy_closed_form() {
        let sol = solve_virtual_tail(&problem(0.5, 1, 1)).unwrap();
        assert_eq!(sol.virtual_tail.values()[0], 1.0);
        let at = sol.virtual_tail.at(3f64.ln());
        assert!((at - 0.5).abs() < 1e-6);
        for (&t, &q) in sol.virtual_tail.times().iter().zip(sol.virtual_tail.values()) {
            assert!((q - 1.0 / (0.5 + 0.5 * t.exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn batch_tail_crosses_below_virtual_tail() {
        // order_stat_tail(3, 3, q) - q changes sign once on (0, 1); locate the
        // crossing by bisection on a direct binomial sum.
        let direct = |q: f64| (4..=6).map(|s| binomial(6, s) * q.powi(s as i32) * (1.0 - q).powi(6 - s as i32)).sum::<f64>();
        let (mut lo, mut hi) = (0.01, 0.99);
        assert!(direct(lo) < lo && direct(hi) > hi);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if direct(mid) < mid { lo = mid } else { hi = mid }
        }
        let crossing = lo;

        let sol = solve_virtual_tail(&problem(0.5, 3, 3)).unwrap();
        assert_eq!(sol.batch_tail.values()[0], 1.0);
        for (&q, &b) in sol.virtual_tail.values()[1..].iter().zip(&sol.batch_tail.values()[1..]) {
            if q > 0.0 && q < crossing - 1e-9 {
                assert!(b < q);
            } else if q > crossing + 1e-9 && q < 1.0 {
                assert!(b > q);
            }
        }
        assert!(sol.virtual_tail.values().last().unwrap() < &crossing);
    }

    #[test]
    fn batch_tail_is_order_statistic_of_virtual_tail() {
        let sol = solve_virtual_tail(&problem(0.4, 4, 2)).unwrap();
        for (&q, &b) in sol.virtual_tail.values().iter().zip(sol.batch_tail.values()) {
            assert_eq!(b, order_stat_tail(4, 2, q).unwrap());
        }
    }

    #[test]
    fn step_halving_shows_fourth_order() {
        // Compare three step sizes on the same grid points.
        let params = SystemParams::mean_field(0.6, 3, 3, 2).unwrap();
        let solve = |h: f64| solve_virtual_tail(&MeanFieldProblem::new(params, 4.0, h).unwrap()).unwrap();
        let (coarse, mid, fine) = (solve(0.08), solve(0.04), solve(0.02));
        let err = |a: &VirtualTailSolution, b: &VirtualTailSolution| {
            a.virtual_tail
                .times()
                .iter()
                .zip(a.virtual_tail.values())
                .map(|(&t, &q)| (q - b.virtual_tail.at(t)).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(&coarse, &mid) / err(&mid, &fine)).log2();
        assert!(order >= 3.5, "observed order {order}");
    }

    #[test]
    fn closed_form_agreement_small_grid() {
        for d in [2u32, 3, 4] {
            for lambda in [0.3, 0.5, 0.7] {
                let sol = solve_virtual_tail(&problem(lambda, 1, d - 1)).unwrap();
                let sup = sol
                    .virtual_tail
                    .times()
                    .iter()
                    .zip(sol.virtual_tail.values())
                    .map(|(&t, &q)| (q - closed_form(lambda, d, t)).abs())
                    .fold(0.0, f64::max);
                assert!(sup <= 1e-6, "d={d} lambda={lambda}: {sup}");
            }
        }
    }

    #[test]
    fn tail_exponent_of_exact_exponential() {
        let times = uniform_grid(10.0, 0.01);
        let curve = TailCurve::from_fn(times, |t| Ok((-2.0 * t).exp())).unwrap();
        let slope = tail_exponent(&curve, (0.0, 10.0)).unwrap();
        assert!((slope + 2.0).abs() < 1e-9);
    }

    #[test]
    fn tail_exponent_of_single_copy_solution() {
        let sol = solve_virtual_tail(&problem(0.5, 1, 1)).unwrap();
        let v = tail_exponent(&sol.virtual_tail, (8.0, 12.0)).unwrap();
        let b = tail_exponent(&sol.batch_tail, (8.0, 12.0)).unwrap();
        assert!((-1.05..=-0.95).contains(&v), "{v}");
        assert!((-2.1..=-1.9).contains(&b), "{b}");
    }

    #[test]
    fn tail_exponent_rejects_bad_windows() {
        let times = uniform_grid(5.0, 0.5);
        let curve = TailCurve::from_fn(times, |t| Ok(if t > 3.0 { 0.0 } else { (-t).exp() })).unwrap();
        assert!(tail_exponent(&curve, (1.0, 1.0)).is_err());
        assert!(tail_exponent(&curve, (1.0, 6.0)).is_err());
        assert!(tail_exponent(&curve, (2.0, 4.0)).is_err());
        assert!(tail_exponent(&curve, (1.1, 1.3)).is_err());
        assert!(tail_exponent(&curve, (0.0, 3.0)).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn trajectories_monotone_and_bounded(n in 1u32..6, m in 0u32..6, lambda in 0.05f64..0.95) {
            let params = SystemParams::mean_field(lambda, n, m, 2).unwrap();
            let sol = solve_virtual_tail(&MeanFieldProblem::new(params, 12.0, 1e-2).unwrap()).unwrap();
            for curve in [&sol.virtual_tail, &sol.batch_tail] {
                prop_assert_eq!(curve.values()[0], 1.0);
                prop_assert!(curve.values().windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }
}
