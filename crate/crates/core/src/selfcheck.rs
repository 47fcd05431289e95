//! End-to-end checks of the analytic, numerical, simulated and coding
//! components against each other. Each check reports a pass/fail line.
//!
//! Tolerances are fixed here; [`Scale`] only changes simulation and
//! Monte-Carlo sizes.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{decode, encode, Gf256, Gf65536, Scheme};
use crate::curve::uniform_grid;
use crate::error::{Error, Result};
use crate::figure::RedundancyComparison;
use crate::meanfield::{solve_virtual_tail, tail_exponent, MeanFieldProblem};
use crate::orderstats::{order_stat_tail, order_stat_tail_alternating, rep_batch_tail, rep_copy_tail};
use crate::params::SystemParams;
use crate::sim::stats::{dkw_half_width, ecdf_curve, ks_two_sample, sup_distance};
use crate::sim::{run, Policy, SimConfig};
use crate::TailCurve;

pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const FORM_AGREEMENT_TOL: f64 = 1e-10;
pub const CLOSED_FORM_TOL: f64 = 1e-6;
pub const VIRTUAL_SLOPE_RANGE: (f64, f64) = (-1.05, -0.95);
pub const BATCH_SLOPE_FACTOR: f64 = 0.9;
pub const EXPONENT_WINDOW: (f64, f64) = (10.0, 14.0);
pub const MM1_MEAN_REL_TOL: f64 = 0.02;
pub const MM1_SLOPE_REL_TOL: f64 = 0.10;
pub const SUP_DISTANCE_TOL: f64 = 0.02;
pub const DKW_DELTA: f64 = 0.01;
pub const RANDOM_LINEAR_SUCCESS: f64 = 0.999;
pub const KS_LEVEL: f64 = 0.01;
/// Batches between recorded samples in the two-sample comparison, so the
/// samples are close to independent as the KS test assumes.
pub const KS_THINNING: u64 = 10;

/// Problem sizes for the stochastic checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// The sizes the acceptance criteria are stated at.
    Full,
    /// Roughly a tenth of the work, for quick smoke runs.
    Quick,
}

impl Scale {
    fn batches(self) -> u64 {
        match self {
            Scale::Full => 200_000,
            Scale::Quick => 30_000,
        }
    }

    /// Probes are cheap and do not disturb the jobs, so the quick scale
    /// injects one per batch to keep the probe ECDF usable.
    fn probe_rate(self) -> f64 {
        match self {
            Scale::Full => crate::sim::DEFAULT_PROBE_RATE,
            Scale::Quick => 1.0,
        }
    }

    fn warmup(self) -> u64 {
        match self {
            Scale::Full => 10_000,
            Scale::Quick => 3_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    /// Wall-clock budget the check should finish within.
    pub budget: Duration,
}

impl Check {
    pub fn within_budget(&self) -> bool {
        self.elapsed <= self.budget
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] AC{} {}: {} ({:.2?}, budget {:?})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed,
            self.budget
        )
    }
}

fn timed(
    id: u32,
    title: &'static str,
    budget: Duration,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> Check {
    let start = Instant::now();
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    Check {
        id,
        title,
        passed,
        detail,
        elapsed: start.elapsed(),
        budget,
    }
}

pub fn order_statistics_identity() -> Check {
    timed(1, "order-statistics identity", Duration::from_secs(1), || {
        let (mut norm, mut gap) = (0.0f64, 0.0f64);
        for total in 1..=25u32 {
            for n in 1..=total {
                let m = total - n;
                norm = norm.max((order_stat_tail(n, m, 1.0)? - 1.0).abs());
                for step in 0..=100 {
                    let q = f64::from(step) / 100.0;
                    gap = gap.max((order_stat_tail(n, m, q)? - order_stat_tail_alternating(n, m, q)?).abs());
                }
            }
        }
        Ok((
            norm <= NORMALIZATION_TOL && gap <= FORM_AGREEMENT_TOL,
            format!("max |tail(q=1) - 1| = {norm:.2e}, max form gap = {gap:.2e}"),
        ))
    })
}

pub fn ode_matches_closed_form() -> Check {
    timed(2, "ODE vs replication closed form", Duration::from_secs(10), || {
        let mut worst = 0.0f64;
        for d in [2u32, 3, 4] {
            for lambda in [0.3, 0.5, 0.7] {
                let params = SystemParams::mean_field(lambda, 1, d - 1, d)?;
                let sol = solve_virtual_tail(&MeanFieldProblem::new(params, 15.0, 1e-3)?)?;
                for (&t, &q) in sol.virtual_tail.times().iter().zip(sol.virtual_tail.values()) {
                    worst = worst.max((q - rep_copy_tail(&params, t)?).abs());
                }
            }
        }
        Ok((worst <= CLOSED_FORM_TOL, format!("sup error {worst:.2e} over 9 (d, lambda) cells")))
    })
}

pub fn tail_exponents() -> Check {
    timed(3, "tail exponents", Duration::from_secs(10), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for m in [2u32, 3, 6] {
            let params = SystemParams::mean_field(0.5, 3, m, 3)?;
            let sol = solve_virtual_tail(&MeanFieldProblem::with_defaults(params)?)?;
            let v = tail_exponent(&sol.virtual_tail, EXPONENT_WINDOW)?;
            let b = tail_exponent(&sol.batch_tail, EXPONENT_WINDOW)?;
            ok &= (VIRTUAL_SLOPE_RANGE.0..=VIRTUAL_SLOPE_RANGE.1).contains(&v);
            ok &= b <= -BATCH_SLOPE_FACTOR * f64::from(m + 1);
            parts.push(format!("m={m}: virtual {v:.3}, batch {b:.3}"));
        }
        Ok((ok, parts.join("; ")))
    })
}

fn log_slope(curve: &TailCurve, window: (f64, f64)) -> Result<f64> {
    tail_exponent(curve, window)
}

pub fn single_queue_sanity(scale: Scale) -> Check {
    timed(4, "simulator M/M/1 sanity", Duration::from_secs(60), || {
        let params = SystemParams::new(0.5, 1, 0, 1, 200)?;
        let config = SimConfig::new(params, Policy::Mds, 4)
            .with_horizon(scale.batches(), scale.warmup())
            .with_probe_rate(1.0);
        let r = run(&config)?;
        let target = 1.0 / (1.0 - params.lambda());
        let job_mean = r.mean_batch_completion();
        let probe_mean = r.mean_probe_sojourn();
        let grid = uniform_grid(8.0, 0.1);
        let window = (1.0, 8.0);
        let job_slope = log_slope(&ecdf_curve(&r.batch_completion_samples, &grid)?, window)?;
        let probe_slope = log_slope(&ecdf_curve(&r.probe_sojourn_samples, &grid)?, window)?;
        let slope_target = -(1.0 - params.lambda());
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        let ok = rel(job_mean, target) <= MM1_MEAN_REL_TOL
            && rel(probe_mean, target) <= MM1_MEAN_REL_TOL
            && rel(job_slope, slope_target) <= MM1_SLOPE_REL_TOL
            && rel(probe_slope, slope_target) <= MM1_SLOPE_REL_TOL;
        Ok((
            ok,
            format!(
                "job mean {job_mean:.4}, probe mean {probe_mean:.4} (target {target}); \
                 slopes job {job_slope:.4}, probe {probe_slope:.4} (target {slope_target})"
            ),
        ))
    })
}

pub fn replication_closed_form(scale: Scale) -> Check {
    timed(5, "replication simulation vs closed form", Duration::from_secs(300), || {
        let params = SystemParams::new(0.5, 3, 0, 3, 1000)?;
        let config = SimConfig::new(params, Policy::Replication, 5).with_horizon(scale.batches(), scale.warmup());
        let r = run(&config)?;
        let samples = &r.batch_completion_samples;
        let sup = sup_distance(samples, |t| rep_batch_tail(&params, t).unwrap_or(f64::NAN));
        let band = dkw_half_width(samples.len(), DKW_DELTA);
        Ok((
            sup <= SUP_DISTANCE_TOL,
            format!("sup distance {sup:.4} over {} batches (DKW band {band:.4})", samples.len()),
        ))
    })
}

pub fn mds_mean_field(scale: Scale) -> Check {
    timed(6, "MDS simulation vs mean-field pipeline", Duration::from_secs(300), || {
        let params = SystemParams::new(0.5, 3, 3, 3, 1000)?;
        let sol = solve_virtual_tail(&MeanFieldProblem::with_defaults(params)?)?;
        let config = SimConfig::new(params, Policy::Mds, 6)
            .with_horizon(scale.batches(), scale.warmup())
            .with_probe_rate(scale.probe_rate());
        let r = run(&config)?;
        let batch = sup_distance(&r.batch_completion_samples, |t| sol.batch_tail.at(t));
        let probe = sup_distance(&r.probe_sojourn_samples, |t| sol.virtual_tail.at(t));
        Ok((
            batch <= SUP_DISTANCE_TOL && probe <= SUP_DISTANCE_TOL,
            format!(
                "batch sup {batch:.4} ({} samples), probe sup {probe:.4} ({} samples)",
                r.batch_completion_samples.len(),
                r.probe_sojourn_samples.len()
            ),
        ))
    })
}

pub fn figure_one_shape() -> Check {
    timed(7, "MDS vs replication crossing and dominance", Duration::from_secs(10), || {
        let fig = RedundancyComparison::figure_one(0.5)?;
        let crossings = fig.crossings(3).unwrap_or(0);
        let dominated: Vec<bool> = [4, 5, 6].iter().map(|&m| fig.mds_dominates(m) == Some(true)).collect();
        Ok((
            crossings >= 1 && dominated.iter().all(|&x| x),
            format!("m=3 crossings {crossings}; m=4,5,6 dominate replication: {dominated:?}"),
        ))
    })
}

pub fn codec_round_trips(scale: Scale) -> Check {
    timed(8, "codec round trips", Duration::from_secs(30), || {
        let mut subsets = 0usize;
        for n in 1..=4usize {
            for m in 0..=4usize {
                let jobs: Vec<Vec<u8>> = (0..n)
                    .map(|i| (0..64).map(|b| (i * 131 + b * 7 + n * m) as u8).collect())
                    .collect();
                let coded = encode::<Gf256>(&jobs, m, Scheme::SystematicVandermonde, 0)?;
                for mask in 0u32..1 << (n + m) {
                    if mask.count_ones() as usize != n {
                        continue;
                    }
                    let subset: Vec<_> = (0..n + m)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| coded[i].clone())
                        .collect();
                    if decode(&subset)? != jobs {
                        return Ok((false, format!("n={n} m={m} subset {mask:#b} decoded wrongly")));
                    }
                    subsets += 1;
                }
            }
        }

        let trials = match scale {
            Scale::Full => 10_000u64,
            Scale::Quick => 2_000,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut recovered = 0u64;
        for trial in 0..trials {
            let jobs: Vec<Vec<u8>> = (0..4).map(|i| vec![(trial as u8).wrapping_add(i); 16]).collect();
            let coded = encode::<Gf65536>(&jobs, 4, Scheme::RandomLinear, trial)?;
            let subset: Vec<_> = sample(&mut rng, 8, 4).iter().map(|i| coded[i].clone()).collect();
            match decode(&subset) {
                Ok(out) if out == jobs => recovered += 1,
                Ok(_) => return Ok((false, format!("trial {trial} decoded wrong payloads"))),
                Err(Error::Unrecoverable { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let rate = recovered as f64 / trials as f64;
        Ok((
            rate >= RANDOM_LINEAR_SUCCESS,
            format!("{subsets} systematic subsets exact; random-linear GF(2^16) success {rate:.4} over {trials} trials"),
        ))
    })
}

pub fn replication_is_coding(scale: Scale) -> Check {
    timed(9, "replication-d vs MDS(1, d-1)", Duration::from_secs(300), || {
        let recorded = match scale {
            Scale::Full => 100_000,
            Scale::Quick => 20_000,
        };
        let mut ok = true;
        let mut parts = Vec::new();
        for d in [2u32, 3] {
            let params = SystemParams::new(0.5, 1, d - 1, d, 1000)?;
            let base = SimConfig::new(params, Policy::Mds, 0)
                .with_horizon(KS_THINNING * recorded + 10_000, 10_000)
                .with_sample_every(KS_THINNING);
            let mds = run(&base.with_seed(90 + u64::from(d)))?;
            let rep = run(&SimConfig { policy: Policy::Replication, ..base }.with_seed(190 + u64::from(d)))?;
            let ks = ks_two_sample(&mds.batch_completion_samples, &rep.batch_completion_samples)?;
            ok &= !ks.rejects_at(KS_LEVEL);
            parts.push(format!("d={d}: D={:.4}, p={:.3}", ks.statistic, ks.p_value));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Every check, in criterion order.
pub fn run_all(scale: Scale) -> Vec<Check> {
    vec![
        order_statistics_identity(),
        ode_matches_closed_form(),
        tail_exponents(),
        single_queue_sanity(scale),
        replication_closed_form(scale),
        mds_mean_field(scale),
        figure_one_shape(),
        codec_round_trips(scale),
        replication_is_coding(scale),
    ]
}
