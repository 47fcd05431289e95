//! Discrete-event simulation of `k` unit-rate exponential FIFO servers fed by
//! Poisson batches, dispatched by replication-`d` or MDS(`n`, `m`) coding.
//!
//! When removal is on, the completion trigger (a job's first finished copy
//! under replication, the `n`-th finished coded copy under MDS) cancels every
//! sibling copy still queued or in service; a preempted server starts its
//! next copy at once.
//!
//! A probe measures the sojourn of a virtual job that joins one random queue
//! without being coded or removed: the time until everything ahead of it has
//! left, plus an independent `Exp(1)` service. Probes never occupy a server
//! and draw from their own random stream, so the probe rate does not change
//! the trajectory of real jobs.

mod engine;
mod events;
pub mod stats;

pub use engine::run;

use crate::error::{invalid, Error, Result};
use crate::params::SystemParams;

pub const DEFAULT_K: u32 = 1000;
pub const DEFAULT_WARMUP: u64 = 10_000;
pub const DEFAULT_HORIZON: u64 = 200_000;
pub const DEFAULT_PROBE_RATE: f64 = 0.1;
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Dispatch strategy. Copy counts come from [`SystemParams`]: `d` for
/// replication, `n` and `m` for MDS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Each of the `n` jobs gets `d` copies on distinct servers, sampled
    /// independently per job.
    Replication,
    /// The batch becomes `n + m` coded copies on distinct servers.
    Mds,
}

impl Policy {
    pub fn label(&self, params: &SystemParams) -> String {
        match self {
            Policy::Replication => format!("rep_d{}", params.d()),
            Policy::Mds => format!("mds_m{}", params.m()),
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replication" | "rep" => Ok(Policy::Replication),
            "mds" | "coding" => Ok(Policy::Mds),
            other => Err(invalid("policy", format!("unknown policy `{other}`"))),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Replication => "replication",
            Policy::Mds => "mds",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: SystemParams,
    pub policy: Policy,
    pub removal: bool,
    /// Total number of batch arrivals generated.
    pub horizon: u64,
    /// Leading batches excluded from the samples.
    pub warmup: u64,
    /// Probability that a (recorded) batch arrival also injects a probe.
    pub probe_rate: f64,
    /// Record the completion time of every `sample_every`-th batch after
    /// warmup. Values above 1 thin out correlation between neighbours.
    pub sample_every: u64,
    pub seed: u64,
}

impl SimConfig {
    /// Removal on, default horizon, warmup and probe rate.
    pub fn new(params: SystemParams, policy: Policy, seed: u64) -> Self {
        Self {
            params,
            policy,
            removal: true,
            horizon: DEFAULT_HORIZON,
            warmup: DEFAULT_WARMUP,
            probe_rate: DEFAULT_PROBE_RATE,
            sample_every: 1,
            seed,
        }
    }

    pub fn with_horizon(mut self, horizon: u64, warmup: u64) -> Self {
        self.horizon = horizon;
        self.warmup = warmup;
        self
    }

    pub fn with_probe_rate(mut self, probe_rate: f64) -> Self {
        self.probe_rate = probe_rate;
        self
    }

    pub fn with_sample_every(mut self, sample_every: u64) -> Self {
        self.sample_every = sample_every;
        self
    }

    pub fn with_removal(mut self, removal: bool) -> Self {
        self.removal = removal;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Copies placed per batch.
    pub fn copies_per_batch(&self) -> u32 {
        match self.policy {
            Policy::Mds => self.params.n() + self.params.m(),
            Policy::Replication => self.params.n() * self.params.d(),
        }
    }

    /// Rejects configurations that cannot run or cannot be stable; returns
    /// a warning for high coded load that removal is expected to absorb.
    pub fn validate(&self) -> Result<Option<String>> {
        let p = &self.params;
        if self.warmup >= self.horizon {
            return Err(invalid(
                "warmup",
                format!("warmup {} must be below horizon {}", self.warmup, self.horizon),
            ));
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.probe_rate) {
            return Err(invalid("probe_rate", format!("must lie in [0, 1], got {}", self.probe_rate)));
        }
        if p.lambda() >= 1.0 {
            return Err(Error::Unstable { lambda: p.lambda() });
        }
        if self.policy == Policy::Mds && p.m() + p.n() > u32::from(u16::MAX) {
            return Err(invalid("m", "too many coded copies per batch"));
        }
        // Without removal every copy is served in full.
        let offered = f64::from(self.copies_per_batch()) * p.lambda() / f64::from(p.n());
        if !self.removal && offered >= 1.0 {
            return Err(invalid(
                "removal",
                format!("without removal the per-server load is {offered} >= 1"),
            ));
        }
        Ok((self.removal && offered >= 1.0).then(|| {
            format!(
                "offered copy load {offered} >= 1 per server; relying on removal for stability"
            )
        }))
    }
}

/// Event tallies for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimCounts {
    pub batches: u64,
    pub recorded_batches: u64,
    pub copies_enqueued: u64,
    pub copies_served: u64,
    pub removals: u64,
    /// Removals of a copy that was in service.
    pub preemptions: u64,
    /// Completion events discarded because their copy had been removed.
    pub stale_events: u64,
    pub probes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Batch completion times after warmup, ascending.
    pub batch_completion_samples: Vec<f64>,
    /// Probe (virtual job) sojourn times, ascending.
    pub probe_sojourn_samples: Vec<f64>,
    pub counts: SimCounts,
    pub config: SimConfig,
}

impl SimResult {
    pub fn mean_batch_completion(&self) -> f64 {
        mean(&self.batch_completion_samples)
    }

    pub fn mean_probe_sojourn(&self) -> f64 {
        mean(&self.probe_sojourn_samples)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Samples pooled from independent runs, with the seeds they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSamples {
    pub seeds: Vec<u64>,
    pub batch_completion_samples: Vec<f64>,
    pub probe_sojourn_samples: Vec<f64>,
}

pub fn pool(results: &[SimResult]) -> PooledSamples {
    let mut batch: Vec<f64> = results
        .iter()
        .flat_map(|r| r.batch_completion_samples.iter().copied())
        .collect();
    let mut probe: Vec<f64> = results
        .iter()
        .flat_map(|r| r.probe_sojourn_samples.iter().copied())
        .collect();
    stats::sort_samples(&mut batch);
    stats::sort_samples(&mut probe);
    PooledSamples {
        seeds: results.iter().map(|r| r.config.seed).collect(),
        batch_completion_samples: batch,
        probe_sojourn_samples: probe,
    }
}
