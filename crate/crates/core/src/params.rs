//! Model constants shared by every part of the crate.

use crate::error::{invalid, Result};

/// Constants of a `k`-server system fed by Poisson batches of `n` jobs.
///
/// Batches arrive at rate `lambda * k / n`, so `lambda` is the per-server job
/// arrival rate. Under MDS coding each batch becomes `n + m` coded copies;
/// under replication each job is copied `d` times. `alpha` is never stored:
/// it is always recomputed from `lambda`, `n` and `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    lambda: f64,
    n: u32,
    m: u32,
    d: u32,
    k: u32,
}

impl SystemParams {
    pub fn new(lambda: f64, n: u32, m: u32, d: u32, k: u32) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive and finite, got {lambda}")));
        }
        if n == 0 {
            return Err(invalid("n", "batch size must be at least 1"));
        }
        if d == 0 {
            return Err(invalid("d", "replication factor must be at least 1"));
        }
        let needed = (n + m).max(d);
        if k < needed {
            return Err(invalid(
                "k",
                format!("need at least max(n+m, d) = {needed} servers, got {k}"),
            ));
        }
        Ok(Self { lambda, n, m, d, k })
    }

    /// Parameters for the analytic formulas, where the server count only has
    /// to be large enough to host one batch.
    pub fn mean_field(lambda: f64, n: u32, m: u32, d: u32) -> Result<Self> {
        Self::new(lambda, n, m, d, (n + m).max(d))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Per-queue arrival rate of coded copies, `lambda * (n + m) / n`.
    pub fn alpha(&self) -> f64 {
        self.lambda * f64::from(self.n + self.m) / f64::from(self.n)
    }

    /// Rate of batch arrivals into the whole system, `lambda * k / n`.
    pub fn batch_rate(&self) -> f64 {
        self.lambda * f64::from(self.k) / f64::from(self.n)
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.n, self.m, self.d, self.k)
    }

    pub fn with_m(self, m: u32) -> Result<Self> {
        Self::new(self.lambda, self.n, m, self.d, self.k)
    }

    pub fn with_d(self, d: u32) -> Result<Self> {
        Self::new(self.lambda, self.n, self.m, d, self.k)
    }

    pub fn with_k(self, k: u32) -> Result<Self> {
        Self::new(self.lambda, self.n, self.m, self.d, k)
    }
}
