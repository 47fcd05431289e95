//! Theory curves for comparing replication-`d` with MDS(`n`, `m`) coding.

use crate::curve::{uniform_grid, TailCurve};
use crate::error::Result;
use crate::meanfield::{solve_virtual_tail, MeanFieldProblem};
use crate::orderstats::rep_batch_tail;
use crate::params::SystemParams;

/// Batch-completion tails on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyComparison {
    pub lambda: f64,
    pub n: u32,
    pub d: u32,
    pub replication: TailCurve,
    /// `(m, tail)` pairs in the order requested.
    pub mds: Vec<(u32, TailCurve)>,
}

impl RedundancyComparison {
    /// Solves the mean-field ODE for each `m` on `[0, t_max]` with integrator
    /// step `step`, and samples the replication closed form on the same grid.
    pub fn compute(lambda: f64, n: u32, d: u32, ms: &[u32], t_max: f64, step: f64) -> Result<Self> {
        let rep_params = SystemParams::mean_field(lambda, n, 0, d)?;
        let grid = uniform_grid(t_max, step);
        let replication = TailCurve::from_fn(grid, |t| rep_batch_tail(&rep_params, t))?;
        let mds = ms
            .iter()
            .map(|&m| {
                let params = SystemParams::mean_field(lambda, n, m, d)?;
                let problem = MeanFieldProblem::new(params, t_max, step)?;
                Ok((m, solve_virtual_tail(&problem)?.batch_tail))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambda,
            n,
            d,
            replication,
            mds,
        })
    }

    /// Three-job batches, `d = 3` replication against `m = 2..=6`.
    pub fn figure_one(lambda: f64) -> Result<Self> {
        Self::compute(lambda, 3, 3, &[2, 3, 4, 5, 6], 15.0, 1e-3)
    }

    pub fn mds_curve(&self, m: u32) -> Option<&TailCurve> {
        self.mds.iter().find(|(mm, _)| *mm == m).map(|(_, c)| c)
    }

    /// Number of sign changes of `mds - replication` over grid points where
    /// the two differ.
    pub fn crossings(&self, m: u32) -> Option<usize> {
        let mds = self.mds_curve(m)?;
        let signs: Vec<bool> = mds
            .values()
            .iter()
            .zip(self.replication.values())
            .filter(|(a, b)| a != b)
            .map(|(a, b)| a > b)
            .collect();
        Some(signs.windows(2).filter(|w| w[0] != w[1]).count())
    }

    /// Whether the MDS tail is at or below replication at every grid point.
    pub fn mds_dominates(&self, m: u32) -> Option<bool> {
        let mds = self.mds_curve(m)?;
        Some(mds.values().iter().zip(self.replication.values()).all(|(a, b)| a <= b))
    }
}
