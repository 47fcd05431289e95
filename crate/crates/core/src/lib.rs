//! Latency of replication and erasure coding for batches of jobs sent to a
//! large pool of FIFO servers.
//!
//! * [`orderstats`]: closed forms for replication and binomial order statistics.
//! * [`meanfield`]: the large-system equation for coded batches and its solver.
//! * [`sim`]: a discrete-event simulator of the finite system, with
//!   empirical-tail statistics.
//! * [`codec`]: MDS and random linear codes over GF(2^8) and GF(2^16).
//! * [`figure`]: replication and coding tails on one grid.
//! * [`selfcheck`]: end-to-end consistency checks.
//!
//! ```
//! use redundancy_core::meanfield::{solve_virtual_tail, MeanFieldProblem};
//! use redundancy_core::orderstats::rep_batch_tail;
//! use redundancy_core::SystemParams;
//!
//! let coded = SystemParams::mean_field(0.5, 3, 6, 3)?;
//! let tails = solve_virtual_tail(&MeanFieldProblem::with_defaults(coded)?)?;
//! let replicated = SystemParams::mean_field(0.5, 3, 0, 3)?;
//! assert!(tails.batch_tail.at(2.0) < rep_batch_tail(&replicated, 2.0)?);
//! # Ok::<(), redundancy_core::Error>(())
//! ```

pub mod codec;
pub mod curve;
mod error;
pub mod figure;
pub mod meanfield;
pub mod numeric;
pub mod orderstats;
pub mod params;
pub mod selfcheck;
pub mod sim;

pub use curve::TailCurve;
pub use error::{Error, Result};
pub use params::SystemParams;

/// Version of this crate, for run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// The README's and guide's code samples run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/order-statistics.md")]
    mod order_statistics {}
    #[doc = include_str!("../../../book/src/mean-field.md")]
    mod mean_field {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/coding.md")]
    mod coding {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
