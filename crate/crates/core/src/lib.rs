//! Sampled-pivot top-q maintenance and the structures built on it.
//!
//! The crate is organised bottom-up:
//!
//! - [`sampling`]: parameter derivation, pivot sampling, partition and the
//!   verified maintenance loop with exact fallback.
//! - [`qmax`]: the top-q container with squid, exact-selection and heap
//!   engines.
//! - [`phase`]: per-maintenance failure budgets for unbounded streams.
//! - [`cuckoo`]: a two-choice bucketed table with a water level for lazy
//!   deletion, shared by [`hh`] and [`lrfu`].
//! - [`hh`]: weighted heavy hitters, the sampled-median baseline and NRMSE.
//! - [`lrfu`]: LRFU scoring and three cache engines.
//! - [`switch_sim`]: a discrete-event model of a switch-resident cache.
//! - [`tuning`]: expected clearance and the choice of α.
//! - [`workload`]: Zipf generators and trace readers.
//! - [`apps`]: priority sampling, network-wide heavy hitters and
//!   priority-based aggregation.
//! - [`bench`]: the `squid-bench` command line.

// `!(x > 0.0)` is how parameter checks reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod bench;
pub mod cuckoo;
pub mod error;
pub mod hash;
pub mod hh;
pub mod lrfu;
pub mod phase;
pub mod qmax;
pub mod rng;
pub mod sampling;
pub mod switch_sim;
pub mod tuning;
pub mod workload;

pub use error::{Error, Result};
pub use phase::PhaseScheduler;
pub use qmax::{Engine, Entry, QMax};
pub use sampling::{PivotOutcome, SquidParams};
