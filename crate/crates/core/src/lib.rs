//! Planning library for wireless middle-mile backhaul networks.
//!
//! A network connects one fiber point of presence (the PoP, node 0) to a set
//! of village access points over a shared UHF band. The library generates
//! random deployment scenarios, models per-link capacity with a rural
//! macro path-loss law and a truncated Shannon rate mapping, and plans three
//! kinds of backhaul topology over the same scenario:
//!
//! * [`pmp`]: a single-hop star with demand-proportional resource sharing,
//! * [`multihop`]: a minimum-weight spanning tree under hop and degree
//!   limits, with per-edge resource-block coloring,
//! * [`lpopt`]: a fractional topology from a linear program that minimizes
//!   total resource usage subject to flow conservation.
//!
//! [`eval`] runs Monte Carlo batches over all of them and [`output`] writes
//! the resulting tables. Batches run on a rayon pool when the default
//! `parallel` feature is enabled and fall back to a sequential loop without
//! it; results are identical either way.

pub mod eval;
pub mod lpopt;
pub mod multihop;
pub mod output;
pub mod pmp;
pub mod radio;
pub mod scenario;
pub mod simplex;
pub mod topology;

pub use eval::{run_batch, BatchConfig, EvalResult, Parallelism, TopologyChoice};
pub use radio::RadioConfig;
pub use scenario::{generate_scenario, Scenario};
