//! Agent-based cultural market simulator.
//!
//! `N` agents on a social graph consume one of `M` items per step for `T`
//! steps. Each agent picks the unconsumed item maximizing
//! `γ·s + (1−γ)·l`, where `l` is a fixed Normal(0, σ²) liking and `s` the
//! fraction of observed neighbors that already consumed the item. Pressures
//! are frozen at the start of each step.
//!
//! Modules:
//!
//! - [`model`]: domain types and the decision rule
//! - [`topology`]: ring lattice, complete and random graphs
//! - [`preferences`]: liking sampling and item quality
//! - [`engine`]: synchronized runs, single and paired
//! - [`metrics`]: shares, Gini inequality, quartile difference, OLS slope
//! - [`harness`]: replications, (γ, σ) sweeps, paired experiments
//! - [`output`] and [`cli`]: CSV tables and the command-line tool
//!
//! ```
//! use cultmarket::{engine, metrics::MetricsReport, ModelConfig};
//!
//! let config = ModelConfig { n_agents: 50, n_items: 40, horizon: 8, ..ModelConfig::default() };
//! let result = engine::run(&config, 0).unwrap();
//! let report = MetricsReport::from_run(&result).unwrap();
//! assert!((0.0..=1.0).contains(&report.inequality));
//! ```

pub mod cli;
pub mod engine;
pub mod error;
pub mod format;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod output;
pub mod preferences;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
pub use model::{AgentId, ItemId, MarketState, ModelConfig, PreferenceMatrix};
pub use rng::RandomStream;
pub use topology::{SocialGraph, TopologySpec};
