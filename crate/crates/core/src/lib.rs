//! Uplink detection on a panelized large intelligent surface.
//!
//! The surface is split into panels that each reduce their antenna signals
//! to a few outputs with a local linear filter. This crate models the
//! line-of-sight channel to such a surface, builds the per-panel filters
//! (reduced matched filter and iterative interference cancellation),
//! evaluates the sum-rate capacity at the panel outputs, accounts for the
//! panel-to-panel traffic of the daisy-chain execution, and drives Monte
//! Carlo sweeps over the number of outputs.
//!
//! ```
//! use lis_uplink::{chain, channel};
//!
//! let cfg = channel::ScenarioConfig { lis_width_m: 2.0, users_k: 3, ..Default::default() };
//! let scenario = channel::build_scenario(&cfg, 16).unwrap();
//! let users = channel::sample_users(&cfg, &mut channel::trial_rng(cfg.seed, 0));
//! let chan = channel::realize_channel(&scenario, &users, cfg.wavelength_m).unwrap();
//!
//! let iic = chain::run_iic_chain(&chan.blocks, cfg.snr_rho, 2, 1).unwrap();
//! assert!(iic.report.sum_rate_bits <= iic.report.channel_capacity_bits + 1e-6);
//! ```

pub mod capacity;
pub mod chain;
pub mod channel;
pub mod equalizers;
pub mod error;
pub mod numerics;
pub mod sweep;

pub use error::{LisError, Result};
