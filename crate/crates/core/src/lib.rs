//! Resource allocation and spectral-efficiency analysis for multi-user OFDMA
//! underlay spectrum sharing.
//!
//! A cognitive transmitter serves N receivers over K subcarriers while a
//! licensed primary receiver must be protected: transmit power is capped in
//! total, and the aggregate interference through the cross links is capped
//! either deterministically or in probability. The crate provides
//!
//! * the channel and estimation-error model ([`channel`], [`estimation`]),
//! * closed-form SINR distributions and the chi-square machinery behind the
//!   probabilistic interference reformulation ([`dist`], [`special`]),
//! * the dual-decomposition allocator: water-filling power levels, argmax
//!   subcarrier assignment, subgradient multiplier updates, and KKT
//!   verification ([`allocator`]),
//! * a seeded Monte-Carlo sweep harness with CSV/JSON output ([`experiment`])
//!   and its command-line front end ([`cli`]).

pub mod allocator;
pub mod channel;
pub mod cli;
pub mod config;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod mat;
pub mod special;

pub use allocator::{solve, solve_ensemble, AllocationResult, ScenarioSpec};
pub use channel::{sample_realization, ChannelRealization, ChannelSampler};
pub use config::SystemConfig;
pub use error::{Error, SolveError};
pub use estimation::EstimationModel;
