//! Tabular planning and learning for finite-horizon MDPs whose state splits
//! into a controllable part with known dynamics and an exogenous part whose
//! dynamics ignore the agent's actions.
//!
//! The crate is `no_std` (it needs `alloc`). All randomness is supplied by the
//! caller through [`rand::RngCore`], so every routine is deterministic given a
//! seeded generator.
//!
//! Layout:
//!
//! * [`model`]: state factorization, kernels, rewards, policies.
//! * [`planning`]: exact backward induction, policy evaluation, sampling.
//! * [`regret`]: the cumulative regret ledger.
//! * [`tables`]: lazily allocated per-step Q tables.
//! * [`estimation`]: visitation counts, empirical kernels, learning rates.
//! * [`algorithms`]: ExAVI, UCBVI, ExAQ, Q-learning and TWAP.
//! * [`env`]: the taxi, trading, elevator and lower-bound environments.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod algorithms;
pub mod env;
pub mod error;
pub mod estimation;
pub mod model;
pub mod planning;
pub mod regret;
pub mod tables;

mod math;

pub use error::{Error, Result};
pub use model::{
    ActionMask, ControlModel, ControllableKernel, DeterministicPolicy, ExogenousKernel,
    FactoredModel, FactoredState, InitialDistribution, PerStep, RewardAffine, RewardBounds,
    RewardTable, SparseRows, StateFactorization,
};
