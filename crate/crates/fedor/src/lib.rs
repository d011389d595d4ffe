//! Repeated allocation of `k` weighted slots among `n` players, with no
//! per-round payments.
//!
//! The centerpiece mechanism filters each player's reported value through a
//! sliding-window goodness-of-fit gate (a one-sample Kolmogorov-Smirnov test
//! against Uniform\[0,1\]) and replaces reports that fail the gate with a
//! deterministic pseudorandom value derived from everyone else's reports.
//! Slots then go to the highest filtered values. Because every replica can
//! recompute the filter and the replacement from the broadcast bids alone,
//! the decision needs no central authority; [`netsim`] simulates exactly
//! that replicated execution and audits agreement.
//!
//! VCG and GSP position auctions are included as monetary baselines, and
//! [`engine`] runs seeded Monte Carlo experiments over mixed populations of
//! honest and misreporting players.

pub mod core;
pub mod engine;
pub mod gof;
pub mod mechanisms;
pub mod netsim;
pub mod rng;
pub mod stats;
pub mod strategies;

pub use crate::core::{
    per_round_utility, AllocationOutcome, BidVector, Error, Mechanism, MechanismConfig,
    PlayerType, Result, SlotWeights, UtilityLedger,
};
pub use crate::engine::{
    fee_sweep, run_experiment, run_scenario, ExperimentReport, GateKind, PerfectGate,
    ScenarioConfig,
};
pub use crate::gof::{GoFConfig, GofGate, HistoryBuffer, KsGate};
pub use crate::mechanisms::{
    deterministic_uniform, fedor_decide, gsp_decide, vcg_decide, DecisionVector,
};
pub use crate::rng::{RngStream, StreamPurpose};
pub use crate::strategies::{declare, draw_true_type, StrategySpec};
