//! Deterministic system-level simulator for device-to-device (D2D) pairs
//! reusing cellular resource blocks in a tri-sectored cell.
//!
//! The core is generic over the float type; the aliases below fix it to `f64`.

// Negated float comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod hmm;
pub mod interference;
pub mod metrics;
pub mod sbrra;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use harness::{load_config, run_preset, AllocationMode, Config, Preset, SimulationPlan};
pub use hmm::{HmmState, ObservationAlphabet, SinrBuckets};
pub use sbrra::run::run_scenario;
pub use sbrra::{allocate_iteration, AllocationPolicy, Application, DemandScript, ShareRule};
pub use scalar::Scalar;

pub type RadioConfig = channel::RadioConfig<f64>;
pub type Channel = channel::Channel<f64>;
pub type Point = scenario::Point<f64>;
pub type Deployment = scenario::Deployment<f64>;
pub type D2DPair = scenario::D2DPair<f64>;
pub type HmmModel = hmm::HmmModel<f64>;
pub type RbLedger = sbrra::RbLedger<f64>;
pub type ScenarioState = sbrra::ScenarioState<f64>;
pub type IterationResult = metrics::IterationResult<f64>;
pub type ScenarioReport = metrics::ScenarioReport<f64>;
