//! Deterministic constellation simulator.
//!
//! Satellites on circular orbits capture images along their ground tracks,
//! prioritize them onboard with the adaptive runtime (or the fixed-order
//! baseline), and downlink them through a shared set of ground stations.
//! At every contact the ground segment folds in filter statistics,
//! forecasts downlink demand and uplinks a compressed schedule.

pub mod allocation;
pub mod capture;
pub mod config;
pub mod error;
pub mod ground;
pub mod metrics;
pub mod orbit;
pub mod power;
pub mod queue;
pub mod world;

pub use config::{Ablations, CaptureConfig, Constellation, Preset, SimConfig, Variant};
pub use error::SimError;
pub use metrics::{summarize, MetricsLog, Summary};
pub use world::{run, SimOutput, World};
