//! Prioritization of Earth-observation imagery across a ground segment and
//! a satellite constellation.
//!
//! The ground side turns registered queries into per-capture DNF formulas,
//! compresses them into a compact schedule and forecasts downlink capacity.
//! The satellite side orders filter evaluations greedily inside an adaptive
//! confidence band and assigns each image a transmission tier.

pub mod bench;
pub mod codec;
pub mod error;
pub mod formula;
pub mod geo;
pub mod lookahead;
pub mod rng;
pub mod runtime;
pub mod sbfe;
pub mod scenario;
pub mod schedule;
pub mod stats;
pub mod timing;

pub use error::{CodecError, FormulaError, GeoError, QueryError, ScenarioError, SolverError};
pub use formula::{
    confidence, decided_priority, term_probability, Backbone, BackboneId, DnfFormula,
    ExecutionState, Filter, FilterCatalog, FilterId, Term, Tier,
};
