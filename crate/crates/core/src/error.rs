use thiserror::Error;

use crate::formula::{BackboneId, FilterId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("unknown filter {0}")]
    UnknownFilter(FilterId),
    #[error("filter {filter} references unknown backbone {}", backbone.0)]
    UnknownBackbone { filter: FilterId, backbone: BackboneId },
    #[error("duplicate filter {0} in catalog")]
    DuplicateFilter(FilterId),
    #[error("duplicate backbone {} in catalog", .0 .0)]
    DuplicateBackbone(BackboneId),
    #[error("filter {id}: invalid {field} = {value}")]
    InvalidFilter { id: FilterId, field: &'static str, value: f64 },
    #[error("backbone {}: invalid load time {load_time}", id.0)]
    InvalidBackbone { id: BackboneId, load_time: f64 },
    #[error("term priority {0} outside 2..=5")]
    InvalidPriority(u8),
    #[error("term has no filters")]
    EmptyTerm,
    #[error("filter {0} appears twice in one term")]
    DuplicateFilterInTerm(FilterId),
    #[error("formula has no terms")]
    EmptyFormula,
    #[error("formula contains two terms over the same filter set")]
    DuplicateTerm,
    #[error("filter {0} already evaluated")]
    AlreadyEvaluated(FilterId),
    #[error("too many {0} for the wire format")]
    TooLarge(&'static str),
    #[error("invalid threshold configuration: {0}")]
    InvalidThresholds(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("formula has {filters} filters, exact search is capped at {cap}")]
    TooManyFilters { filters: usize, cap: usize },
    #[error("formula has {terms} terms, exact search is capped at {cap}")]
    TooManyTerms { terms: usize, cap: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("box has lat_min {0} > lat_max {1}")]
    InvertedBox(f64, f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not convex")]
    NotConvex,
    #[error("polygon spans more than 180 degrees of longitude")]
    PolygonTooWide,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("query {id}: {source}")]
    Geometry { id: u32, source: GeoError },
    #[error("query {0} has an empty area of interest")]
    EmptyAoi(u32),
    #[error("query {0} has no filters")]
    NoFilters(u32),
    #[error("query {id}: priority {priority} outside 1..=5")]
    Priority { id: u32, priority: u8 },
    #[error("duplicate query id {0}")]
    DuplicateId(u32),
    #[error("query {id} references unknown filter {filter}")]
    UnknownFilter { id: u32, filter: FilterId },
    #[error("capture plan times must strictly increase per satellite (index {0})")]
    NonIncreasingPlan(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("schedule has {0} unique formulas, the table holds at most 256")]
    Capacity(usize),
    #[error("schedule has {0} entries, more than the 32-bit entry count allows")]
    TooManyEntries(usize),
    #[error("bad magic at offset 0")]
    BadMagic,
    #[error("unsupported version {0} at offset 4")]
    UnsupportedVersion(u8),
    #[error("truncated input at offset {0}")]
    Truncated(usize),
    #[error("formula index {index} at offset {offset} outside table of {table}")]
    BadIndex { offset: usize, index: u8, table: usize },
    #[error("zero-length run at offset {0}")]
    ZeroRun(usize),
    #[error("entry stream decodes to {actual} entries, header says {expected}")]
    CountMismatch { expected: usize, actual: usize },
    #[error("invalid formula at offset {offset}: {source}")]
    Formula { offset: usize, source: FormulaError },
    #[error("{0} trailing bytes after the entry stream")]
    TrailingBytes(usize),
    #[error(transparent)]
    Encode(#[from] FormulaError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?} (expected disaster, intelligence or urban)")]
    UnknownScenario(String),
    #[error("unknown accelerator profile {0:?} (expected tpu or gpu)")]
    UnknownProfile(String),
    #[error("no latency-sensitive queries to draw formulas from")]
    EmptyPool,
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Query(#[from] QueryError),
}
