//! Queries, capture plans and per-capture formula schedules.
//!
//! For every planned capture the ground segment gathers the latency-sensitive
//! queries whose area of interest contains the capture location and keeps
//! the ones at or above the current priority threshold. Each query becomes a
//! term of the capture's formula. Consecutive captures with identical
//! formulas collapse into one schedule entry.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{FormulaError, QueryError};
use crate::formula::{DnfFormula, FilterCatalog, FilterId, Term};
use crate::geo::{GeoPoint, Region, RegionIndex};

/// A registered standing request for imagery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: u32,
    /// Conjunction of filters that must all pass.
    pub filters: Vec<FilterId>,
    pub aoi: Vec<Region>,
    pub priority: u8,
    /// Queries that are not latency sensitive skip onboard inference.
    #[serde(default = "default_true")]
    pub latency_sensitive: bool,
}

fn default_true() -> bool {
    true
}

impl Query {
    pub fn validate(&self) -> Result<(), QueryError> {
        if self.aoi.is_empty() {
            return Err(QueryError::EmptyAoi(self.id));
        }
        for r in &self.aoi {
            r.validate().map_err(|source| QueryError::Geometry { id: self.id, source })?;
        }
        if self.filters.is_empty() {
            return Err(QueryError::NoFilters(self.id));
        }
        if !(1..=5).contains(&self.priority) {
            return Err(QueryError::Priority { id: self.id, priority: self.priority });
        }
        Ok(())
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.aoi.iter().any(|r| r.contains(p))
    }
}

/// Validated queries with a spatial index over their areas of interest.
#[derive(Debug, Clone)]
pub struct QuerySet {
    queries: Vec<Query>,
    index: RegionIndex,
}

impl QuerySet {
    pub fn new(queries: Vec<Query>, catalog: Option<&FilterCatalog>) -> Result<Self, QueryError> {
        let mut ids = BTreeSet::new();
        for q in &queries {
            q.validate()?;
            if !ids.insert(q.id) {
                return Err(QueryError::DuplicateId(q.id));
            }
            if let Some(cat) = catalog {
                for &f in &q.filters {
                    if cat.get(f).is_err() {
                        return Err(QueryError::UnknownFilter { id: q.id, filter: f });
                    }
                }
            }
        }
        let index = RegionIndex::new(queries.iter().map(|q| q.aoi.clone()).collect())
            .map_err(|source| QueryError::Geometry { id: 0, source })?;
        Ok(QuerySet { queries, index })
    }

    pub fn empty() -> Self {
        QuerySet::new(Vec::new(), None).expect("empty set is valid")
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Queries whose area of interest contains `p`, in registration order.
    pub fn aoi_match(&self, p: GeoPoint) -> Vec<&Query> {
        self.index.lookup(p).into_iter().map(|i| &self.queries[i]).collect()
    }

    /// Formula for a capture at `p` keeping terms of priority `>= threshold`
    /// (and never below 2). Queries sharing a filter set merge into one
    /// term at their highest priority. Terms are ordered by descending
    /// priority, then by filter set.
    pub fn formula_at(&self, p: GeoPoint, threshold: u8) -> Option<DnfFormula> {
        build_formula(self.aoi_match(p), threshold)
    }

    /// Highest priority among latency-sensitive queries whose filters all
    /// pass under `truth`, for captures at `p`.
    pub fn true_priority(&self, p: GeoPoint, truth: impl Fn(FilterId) -> bool) -> Option<u8> {
        self.aoi_match(p)
            .into_iter()
            .filter(|q| q.latency_sensitive && q.filters.iter().all(|&f| truth(f)))
            .map(|q| q.priority)
            .max()
    }
}

pub fn build_formula<'a>(
    queries: impl IntoIterator<Item = &'a Query>,
    threshold: u8,
) -> Option<DnfFormula> {
    let floor = threshold.max(2);
    let mut terms: BTreeMap<Vec<FilterId>, u8> = BTreeMap::new();
    for q in queries {
        if !q.latency_sensitive || q.priority < floor {
            continue;
        }
        let mut set = q.filters.clone();
        set.sort_unstable();
        set.dedup();
        let e = terms.entry(set).or_insert(q.priority);
        *e = (*e).max(q.priority);
    }
    if terms.is_empty() {
        return None;
    }
    let mut terms: Vec<(Vec<FilterId>, u8)> = terms.into_iter().collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let terms = terms.into_iter().map(|(f, p)| Term::new(f, p).expect("validated query")).collect();
    Some(DnfFormula::new(terms).expect("distinct filter sets"))
}

/// One planned image acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capture {
    pub image: u64,
    pub satellite: u32,
    /// Seconds since the simulation epoch.
    pub time: f64,
    pub loc: GeoPoint,
    pub size: u64,
}

/// Checks that capture times strictly increase per satellite.
pub fn validate_plan(plan: &[Capture]) -> Result<(), QueryError> {
    let mut last: BTreeMap<u32, f64> = BTreeMap::new();
    for (i, c) in plan.iter().enumerate() {
        if let Some(&t) = last.get(&c.satellite) {
            if c.time <= t {
                return Err(QueryError::NonIncreasingPlan(i));
            }
        }
        last.insert(c.satellite, c.time);
    }
    Ok(())
}

/// A run of consecutive plan slots sharing one formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub start: usize,
    pub len: usize,
    pub formula: DnfFormula,
}

/// Formulas for a contiguous stretch of one satellite's capture plan.
///
/// Slot `i` is the `i`-th planned capture of the stretch. Slots without an
/// entry are captured without onboard inference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Schedule {
    slots: usize,
    entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn empty(slots: usize) -> Self {
        Schedule { slots, entries: Vec::new() }
    }

    /// Builds the canonical schedule for per-slot formulas, merging every
    /// run of equal adjacent formulas.
    pub fn from_slots(slots: Vec<Option<DnfFormula>>) -> Self {
        let n = slots.len();
        let mut entries: Vec<ScheduleEntry> = Vec::new();
        for (i, slot) in slots.into_iter().enumerate() {
            let Some(formula) = slot else { continue };
            match entries.last_mut() {
                Some(last) if last.start + last.len == i && last.formula == formula => {
                    last.len += 1;
                }
                _ => entries.push(ScheduleEntry { start: i, len: 1, formula }),
            }
        }
        Schedule { slots: n, entries }
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn formula_at(&self, slot: usize) -> Option<&DnfFormula> {
        let i = self.entries.partition_point(|e| e.start + e.len <= slot);
        self.entries.get(i).filter(|e| e.start <= slot).map(|e| &e.formula)
    }

    pub fn expand(&self) -> Vec<Option<DnfFormula>> {
        (0..self.slots).map(|i| self.formula_at(i).cloned()).collect()
    }

    /// Bytes needed when every slot carries its formula inline (an empty
    /// slot costs one zero term-count byte).
    pub fn naive_size(&self) -> usize {
        let covered: usize = self.entries.iter().map(|e| e.len).sum();
        let inline: usize = self.entries.iter().map(|e| e.len * e.formula.encoded_len()).sum();
        inline + (self.slots - covered)
    }

    /// Distinct formulas in order of first appearance.
    pub fn unique_formulas(&self) -> Vec<&DnfFormula> {
        let mut seen = BTreeSet::new();
        self.entries.iter().filter(|e| seen.insert(&e.formula)).map(|e| &e.formula).collect()
    }

    /// Largest priority of any term in the schedule.
    pub fn max_priority(&self) -> Option<u8> {
        self.entries.iter().map(|e| e.formula.max_priority()).max()
    }

    pub fn check_against(&self, catalog: &FilterCatalog) -> Result<(), FormulaError> {
        self.entries.iter().try_for_each(|e| catalog.check_formula(&e.formula))
    }
}

/// Schedule for `plan` (one satellite's consecutive captures).
pub fn generate_schedule(plan: &[Capture], queries: &QuerySet, p_star: u8) -> Schedule {
    if queries.is_empty() {
        return Schedule::empty(plan.len());
    }
    Schedule::from_slots(plan.iter().map(|c| queries.formula_at(c.loc, p_star)).collect())
}
