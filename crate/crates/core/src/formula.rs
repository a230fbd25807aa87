//! Filters, positive DNF prioritization formulas and the confidence calculus.
//!
//! A formula is a disjunction of conjunctive terms over filter outcomes. Each
//! term carries the downlink priority an image earns when all of its filters
//! pass. The confidence of a partially evaluated formula is
//!
//! ```text
//! C(E) = 1 - prod_T (1 - P(T, E))
//! P(T, E) = 0                          if some f in T evaluated False
//!         = prod_{f in T, unevaluated} p_f   otherwise
//! ```
//!
//! Terms are treated as independent events even when they share filters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::FormulaError;

/// Identifier of a filter, stable across ground and satellite within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FilterId(pub u16);

impl fmt::Display for FilterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// Identifier of a shared feature backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BackboneId(pub u16);

/// A shared backbone whose output is reused by every head attached to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backbone {
    pub id: BackboneId,
    /// Seconds to run the backbone once per image.
    pub load_time: f64,
}

/// A stochastic predicate over an image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub id: FilterId,
    /// `None` for a standalone single-task model.
    #[serde(default)]
    pub backbone: Option<BackboneId>,
    /// Seconds for the head (or the whole model when standalone).
    pub head_time: f64,
    pub pass_prob: f64,
    pub tpr: f64,
    pub fpr: f64,
}

impl Filter {
    pub fn validate(&self) -> Result<(), FormulaError> {
        let bad = |field: &'static str, value: f64| FormulaError::InvalidFilter {
            id: self.id,
            field,
            value,
        };
        if !(self.head_time.is_finite() && self.head_time > 0.0) {
            return Err(bad("head_time", self.head_time));
        }
        if !(0.0..=1.0).contains(&self.pass_prob) {
            return Err(bad("pass_prob", self.pass_prob));
        }
        if !(self.tpr > 0.0 && self.tpr <= 1.0) {
            return Err(bad("tpr", self.tpr));
        }
        if !(self.fpr >= 0.0 && self.fpr < 1.0) {
            return Err(bad("fpr", self.fpr));
        }
        if self.tpr <= self.fpr {
            return Err(bad("tpr", self.tpr));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CatalogRepr {
    backbones: Vec<Backbone>,
    filters: Vec<Filter>,
}

/// The set of filters and backbones known to one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogRepr", into = "CatalogRepr")]
pub struct FilterCatalog {
    filters: BTreeMap<FilterId, Filter>,
    backbones: BTreeMap<BackboneId, Backbone>,
}

impl TryFrom<CatalogRepr> for FilterCatalog {
    type Error = FormulaError;

    fn try_from(repr: CatalogRepr) -> Result<Self, Self::Error> {
        FilterCatalog::new(repr.filters, repr.backbones)
    }
}

impl From<FilterCatalog> for CatalogRepr {
    fn from(catalog: FilterCatalog) -> Self {
        CatalogRepr {
            backbones: catalog.backbones.into_values().collect(),
            filters: catalog.filters.into_values().collect(),
        }
    }
}

impl FilterCatalog {
    pub fn new(
        filters: impl IntoIterator<Item = Filter>,
        backbones: impl IntoIterator<Item = Backbone>,
    ) -> Result<Self, FormulaError> {
        let mut bb_map = BTreeMap::new();
        for b in backbones {
            if !(b.load_time.is_finite() && b.load_time > 0.0) {
                return Err(FormulaError::InvalidBackbone { id: b.id, load_time: b.load_time });
            }
            if bb_map.insert(b.id, b.clone()).is_some() {
                return Err(FormulaError::DuplicateBackbone(b.id));
            }
        }
        let mut map = BTreeMap::new();
        for f in filters {
            f.validate()?;
            if let Some(bb) = f.backbone {
                if !bb_map.contains_key(&bb) {
                    return Err(FormulaError::UnknownBackbone { filter: f.id, backbone: bb });
                }
            }
            if map.insert(f.id, f.clone()).is_some() {
                return Err(FormulaError::DuplicateFilter(f.id));
            }
        }
        Ok(FilterCatalog { filters: map, backbones: bb_map })
    }

    pub fn get(&self, id: FilterId) -> Result<&Filter, FormulaError> {
        self.filters.get(&id).ok_or(FormulaError::UnknownFilter(id))
    }

    pub fn backbone(&self, id: BackboneId) -> Option<&Backbone> {
        self.backbones.get(&id)
    }

    pub fn filters(&self) -> impl Iterator<Item = &Filter> {
        self.filters.values()
    }

    pub fn backbones(&self) -> impl Iterator<Item = &Backbone> {
        self.backbones.values()
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Seconds to run `filter` on an image where no backbone is loaded yet.
    pub fn standalone_time(&self, filter: &Filter) -> f64 {
        filter.head_time
            + filter.backbone.and_then(|b| self.backbones.get(&b)).map_or(0.0, |b| b.load_time)
    }

    /// Replaces pass probabilities; ids missing from the catalog are ignored.
    pub fn set_pass_probs(&mut self, probs: impl IntoIterator<Item = (FilterId, f64)>) {
        for (id, p) in probs {
            if let Some(f) = self.filters.get_mut(&id) {
                f.pass_prob = p.clamp(0.0, 1.0);
            }
        }
    }

    /// Overrides tpr/fpr of every filter with a symmetric accuracy.
    pub fn set_accuracy(&mut self, accuracy: f64) -> Result<(), FormulaError> {
        for f in self.filters.values_mut() {
            f.tpr = accuracy;
            f.fpr = 1.0 - accuracy;
            f.validate()?;
        }
        Ok(())
    }

    pub fn check_formula(&self, formula: &DnfFormula) -> Result<(), FormulaError> {
        for t in formula.terms() {
            for &f in t.filters() {
                self.get(f)?;
            }
        }
        Ok(())
    }
}

/// Transmission tier of an image, ordered so that a larger tier is sent first.
///
/// `Compute` sits between priority 2 and priority 1: images that were
/// processed onboard and rejected still go ahead of untouched imagery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    P1,
    Compute,
    P2,
    P3,
    P4,
    P5,
}

impl Tier {
    /// All tiers in transmit order (first sent first).
    pub const TRANSMIT_ORDER: [Tier; 6] =
        [Tier::P5, Tier::P4, Tier::P3, Tier::P2, Tier::Compute, Tier::P1];

    pub fn from_priority(p: u8) -> Option<Tier> {
        match p {
            1 => Some(Tier::P1),
            2 => Some(Tier::P2),
            3 => Some(Tier::P3),
            4 => Some(Tier::P4),
            5 => Some(Tier::P5),
            _ => None,
        }
    }

    /// Explicit priority level, `None` for the compute tier.
    pub fn priority(self) -> Option<u8> {
        match self {
            Tier::P1 => Some(1),
            Tier::Compute => None,
            Tier::P2 => Some(2),
            Tier::P3 => Some(3),
            Tier::P4 => Some(4),
            Tier::P5 => Some(5),
        }
    }

    /// Index usable for fixed-size per-tier arrays (0 = P1 .. 5 = P5).
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.priority() {
            Some(p) => write!(f, "{p}"),
            None => f.write_str("compute"),
        }
    }
}

/// A conjunction of filters that yields `priority` when all pass.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "TermRepr", into = "TermRepr")]
pub struct Term {
    filters: Vec<FilterId>,
    priority: u8,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    filters: Vec<FilterId>,
    priority: u8,
}

impl TryFrom<TermRepr> for Term {
    type Error = FormulaError;
    fn try_from(r: TermRepr) -> Result<Self, Self::Error> {
        Term::new(r.filters, r.priority)
    }
}

impl From<Term> for TermRepr {
    fn from(t: Term) -> Self {
        TermRepr { filters: t.filters, priority: t.priority }
    }
}

impl Term {
    pub fn new(
        filters: impl IntoIterator<Item = FilterId>,
        priority: u8,
    ) -> Result<Self, FormulaError> {
        if !(2..=5).contains(&priority) {
            return Err(FormulaError::InvalidPriority(priority));
        }
        let mut filters: Vec<FilterId> = filters.into_iter().collect();
        if filters.is_empty() {
            return Err(FormulaError::EmptyTerm);
        }
        filters.sort_unstable();
        for w in filters.windows(2) {
            if w[0] == w[1] {
                return Err(FormulaError::DuplicateFilterInTerm(w[0]));
            }
        }
        Ok(Term { filters, priority })
    }

    /// Filters of the term in ascending id order.
    pub fn filters(&self) -> &[FilterId] {
        &self.filters
    }

    pub fn priority(&self) -> u8 {
        self.priority
    }

    pub fn contains(&self, id: FilterId) -> bool {
        self.filters.binary_search(&id).is_ok()
    }

    /// No filter of the term has evaluated False.
    pub fn is_alive(&self, state: &ExecutionState) -> bool {
        self.filters.iter().all(|&f| state.outcome(f) != Some(false))
    }

    pub fn is_satisfied(&self, state: &ExecutionState) -> bool {
        self.filters.iter().all(|&f| state.outcome(f) == Some(true))
    }
}

/// A positive DNF formula; an image matches when any term is satisfied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct DnfFormula {
    terms: Vec<Term>,
}

impl TryFrom<Vec<Term>> for DnfFormula {
    type Error = FormulaError;
    fn try_from(terms: Vec<Term>) -> Result<Self, Self::Error> {
        DnfFormula::new(terms)
    }
}

impl From<DnfFormula> for Vec<Term> {
    fn from(f: DnfFormula) -> Self {
        f.terms
    }
}

impl DnfFormula {
    pub fn new(terms: Vec<Term>) -> Result<Self, FormulaError> {
        if terms.is_empty() {
            return Err(FormulaError::EmptyFormula);
        }
        let mut seen = BTreeSet::new();
        for t in &terms {
            if !seen.insert(t.filters()) {
                return Err(FormulaError::DuplicateTerm);
            }
        }
        Ok(DnfFormula { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Union of the filters of all terms, ascending.
    pub fn filter_set(&self) -> BTreeSet<FilterId> {
        self.terms.iter().flat_map(|t| t.filters().iter().copied()).collect()
    }

    pub fn max_priority(&self) -> u8 {
        self.terms.iter().map(Term::priority).max().unwrap_or(2)
    }

    /// Maximum priority among terms with no False outcome.
    pub fn max_live_priority(&self, state: &ExecutionState) -> Option<u8> {
        self.terms.iter().filter(|t| t.is_alive(state)).map(Term::priority).max()
    }

    pub fn has_live_term(&self, state: &ExecutionState) -> bool {
        self.terms.iter().any(|t| t.is_alive(state))
    }

    /// Direct evaluation against a complete outcome assignment: the maximum
    /// priority of a satisfied term, `None` when no term is satisfied.
    pub fn evaluate(&self, truth: impl Fn(FilterId) -> bool) -> Option<u8> {
        self.terms
            .iter()
            .filter(|t| t.filters().iter().all(|&f| truth(f)))
            .map(Term::priority)
            .max()
    }

    /// Appends the wire encoding: term count (u8), then per term priority
    /// (u8), filter count (u8) and filter ids (u16 LE).
    pub fn write_to(&self, out: &mut Vec<u8>) -> Result<(), FormulaError> {
        let count = u8::try_from(self.terms.len())
            .map_err(|_| FormulaError::TooLarge("terms per formula"))?;
        out.push(count);
        for t in &self.terms {
            out.push(t.priority);
            let n = u8::try_from(t.filters.len())
                .map_err(|_| FormulaError::TooLarge("filters per term"))?;
            out.push(n);
            for f in &t.filters {
                out.extend_from_slice(&f.0.to_le_bytes());
            }
        }
        Ok(())
    }

    pub fn encoded_len(&self) -> usize {
        1 + self.terms.iter().map(|t| 2 + 2 * t.filters.len()).sum::<usize>()
    }
}

/// Filters executed for one image, their outcomes, and loaded backbones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionState {
    outcomes: BTreeMap<FilterId, bool>,
    loaded: BTreeSet<BackboneId>,
}

impl ExecutionState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records an outcome. Outcomes are never overwritten.
    pub fn record(&mut self, filter: &Filter, outcome: bool) -> Result<(), FormulaError> {
        if self.outcomes.contains_key(&filter.id) {
            return Err(FormulaError::AlreadyEvaluated(filter.id));
        }
        self.outcomes.insert(filter.id, outcome);
        if let Some(b) = filter.backbone {
            self.loaded.insert(b);
        }
        Ok(())
    }

    pub fn outcome(&self, id: FilterId) -> Option<bool> {
        self.outcomes.get(&id).copied()
    }

    pub fn is_evaluated(&self, id: FilterId) -> bool {
        self.outcomes.contains_key(&id)
    }

    pub fn is_loaded(&self, backbone: BackboneId) -> bool {
        self.loaded.contains(&backbone)
    }

    pub fn outcomes(&self) -> &BTreeMap<FilterId, bool> {
        &self.outcomes
    }

    pub fn loaded_backbones(&self) -> &BTreeSet<BackboneId> {
        &self.loaded
    }

    pub fn evaluated_count(&self) -> usize {
        self.outcomes.len()
    }
}

/// Probability that `term` ends up satisfied given `state`.
pub fn term_probability(
    term: &Term,
    state: &ExecutionState,
    catalog: &FilterCatalog,
) -> Result<f64, FormulaError> {
    let mut p = 1.0;
    let mut dead = false;
    for &id in term.filters() {
        let filter = catalog.get(id)?;
        match state.outcome(id) {
            Some(false) => dead = true,
            Some(true) => {}
            None => p *= filter.pass_prob,
        }
    }
    Ok(if dead { 0.0 } else { p })
}

/// Probability that the image satisfies `formula`, treating terms as independent.
pub fn confidence(
    formula: &DnfFormula,
    state: &ExecutionState,
    catalog: &FilterCatalog,
) -> Result<f64, FormulaError> {
    let mut miss = 1.0;
    let mut satisfied = false;
    for term in formula.terms() {
        let p = term_probability(term, state, catalog)?;
        if term.is_satisfied(state) {
            satisfied = true;
        }
        miss *= 1.0 - p;
    }
    Ok(if satisfied { 1.0 } else { 1.0 - miss })
}

/// Highest priority among fully satisfied terms.
pub fn decided_priority(formula: &DnfFormula, state: &ExecutionState) -> Option<u8> {
    formula.terms().iter().filter(|t| t.is_satisfied(state)).map(Term::priority).max()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filter(id: u16, p: f64) -> Filter {
        Filter {
            id: FilterId(id),
            backbone: None,
            head_time: 1.0,
            pass_prob: p,
            tpr: 0.95,
            fpr: 0.05,
        }
    }

    fn catalog(ps: &[f64]) -> FilterCatalog {
        FilterCatalog::new(ps.iter().enumerate().map(|(i, &p)| filter(i as u16 + 1, p)), [])
            .unwrap()
    }

    fn term(ids: &[u16], priority: u8) -> Term {
        Term::new(ids.iter().map(|&i| FilterId(i)), priority).unwrap()
    }

    fn state(cat: &FilterCatalog, outcomes: &[(u16, bool)]) -> ExecutionState {
        let mut s = ExecutionState::new();
        for &(id, v) in outcomes {
            s.record(cat.get(FilterId(id)).unwrap(), v).unwrap();
        }
        s
    }

    #[test]
    fn term_probability_known_failure_is_zero() {
        let cat = catalog(&[0.5]);
        let s = state(&cat, &[(1, false)]);
        assert_eq!(term_probability(&term(&[1], 3), &s, &cat).unwrap(), 0.0);
    }

    #[test]
    fn term_probability_single_factor() {
        let cat = catalog(&[0.5, 0.3]);
        let s = state(&cat, &[(1, true)]);
        let p = term_probability(&term(&[1, 2], 3), &s, &cat).unwrap();
        assert!((p - 0.3).abs() < 1e-15);
    }

    #[test]
    fn confidence_examples() {
        let cat = catalog(&[0.5]);
        let f = DnfFormula::new(vec![term(&[1], 4)]).unwrap();
        assert!((confidence(&f, &ExecutionState::new(), &cat).unwrap() - 0.5).abs() < 1e-15);
        let s = state(&cat, &[(1, true)]);
        assert_eq!(confidence(&f, &s, &cat).unwrap(), 1.0);
        let s = state(&cat, &[(1, false)]);
        assert_eq!(confidence(&f, &s, &cat).unwrap(), 0.0);
    }

    #[test]
    fn decided_priority_takes_max_satisfied() {
        let cat = catalog(&[0.5, 0.5]);
        let f = DnfFormula::new(vec![term(&[1], 3), term(&[2], 5)]).unwrap();
        assert_eq!(decided_priority(&f, &state(&cat, &[(1, true)])), Some(3));
        assert_eq!(decided_priority(&f, &state(&cat, &[(1, true), (2, true)])), Some(5));
        assert_eq!(decided_priority(&f, &state(&cat, &[(1, false)])), None);
    }

    #[test]
    fn unknown_filter_is_reported() {
        let cat = catalog(&[0.5]);
        let f = DnfFormula::new(vec![term(&[9], 3)]).unwrap();
        assert_eq!(
            confidence(&f, &ExecutionState::new(), &cat),
            Err(FormulaError::UnknownFilter(FilterId(9)))
        );
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(Term::new([], 3), Err(FormulaError::EmptyTerm));
        assert_eq!(Term::new([FilterId(1)], 1), Err(FormulaError::InvalidPriority(1)));
        assert_eq!(
            Term::new([FilterId(1), FilterId(1)], 3),
            Err(FormulaError::DuplicateFilterInTerm(FilterId(1)))
        );
        assert_eq!(DnfFormula::new(vec![]), Err(FormulaError::EmptyFormula));
        // same filter set with a different priority is still a duplicate
        assert_eq!(
            DnfFormula::new(vec![term(&[1, 2], 3), term(&[2, 1], 4)]),
            Err(FormulaError::DuplicateTerm)
        );
    }

    #[test]
    fn outcomes_are_never_overwritten() {
        let cat = catalog(&[0.5]);
        let mut s = state(&cat, &[(1, true)]);
        assert_eq!(
            s.record(cat.get(FilterId(1)).unwrap(), false),
            Err(FormulaError::AlreadyEvaluated(FilterId(1)))
        );
        assert_eq!(s.outcome(FilterId(1)), Some(true));
    }

    #[test]
    fn catalog_validation() {
        let mut f = filter(1, 0.5);
        f.backbone = Some(BackboneId(3));
        assert!(matches!(FilterCatalog::new([f], []), Err(FormulaError::UnknownBackbone { .. })));
        let mut f = filter(1, 0.5);
        f.tpr = 0.4;
        f.fpr = 0.5;
        assert!(FilterCatalog::new([f], []).is_err());
        let f = filter(1, 1.5);
        assert!(FilterCatalog::new([f], []).is_err());
    }

    #[test]
    fn wire_encoding_layout() {
        let f = DnfFormula::new(vec![term(&[1, 258], 3)]).unwrap();
        let mut out = Vec::new();
        f.write_to(&mut out).unwrap();
        assert_eq!(out, vec![1, 3, 2, 1, 0, 2, 1]);
        assert_eq!(out.len(), f.encoded_len());
    }

    #[test]
    fn tier_order_matches_transmit_precedence() {
        assert!(Tier::P5 > Tier::P2);
        assert!(Tier::P2 > Tier::Compute);
        assert!(Tier::Compute > Tier::P1);
        let mut sorted = Tier::TRANSMIT_ORDER.to_vec();
        sorted.sort_by(|a, b| b.cmp(a));
        assert_eq!(sorted, Tier::TRANSMIT_ORDER.to_vec());
    }
}
