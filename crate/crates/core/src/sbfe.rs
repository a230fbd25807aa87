//! Reference policies for ordering filter evaluations.
//!
//! The expected cost of a policy is the expected sum of effective filter
//! times until the evaluation loop exits, with each filter passing
//! independently with its pass probability. The exact solver minimizes that
//! quantity by memoized recursion; the same recursion evaluates the greedy
//! and static policies so all three are compared on equal terms.
//!
//! A recursion state is summarized by the set of terms still alive, which
//! of their filters are already evaluated (all of them True by
//! construction) and which backbones are loaded. Nothing else influences
//! confidence, utility or future costs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{FormulaError, SolverError};
use crate::formula::{
    decided_priority, BackboneId, DnfFormula, ExecutionState, FilterCatalog, FilterId, Tier,
};
use crate::runtime::{effective_time, select_next, FilterOrdering, Thresholds};

pub const MAX_EXACT_FILTERS: usize = 20;
pub const MAX_TERMS: usize = 64;

/// Bit-mask form of a formula against a catalog.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    ids: Vec<FilterId>,
    pass: Vec<f64>,
    tpr: Vec<f64>,
    head: Vec<f64>,
    backbone: Vec<Option<u8>>,
    backbone_ids: Vec<BackboneId>,
    load: Vec<f64>,
    term_filters: Vec<u32>,
    terms_of: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct State {
    alive: u64,
    evaluated: u32,
    loaded: u32,
}

impl CompiledFormula {
    pub fn new(formula: &DnfFormula, catalog: &FilterCatalog) -> Result<Self, SolverError> {
        catalog.check_formula(formula)?;
        let ids: Vec<FilterId> = formula.filter_set().into_iter().collect();
        if ids.len() > MAX_EXACT_FILTERS {
            return Err(SolverError::TooManyFilters { filters: ids.len(), cap: MAX_EXACT_FILTERS });
        }
        if formula.terms().len() > MAX_TERMS {
            return Err(SolverError::TooManyTerms { terms: formula.terms().len(), cap: MAX_TERMS });
        }
        let mut backbone_ids: Vec<BackboneId> = Vec::new();
        let mut load = Vec::new();
        let mut c = CompiledFormula {
            ids: ids.clone(),
            pass: Vec::new(),
            tpr: Vec::new(),
            head: Vec::new(),
            backbone: Vec::new(),
            backbone_ids: Vec::new(),
            load: Vec::new(),
            term_filters: Vec::new(),
            terms_of: vec![0; ids.len()],
        };
        for &id in &ids {
            let f = catalog.get(id)?;
            c.pass.push(f.pass_prob);
            c.tpr.push(f.tpr);
            c.head.push(f.head_time);
            let local = match f.backbone {
                None => None,
                Some(b) => {
                    let pos = match backbone_ids.iter().position(|&x| x == b) {
                        Some(pos) => pos,
                        None => {
                            backbone_ids.push(b);
                            load.push(catalog.backbone(b).map_or(0.0, |bb| bb.load_time));
                            backbone_ids.len() - 1
                        }
                    };
                    Some(pos as u8)
                }
            };
            c.backbone.push(local);
        }
        c.backbone_ids = backbone_ids;
        c.load = load;
        for (ti, term) in formula.terms().iter().enumerate() {
            let mut mask = 0u32;
            for f in term.filters() {
                let i = ids.binary_search(f).expect("filter from filter_set");
                mask |= 1 << i;
                c.terms_of[i] |= 1 << ti;
            }
            c.term_filters.push(mask);
        }
        Ok(c)
    }

    pub fn filter_count(&self) -> usize {
        self.ids.len()
    }

    fn initial(&self) -> State {
        State { alive: all_bits(self.term_filters.len()), evaluated: 0, loaded: 0 }
    }

    fn from_execution(&self, state: &ExecutionState) -> State {
        let mut s = self.initial();
        for (i, id) in self.ids.iter().enumerate() {
            if let Some(outcome) = state.outcome(*id) {
                s.evaluated |= 1 << i;
                if !outcome {
                    s.alive &= !self.terms_of[i];
                }
            }
        }
        for (j, b) in self.backbone_ids.iter().enumerate() {
            if state.is_loaded(*b) {
                s.loaded |= 1 << j;
            }
        }
        s
    }

    fn live_filters(&self, alive: u64) -> u32 {
        bits(alive).fold(0, |m, t| m | self.term_filters[t])
    }

    fn t_eff(&self, i: usize, loaded: u32) -> f64 {
        match self.backbone[i] {
            Some(b) if loaded & (1 << b) == 0 => self.head[i] + self.load[b as usize],
            _ => self.head[i],
        }
    }

    fn confidence(&self, s: State) -> f64 {
        let mut miss = 1.0;
        for (t, &mask) in self.term_filters.iter().enumerate() {
            if s.alive & (1 << t) == 0 {
                continue;
            }
            if mask & !s.evaluated == 0 {
                return 1.0;
            }
            let mut p = 1.0;
            for i in bits(u64::from(mask & !s.evaluated)) {
                p *= self.pass[i];
            }
            miss *= 1.0 - p;
        }
        1.0 - miss
    }

    /// Whether the evaluation loop stops in `s`.
    fn exits(&self, s: State, th: Thresholds) -> bool {
        if s.alive == 0 {
            return true;
        }
        if self.satisfied(s) {
            return true;
        }
        let conf = self.confidence(s);
        conf < th.beta || conf > th.alpha
    }

    fn satisfied(&self, s: State) -> bool {
        bits(s.alive).any(|t| self.term_filters[t] & !s.evaluated == 0)
    }

    fn candidates(&self, s: State) -> impl Iterator<Item = usize> {
        bits(u64::from(self.live_filters(s.alive) & !s.evaluated))
    }

    fn utility(&self, i: usize, s: State) -> f64 {
        let n = (s.alive & self.terms_of[i]).count_ones();
        if n == 0 {
            return 0.0;
        }
        (1.0 - self.pass[i]) * self.tpr[i] * n as f64 / self.t_eff(i, s.loaded)
    }

    fn child(&self, s: State, i: usize, outcome: bool) -> State {
        let mut c = s;
        c.evaluated |= 1 << i;
        if let Some(b) = self.backbone[i] {
            c.loaded |= 1 << b;
        }
        if !outcome {
            c.alive &= !self.terms_of[i];
        }
        c
    }

    fn key(&self, s: State) -> u128 {
        let ev = s.evaluated & self.live_filters(s.alive);
        u128::from(s.alive) | (u128::from(ev) << 64) | (u128::from(s.loaded) << 96)
    }

    fn pick(&self, s: State, chooser: Chooser) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in self.candidates(s) {
            let score = match chooser {
                Chooser::Greedy => self.utility(i, s),
                Chooser::Static => -self.head[i],
                Chooser::Exact => unreachable!("exact chooses by recursion"),
            };
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        best.map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chooser {
    Exact,
    Greedy,
    Static,
}

fn all_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

struct Solver<'a> {
    c: &'a CompiledFormula,
    th: Thresholds,
    chooser: Chooser,
    memo: HashMap<u128, (f64, u8)>,
}

impl Solver<'_> {
    fn value(&mut self, s: State) -> f64 {
        if self.c.exits(s, self.th) {
            return 0.0;
        }
        let key = self.c.key(s);
        if let Some(&(v, _)) = self.memo.get(&key) {
            return v;
        }
        let (v, action) = match self.chooser {
            Chooser::Exact => {
                let mut best = (f64::INFINITY, u8::MAX);
                let cands: Vec<usize> = self.c.candidates(s).collect();
                for i in cands {
                    let v = self.action_value(s, i);
                    if v < best.0 {
                        best = (v, i as u8);
                    }
                }
                best
            }
            other => match self.c.pick(s, other) {
                Some(i) => (self.action_value(s, i), i as u8),
                None => (0.0, u8::MAX),
            },
        };
        self.memo.insert(key, (v, action));
        v
    }

    fn action_value(&mut self, s: State, i: usize) -> f64 {
        let p = self.c.pass[i];
        let mut v = self.c.t_eff(i, s.loaded);
        if p > 0.0 {
            v += p * self.value(self.c.child(s, i, true));
        }
        if p < 1.0 {
            v += (1.0 - p) * self.value(self.c.child(s, i, false));
        }
        v
    }
}

fn expected_cost_with(
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    th: Thresholds,
    chooser: Chooser,
) -> Result<f64, SolverError> {
    let c = CompiledFormula::new(formula, catalog)?;
    let mut solver = Solver { c: &c, th, chooser, memo: HashMap::new() };
    Ok(solver.value(c.initial()))
}

/// Minimum expected evaluation cost over all adaptive policies.
pub fn exact_expected_cost(
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    th: Thresholds,
) -> Result<f64, SolverError> {
    expected_cost_with(formula, catalog, th, Chooser::Exact)
}

/// Expected cost of the onboard greedy ordering.
pub fn greedy_expected_cost(
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    th: Thresholds,
) -> Result<f64, SolverError> {
    expected_cost_with(formula, catalog, th, Chooser::Greedy)
}

/// Expected cost of evaluating in ascending head time.
pub fn static_expected_cost(
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    th: Thresholds,
) -> Result<f64, SolverError> {
    expected_cost_with(formula, catalog, th, Chooser::Static)
}

/// Chooses the next filter to evaluate, or `None` to stop.
pub trait EvaluationPolicy {
    fn next(
        &mut self,
        formula: &DnfFormula,
        state: &ExecutionState,
        catalog: &FilterCatalog,
    ) -> Result<Option<FilterId>, FormulaError>;
}

/// Exit test shared by every policy; mirrors the onboard loop.
pub fn should_stop(
    formula: &DnfFormula,
    state: &ExecutionState,
    catalog: &FilterCatalog,
    th: Thresholds,
) -> Result<bool, FormulaError> {
    if decided_priority(formula, state).is_some() || !formula.has_live_term(state) {
        return Ok(true);
    }
    let conf = crate::formula::confidence(formula, state, catalog)?;
    Ok(conf < th.beta || conf > th.alpha)
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy {
    pub thresholds: Thresholds,
}

impl EvaluationPolicy for GreedyPolicy {
    fn next(
        &mut self,
        formula: &DnfFormula,
        state: &ExecutionState,
        catalog: &FilterCatalog,
    ) -> Result<Option<FilterId>, FormulaError> {
        if should_stop(formula, state, catalog, self.thresholds)? {
            return Ok(None);
        }
        select_next(FilterOrdering::Greedy, formula, state, catalog)
    }
}

/// Ascending head time, ignoring backbone state and probabilities. Filters of
/// failed terms are skipped and evaluation stops on a satisfied term.
#[derive(Debug, Clone, Copy)]
pub struct StaticBaselinePolicy {
    pub thresholds: Thresholds,
}

impl Default for StaticBaselinePolicy {
    fn default() -> Self {
        StaticBaselinePolicy { thresholds: Thresholds::EXHAUSTIVE }
    }
}

impl EvaluationPolicy for StaticBaselinePolicy {
    fn next(
        &mut self,
        formula: &DnfFormula,
        state: &ExecutionState,
        catalog: &FilterCatalog,
    ) -> Result<Option<FilterId>, FormulaError> {
        if should_stop(formula, state, catalog, self.thresholds)? {
            return Ok(None);
        }
        select_next(FilterOrdering::StaticByTime, formula, state, catalog)
    }
}

/// Expected-cost-optimal policy for one formula.
pub struct ExactPolicy {
    compiled: CompiledFormula,
    thresholds: Thresholds,
    memo: HashMap<u128, (f64, u8)>,
    expected_cost: f64,
}

impl ExactPolicy {
    pub fn new(
        formula: &DnfFormula,
        catalog: &FilterCatalog,
        thresholds: Thresholds,
    ) -> Result<Self, SolverError> {
        let compiled = CompiledFormula::new(formula, catalog)?;
        let mut solver =
            Solver { c: &compiled, th: thresholds, chooser: Chooser::Exact, memo: HashMap::new() };
        let expected_cost = solver.value(compiled.initial());
        let memo = solver.memo;
        Ok(ExactPolicy { compiled, thresholds, memo, expected_cost })
    }

    pub fn expected_cost(&self) -> f64 {
        self.expected_cost
    }
}

impl EvaluationPolicy for ExactPolicy {
    fn next(
        &mut self,
        _formula: &DnfFormula,
        state: &ExecutionState,
        _catalog: &FilterCatalog,
    ) -> Result<Option<FilterId>, FormulaError> {
        let s = self.compiled.from_execution(state);
        if self.compiled.exits(s, self.thresholds) {
            return Ok(None);
        }
        let key = self.compiled.key(s);
        let action = match self.memo.get(&key) {
            Some(&(_, a)) => a,
            None => {
                // states off the optimal path (reached by another policy's
                // choices) are solved on demand
                let mut solver = Solver {
                    c: &self.compiled,
                    th: self.thresholds,
                    chooser: Chooser::Exact,
                    memo: std::mem::take(&mut self.memo),
                };
                solver.value(s);
                self.memo = solver.memo;
                self.memo[&key].1
            }
        };
        Ok(self.compiled.ids.get(action as usize).copied())
    }
}

/// Outcome of running a policy against known filter outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRun {
    pub filters_run: Vec<FilterId>,
    /// Sum of effective times of the executed filters.
    pub cost: f64,
    /// Resulting tier: a satisfied or confidently live term's priority, or
    /// the compute tier.
    pub tier: Tier,
}

pub fn run_policy(
    policy: &mut dyn EvaluationPolicy,
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    thresholds: Thresholds,
    outcomes: &dyn Fn(FilterId) -> bool,
) -> Result<PolicyRun, FormulaError> {
    let mut state = ExecutionState::new();
    let mut filters_run = Vec::new();
    let mut cost = 0.0;
    while let Some(id) = policy.next(formula, &state, catalog)? {
        if state.is_evaluated(id) {
            return Err(FormulaError::AlreadyEvaluated(id));
        }
        let f = catalog.get(id)?;
        cost += effective_time(f, catalog, &state);
        state.record(f, outcomes(id))?;
        filters_run.push(id);
    }
    let tier = match decided_priority(formula, &state) {
        Some(p) => Tier::from_priority(p).unwrap_or(Tier::P2),
        None => match formula.max_live_priority(&state) {
            Some(p) if crate::formula::confidence(formula, &state, catalog)? > thresholds.alpha => {
                Tier::from_priority(p).unwrap_or(Tier::P2)
            }
            _ => Tier::Compute,
        },
    };
    Ok(PolicyRun { filters_run, cost, tier })
}

/// Cheapest set of filters whose true outcomes logically decide the formula.
///
/// When the formula is true this is its cheapest satisfied term. When it is
/// false it is the cheapest set of False filters hitting every term. Costs
/// pay each backbone once. The returned order runs filters grouped by
/// backbone so that sharing is realized.
pub fn oracle_policy(
    formula: &DnfFormula,
    outcomes: &dyn Fn(FilterId) -> bool,
    catalog: &FilterCatalog,
) -> Result<(Vec<FilterId>, f64), SolverError> {
    let c = CompiledFormula::new(formula, catalog)?;
    let truth: u32 = (0..c.ids.len()).filter(|&i| outcomes(c.ids[i])).fold(0, |m, i| m | 1 << i);
    let set_cost = |mask: u32| -> f64 {
        let mut loaded = 0u32;
        let mut total = 0.0;
        for i in bits(u64::from(mask)) {
            total += c.head[i];
            if let Some(b) = c.backbone[i] {
                if loaded & (1 << b) == 0 {
                    loaded |= 1 << b;
                    total += c.load[b as usize];
                }
            }
        }
        total
    };

    let satisfied: Vec<u32> = c.term_filters.iter().copied().filter(|&m| m & !truth == 0).collect();
    let best_mask = if !satisfied.is_empty() {
        let mut best = (f64::INFINITY, 0u32);
        for m in satisfied {
            let cost = set_cost(m);
            if cost < best.0 || (cost == best.0 && m < best.1) {
                best = (cost, m);
            }
        }
        best.1
    } else {
        let mut best = (f64::INFINITY, u32::MAX);
        hitting_set(&c, !truth, 0, &set_cost, &mut best);
        best.1
    };

    let mut order: Vec<usize> = bits(u64::from(best_mask)).collect();
    order.sort_by_key(|&i| (c.backbone[i].map_or(u16::MAX, u16::from), i));
    let cost = set_cost(best_mask);
    Ok((order.into_iter().map(|i| c.ids[i]).collect(), cost))
}

fn hitting_set(
    c: &CompiledFormula,
    false_mask: u32,
    chosen: u32,
    cost: &dyn Fn(u32) -> f64,
    best: &mut (f64, u32),
) {
    let current = cost(chosen);
    if current > best.0 {
        return;
    }
    let unhit = c.term_filters.iter().find(|&&m| m & chosen == 0);
    match unhit {
        None => {
            if current < best.0 || (current == best.0 && chosen < best.1) {
                *best = (current, chosen);
            }
        }
        Some(&m) => {
            for i in bits(u64::from(m & false_mask)) {
                hitting_set(c, false_mask, chosen | 1 << i, cost, best);
            }
        }
    }
}
