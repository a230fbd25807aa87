//! Onboard prioritization: greedy filter ordering inside an adaptive
//! confidence band.
//!
//! For every image the runtime repeatedly executes the live filter with the
//! highest utility
//!
//! ```text
//! U(f, E) = (1 - p_f) * tpr_f * n_f / t_eff(f, E)
//! ```
//!
//! until the formula is decided or its confidence leaves `[beta, alpha]`.
//! `n_f` counts the terms containing `f` that are still alive.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::FormulaError;
use crate::formula::{
    confidence, decided_priority, DnfFormula, ExecutionState, Filter, FilterCatalog, FilterId, Tier,
};
use crate::rng;
use crate::timing::{sequence_time, TimingModel};

/// Accelerator seconds to run `filter` given what is already loaded.
pub fn effective_time(filter: &Filter, catalog: &FilterCatalog, state: &ExecutionState) -> f64 {
    match filter.backbone {
        Some(b) if !state.is_loaded(b) => {
            filter.head_time + catalog.backbone(b).map_or(0.0, |bb| bb.load_time)
        }
        _ => filter.head_time,
    }
}

/// Number of terms containing `id` that have no False outcome yet.
pub fn live_term_count(id: FilterId, formula: &DnfFormula, state: &ExecutionState) -> usize {
    formula.terms().iter().filter(|t| t.contains(id) && t.is_alive(state)).count()
}

pub fn utility(
    filter: &Filter,
    formula: &DnfFormula,
    state: &ExecutionState,
    catalog: &FilterCatalog,
) -> f64 {
    let n = live_term_count(filter.id, formula, state);
    if n == 0 {
        return 0.0;
    }
    (1.0 - filter.pass_prob) * filter.tpr * n as f64 / effective_time(filter, catalog, state)
}

/// Unevaluated filters that appear in at least one live term, ascending.
pub fn live_candidates(formula: &DnfFormula, state: &ExecutionState) -> Vec<FilterId> {
    let mut out: Vec<FilterId> = formula
        .terms()
        .iter()
        .filter(|t| t.is_alive(state))
        .flat_map(|t| t.filters().iter().copied())
        .filter(|&f| !state.is_evaluated(f))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// How the next filter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOrdering {
    /// Maximum utility, ties to the lowest id.
    Greedy,
    /// Ascending head time regardless of state, ties to the lowest id.
    StaticByTime,
}

pub fn select_next(
    ordering: FilterOrdering,
    formula: &DnfFormula,
    state: &ExecutionState,
    catalog: &FilterCatalog,
) -> Result<Option<FilterId>, FormulaError> {
    let mut best: Option<(FilterId, f64)> = None;
    for id in live_candidates(formula, state) {
        let f = catalog.get(id)?;
        let better = match (ordering, best) {
            (_, None) => true,
            (FilterOrdering::Greedy, Some((_, u))) => utility(f, formula, state, catalog) > u,
            (FilterOrdering::StaticByTime, Some((_, t))) => f.head_time < t,
        };
        if better {
            let score = match ordering {
                FilterOrdering::Greedy => utility(f, formula, state, catalog),
                FilterOrdering::StaticByTime => f.head_time,
            };
            best = Some((id, score));
        }
    }
    Ok(best.map(|(id, _)| id))
}

/// Lower and upper confidence thresholds of the evaluation loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub beta: f64,
    pub alpha: f64,
}

impl Thresholds {
    pub fn new(beta: f64, alpha: f64) -> Result<Self, FormulaError> {
        if !(0.0..1.0).contains(&beta) || !(0.0..=1.0).contains(&alpha) || beta >= alpha {
            return Err(FormulaError::InvalidThresholds(format!(
                "need 0 <= beta < alpha <= 1, got beta={beta} alpha={alpha}"
            )));
        }
        Ok(Thresholds { beta, alpha })
    }

    /// Evaluate until the formula is logically decided.
    pub const EXHAUSTIVE: Thresholds = Thresholds { beta: 0.0, alpha: 1.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub alpha0: f64,
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub target_power_fraction: f64,
    /// Margin kept between the floor of alpha and beta.
    pub floor_margin: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            alpha0: 0.90,
            beta: 0.01,
            lambda1: 0.05,
            lambda2: 0.10,
            target_power_fraction: 0.70,
            floor_margin: 0.01,
        }
    }
}

/// Adaptive upper threshold driven by power state and rejection rate:
///
/// ```text
/// alpha_t = min(1, alpha_{t-1} + l1 (r_power - 1) + l2 (r_dep - r_reject))
/// ```
///
/// clamped below at `beta + floor_margin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdController {
    alpha: f64,
    beta: f64,
    lambda1: f64,
    lambda2: f64,
    target_power_fraction: f64,
    target_reject_rate: f64,
    floor_margin: f64,
    dep_count: u64,
    computed_count: u64,
}

impl ThresholdController {
    pub fn new(config: ControllerConfig) -> Result<Self, FormulaError> {
        Thresholds::new(config.beta, config.alpha0)?;
        if !(config.lambda1 >= 0.0 && config.lambda2 >= 0.0) {
            return Err(FormulaError::InvalidThresholds("gains must be >= 0".into()));
        }
        if !(config.target_power_fraction > 0.0 && config.target_power_fraction <= 1.0) {
            return Err(FormulaError::InvalidThresholds(
                "target power fraction must be in (0, 1]".into(),
            ));
        }
        Ok(ThresholdController {
            alpha: config.alpha0,
            beta: config.beta,
            lambda1: config.lambda1,
            lambda2: config.lambda2,
            target_power_fraction: config.target_power_fraction,
            target_reject_rate: 0.0,
            floor_margin: config.floor_margin.max(0.0),
            dep_count: 0,
            computed_count: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds { beta: self.beta, alpha: self.alpha }
    }

    pub fn target_reject_rate(&self) -> f64 {
        self.target_reject_rate
    }

    pub fn set_target_reject_rate(&mut self, r: f64) {
        self.target_reject_rate = r.clamp(0.0, 1.0);
    }

    /// Ratio of the current charge to the target charge.
    pub fn power_ratio(&self, battery: f64, capacity: f64) -> f64 {
        if capacity <= 0.0 {
            return 0.0;
        }
        (battery / (self.target_power_fraction * capacity)).max(0.0)
    }

    /// Counts one prioritized image; `deprioritized` when it fell to the
    /// compute tier.
    pub fn record(&mut self, deprioritized: bool) {
        self.computed_count += 1;
        if deprioritized {
            self.dep_count += 1;
        }
    }

    pub fn reset_tallies(&mut self) {
        self.dep_count = 0;
        self.computed_count = 0;
    }

    /// Images recorded since the last tally reset.
    pub fn computed_count(&self) -> u64 {
        self.computed_count
    }

    pub fn r_dep(&self) -> f64 {
        self.dep_count as f64 / self.computed_count.max(1) as f64
    }

    pub fn update_alpha(&mut self, power_ratio: f64) -> f64 {
        let next = self.alpha
            + self.lambda1 * (power_ratio - 1.0)
            + self.lambda2 * (self.r_dep() - self.target_reject_rate);
        let floor = (self.beta + self.floor_margin).min(1.0);
        self.alpha = next.min(1.0).max(floor);
        self.alpha
    }
}

/// Supplies the Boolean outcome of executing a filter on the current image.
pub trait OutcomeSource {
    fn observe(&mut self, filter: &Filter) -> Result<bool, FormulaError>;
}

/// Outcomes read from a fixed table, e.g. ground truth with perfect models.
#[derive(Debug, Clone, Default)]
pub struct FixedOutcomes(pub BTreeMap<FilterId, bool>);

impl OutcomeSource for FixedOutcomes {
    fn observe(&mut self, filter: &Filter) -> Result<bool, FormulaError> {
        self.0.get(&filter.id).copied().ok_or(FormulaError::UnknownFilter(filter.id))
    }
}

/// Imperfect models over a hidden ground truth.
///
/// A filter reports the truth with probability `tpr` when the truth is True
/// and `1 - fpr` when it is False. The uniform draw for each filter is
/// addressed by `(seed, filter id)`, so lowering accuracy only ever adds
/// misclassifications to the ones a more accurate model would make.
#[derive(Debug, Clone)]
pub struct SimulatedOutcomes {
    pub truth: BTreeMap<FilterId, bool>,
    pub seed: u64,
}

impl OutcomeSource for SimulatedOutcomes {
    fn observe(&mut self, filter: &Filter) -> Result<bool, FormulaError> {
        let truth = *self.truth.get(&filter.id).ok_or(FormulaError::UnknownFilter(filter.id))?;
        let u = rng::unit(self.seed, &[filter.id.0 as u64]);
        Ok(if truth { u < filter.tpr } else { u >= 1.0 - filter.fpr })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    /// Some term was fully satisfied.
    Satisfied,
    /// Every term has a False outcome.
    Exhausted,
    BelowBeta,
    AboveAlpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritizationResult {
    /// An explicit priority 2–5 or the compute tier.
    pub priority: Tier,
    pub filters_run: Vec<FilterId>,
    /// Effective accelerator time of each executed filter.
    pub filter_times: Vec<f64>,
    pub outcomes: Vec<bool>,
    pub compute_time: f64,
    pub energy: f64,
    pub final_confidence: f64,
    pub confidence_trajectory: Vec<f64>,
    pub alpha: f64,
    pub exit: ExitReason,
}

/// Runs one image through the evaluation loop.
#[allow(clippy::too_many_arguments)]
pub fn prioritize_image(
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    thresholds: Thresholds,
    ordering: FilterOrdering,
    outcomes: &mut dyn OutcomeSource,
    timing: &TimingModel,
    rng: &mut dyn RngCore,
    compute_power: f64,
) -> Result<PrioritizationResult, FormulaError> {
    catalog.check_formula(formula)?;
    let mut state = ExecutionState::new();
    let mut filters_run = Vec::new();
    let mut filter_times = Vec::new();
    let mut observed = Vec::new();
    let mut conf = confidence(formula, &state, catalog)?;
    let mut trajectory = vec![conf];

    let (priority, exit) = loop {
        if let Some(p) = decided_priority(formula, &state) {
            break (tier(p), ExitReason::Satisfied);
        }
        if !formula.has_live_term(&state) {
            break (Tier::Compute, ExitReason::Exhausted);
        }
        if conf < thresholds.beta {
            break (Tier::Compute, ExitReason::BelowBeta);
        }
        if conf > thresholds.alpha {
            let p = formula.max_live_priority(&state).unwrap_or(2);
            break (tier(p), ExitReason::AboveAlpha);
        }
        let Some(next) = select_next(ordering, formula, &state, catalog)? else {
            // a live, unsatisfied term always has an unevaluated filter
            break (Tier::Compute, ExitReason::Exhausted);
        };
        let filter = catalog.get(next)?;
        filter_times.push(effective_time(filter, catalog, &state));
        let outcome = outcomes.observe(filter)?;
        state.record(filter, outcome)?;
        filters_run.push(next);
        observed.push(outcome);
        conf = confidence(formula, &state, catalog)?;
        trajectory.push(conf);
    };

    let compute_time =
        if filters_run.is_empty() { 0.0 } else { sequence_time(&filter_times, timing, rng) };
    Ok(PrioritizationResult {
        priority,
        filters_run,
        filter_times,
        outcomes: observed,
        compute_time,
        energy: compute_time * compute_power,
        final_confidence: conf,
        confidence_trajectory: trajectory,
        alpha: thresholds.alpha,
        exit,
    })
}

fn tier(p: u8) -> Tier {
    Tier::from_priority(p).unwrap_or(Tier::P2)
}

/// One line of the per-image trace log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub image: u64,
    pub satellite: u32,
    pub filters_run: Vec<FilterId>,
    pub filter_times: Vec<f64>,
    pub confidence: Vec<f64>,
    pub alpha: f64,
    pub priority: Tier,
    pub compute_time: f64,
}

impl TraceRecord {
    pub fn new(image: u64, satellite: u32, result: &PrioritizationResult) -> Self {
        TraceRecord {
            image,
            satellite,
            filters_run: result.filters_run.clone(),
            filter_times: result.filter_times.clone(),
            confidence: result.confidence_trajectory.clone(),
            alpha: result.alpha,
            priority: result.priority,
            compute_time: result.compute_time,
        }
    }
}
