//! Ground-side forecast of downlink demand and capacity.
//!
//! Each forecast image contributes its size to the priority tiers in
//! proportion to the probability of landing there. The priority threshold
//! `p*` is the lowest tier whose cumulative expected bytes, counted from the
//! top tier down, still fit the forecast window capacity. The target
//! rejection rate is the expected share of onboard-processed images that
//! will not make it above `p*`.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::formula::{DnfFormula, FilterCatalog, FilterId, Tier};
use crate::rng;

/// Formulas with at most this many filters get an exact distribution.
pub const MAX_ENUMERATED_FILTERS: usize = 16;
pub const MONTE_CARLO_SAMPLES: usize = 20_000;

/// Probability of each tier, indexed by [`Tier::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TierDistribution(pub [f64; 6]);

impl TierDistribution {
    pub fn get(&self, t: Tier) -> f64 {
        self.0[t.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Probability of a tier at or above `t` in transmit order.
    pub fn at_or_above(&self, t: Tier) -> f64 {
        self.0[t.index()..].iter().sum()
    }
}

struct Masks {
    ids: Vec<FilterId>,
    pass: Vec<f64>,
    terms: Vec<(u64, u8)>,
}

impl Masks {
    fn new(formula: &DnfFormula, catalog: &FilterCatalog) -> Self {
        let ids: Vec<FilterId> = formula.filter_set().into_iter().collect();
        let pass = ids.iter().map(|&id| catalog.get(id).map_or(0.0, |f| f.pass_prob)).collect();
        let terms = formula
            .terms()
            .iter()
            .map(|t| {
                let m = t
                    .filters()
                    .iter()
                    .fold(0u64, |m, f| m | 1 << ids.binary_search(f).expect("formula filter"));
                (m, t.priority())
            })
            .collect();
        Masks { ids, pass, terms }
    }

    fn tier(&self, truth: u64) -> Tier {
        self.terms
            .iter()
            .filter(|(m, _)| m & !truth == 0)
            .map(|&(_, p)| p)
            .max()
            .and_then(Tier::from_priority)
            .unwrap_or(Tier::Compute)
    }
}

/// Distribution of the tier an image receives when its formula is evaluated
/// to completion by perfect models, treating filters as independent.
pub fn priority_distribution(formula: &DnfFormula, catalog: &FilterCatalog) -> TierDistribution {
    let m = Masks::new(formula, catalog);
    let n = m.ids.len();
    let mut dist = [0.0; 6];
    if n <= MAX_ENUMERATED_FILTERS {
        for truth in 0u64..(1u64 << n) {
            let mut w = 1.0;
            for (i, &p) in m.pass.iter().enumerate() {
                w *= if truth >> i & 1 == 1 { p } else { 1.0 - p };
            }
            dist[m.tier(truth).index()] += w;
        }
    } else {
        let mut bytes = Vec::new();
        formula.write_to(&mut bytes).expect("formula fits the wire format");
        let key = bytes
            .iter()
            .fold(rng::label("priority_distribution"), |h, &b| rng::mix(h, &[u64::from(b)]));
        let mut r = rng::stream(key, &[]);
        for _ in 0..MONTE_CARLO_SAMPLES {
            let truth = m.pass.iter().enumerate().fold(0u64, |t, (i, &p)| {
                if r.gen::<f64>() < p {
                    t | 1 << i
                } else {
                    t
                }
            });
            dist[m.tier(truth).index()] += 1.0;
        }
        for d in &mut dist {
            *d /= MONTE_CARLO_SAMPLES as f64;
        }
    }
    TierDistribution(dist)
}

/// Expected bytes per tier.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PriorityLedger {
    pub bytes: [f64; 6],
}

impl PriorityLedger {
    pub fn add(&mut self, size: f64, dist: &TierDistribution) {
        for (b, p) in self.bytes.iter_mut().zip(dist.0) {
            *b += size * p;
        }
    }

    pub fn add_to(&mut self, size: f64, tier: Tier) {
        self.bytes[tier.index()] += size;
    }

    pub fn total(&self) -> f64 {
        self.bytes.iter().sum()
    }

    pub fn get(&self, t: Tier) -> f64 {
        self.bytes[t.index()]
    }

    /// Lowest tier whose cumulative bytes from the top fit in `capacity`.
    /// With no capacity, or when even the top tier overflows, the top tier.
    pub fn threshold(&self, capacity: f64) -> Tier {
        if capacity <= 0.0 {
            return Tier::P5;
        }
        let mut cum = 0.0;
        let mut p_star = Tier::P5;
        for t in Tier::TRANSMIT_ORDER {
            cum += self.get(t);
            if cum > capacity {
                break;
            }
            p_star = t;
        }
        p_star
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownlinkWindow {
    pub satellite: u32,
    pub station: u32,
    pub start: f64,
    pub end: f64,
    /// Effective goodput, bytes per second.
    pub bandwidth: f64,
}

impl DownlinkWindow {
    pub fn capacity(&self) -> f64 {
        (self.end - self.start).max(0.0) * self.bandwidth
    }
}

/// A capture expected before the forecast windows close.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastImage {
    pub time: f64,
    pub size: f64,
    /// `None` for captures without onboard inference.
    pub formula: Option<DnfFormula>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub p_star: Tier,
    pub r_reject: f64,
    pub capacity: f64,
    pub ledger: PriorityLedger,
    /// Expected images requiring onboard computation.
    pub inference: f64,
    /// Expected computed images landing at or above `p_star`.
    pub downlink: f64,
    /// Capacity of each forecast window, bytes.
    pub window_capacity: Vec<f64>,
}

impl Forecast {
    /// Priority threshold used for schedule generation.
    pub fn schedule_threshold(&self) -> u8 {
        self.p_star.priority().unwrap_or(2).max(2)
    }
}

pub fn reject_rate(inference: f64, downlink: f64) -> f64 {
    if inference <= 0.0 {
        0.0
    } else {
        ((inference - downlink) / inference).clamp(0.0, 1.0)
    }
}

/// Forecasting engine with a per-formula distribution cache.
#[derive(Debug, Default)]
pub struct Lookahead {
    cache: HashMap<DnfFormula, TierDistribution>,
}

impl Lookahead {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn distribution(
        &mut self,
        formula: &DnfFormula,
        catalog: &FilterCatalog,
    ) -> TierDistribution {
        if let Some(d) = self.cache.get(formula) {
            return *d;
        }
        let d = priority_distribution(formula, catalog);
        self.cache.insert(formula.clone(), d);
        d
    }

    /// Pass probabilities changed: cached distributions are stale.
    pub fn invalidate(&mut self) {
        self.cache.clear();
    }

    /// Forecast from expected captures, the bytes already queued per tier
    /// and the upcoming windows.
    pub fn forecast_contact(
        &mut self,
        images: &[ForecastImage],
        backlog: &PriorityLedger,
        windows: &[DownlinkWindow],
        catalog: &FilterCatalog,
    ) -> Forecast {
        let mut ledger = *backlog;
        let mut dists = Vec::new();
        for img in images {
            match &img.formula {
                Some(f) => {
                    let d = self.distribution(f, catalog);
                    ledger.add(img.size, &d);
                    dists.push(d);
                }
                None => ledger.add_to(img.size, Tier::P1),
            }
        }
        let window_capacity: Vec<f64> = windows.iter().map(DownlinkWindow::capacity).collect();
        let capacity: f64 = window_capacity.iter().sum();
        let p_star = ledger.threshold(capacity);
        let inference = dists.len() as f64;
        let downlink =
            if capacity <= 0.0 { 0.0 } else { dists.iter().map(|d| d.at_or_above(p_star)).sum() };
        Forecast {
            p_star,
            r_reject: reject_rate(inference, downlink),
            capacity,
            ledger,
            inference,
            downlink,
            window_capacity,
        }
    }
}

/// Rolling forecast state for one satellite, corrected with observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPlan {
    pub images: Vec<ForecastImage>,
    pub windows: Vec<DownlinkWindow>,
    pub backlog: PriorityLedger,
}

impl ForecastPlan {
    /// Drops everything before `now`, replaces the forecast backlog with the
    /// observed one and forecasts the remainder.
    pub fn reconcile(
        &mut self,
        now: f64,
        observed_backlog: PriorityLedger,
        engine: &mut Lookahead,
        catalog: &FilterCatalog,
    ) -> Forecast {
        self.images.retain(|i| i.time > now);
        self.windows.retain(|w| w.end > now);
        for w in &mut self.windows {
            w.start = w.start.max(now);
        }
        self.backlog = observed_backlog;
        engine.forecast_contact(&self.images, &self.backlog, &self.windows, catalog)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Filter, Term};

    fn cat(ps: &[f64]) -> FilterCatalog {
        FilterCatalog::new(
            ps.iter().enumerate().map(|(i, &p)| Filter {
                id: FilterId(i as u16),
                backbone: None,
                head_time: 1.0,
                pass_prob: p,
                tpr: 0.95,
                fpr: 0.05,
            }),
            [],
        )
        .unwrap()
    }

    fn single(id: u16, p: u8) -> Term {
        Term::new([FilterId(id)], p).unwrap()
    }

    #[test]
    fn single_term_distribution() {
        let c = cat(&[0.5]);
        let f = DnfFormula::new(vec![single(0, 4)]).unwrap();
        let d = priority_distribution(&f, &c);
        assert_eq!(d.get(Tier::P4), 0.5);
        assert_eq!(d.get(Tier::Compute), 0.5);
    }

    #[test]
    fn two_disjoint_terms() {
        let c = cat(&[0.5, 0.5]);
        let f = DnfFormula::new(vec![single(0, 3), single(1, 5)]).unwrap();
        let d = priority_distribution(&f, &c);
        assert_eq!(d.get(Tier::P5), 0.5);
        assert_eq!(d.get(Tier::P3), 0.25);
        assert_eq!(d.get(Tier::Compute), 0.25);
    }

    #[test]
    fn certain_filters() {
        let c = cat(&[1.0, 1.0]);
        let f = DnfFormula::new(vec![single(0, 3), single(1, 4)]).unwrap();
        assert_eq!(priority_distribution(&f, &c).get(Tier::P4), 1.0);
    }

    #[test]
    fn reject_rate_examples() {
        assert!((reject_rate(100.0, 60.0) - 0.4).abs() < 1e-15);
        assert_eq!(reject_rate(0.0, 0.0), 0.0);
        assert_eq!(reject_rate(10.0, 12.0), 0.0);
    }

    #[test]
    fn ledger_uses_expectation() {
        let mut l = PriorityLedger::default();
        let mut d = TierDistribution::default();
        for t in [Tier::P5, Tier::P4, Tier::P3, Tier::P2] {
            d.0[t.index()] = 0.1;
        }
        d.0[Tier::Compute.index()] = 0.6;
        l.add(50_000.0, &d);
        assert!((l.get(Tier::P4) - 5_000.0).abs() < 1e-9);
        assert!((l.total() - 50_000.0).abs() < 1e-9);
    }

    fn window(cap: f64) -> DownlinkWindow {
        DownlinkWindow { satellite: 0, station: 0, start: 0.0, end: 1.0, bandwidth: cap }
    }

    #[test]
    fn threshold_cases() {
        let c = cat(&[0.5]);
        let f = DnfFormula::new(vec![single(0, 4)]).unwrap();
        let images: Vec<ForecastImage> = (0..10)
            .map(|i| ForecastImage { time: i as f64, size: 100.0, formula: Some(f.clone()) })
            .collect();
        let mut la = Lookahead::new();
        let backlog = PriorityLedger::default();

        let all = la.forecast_contact(&images, &backlog, &[window(1e9)], &c);
        assert_eq!(all.p_star, Tier::P1);
        assert_eq!(all.r_reject, 0.0);

        let half = la.forecast_contact(&images, &backlog, &[window(600.0)], &c);
        // empty tiers between P4 and P2 fit trivially
        assert_eq!(half.p_star, Tier::P2);
        assert!((half.r_reject - 0.5).abs() < 1e-12);

        let none = la.forecast_contact(&images, &backlog, &[], &c);
        assert_eq!(none.p_star, Tier::P5);
        assert_eq!(none.r_reject, 1.0);
        assert_eq!(none.schedule_threshold(), 5);
    }

    #[test]
    fn reconcile_with_matching_actuals_is_idempotent() {
        let c = cat(&[0.3]);
        let f = DnfFormula::new(vec![single(0, 5)]).unwrap();
        let mut plan = ForecastPlan {
            images: (0..20)
                .map(|i| ForecastImage {
                    time: 10.0 + i as f64,
                    size: 100.0,
                    formula: Some(f.clone()),
                })
                .collect(),
            windows: vec![DownlinkWindow {
                satellite: 0,
                station: 0,
                start: 50.0,
                end: 60.0,
                bandwidth: 100.0,
            }],
            backlog: PriorityLedger::default(),
        };
        let mut la = Lookahead::new();
        let first = la.forecast_contact(&plan.images, &plan.backlog, &plan.windows, &c);
        let again = plan.reconcile(0.0, PriorityLedger::default(), &mut la, &c);
        assert_eq!(first, again);
        let late = plan.reconcile(100.0, PriorityLedger::default(), &mut la, &c);
        assert_eq!(late.p_star, Tier::P5);
    }
}
