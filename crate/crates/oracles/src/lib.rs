//! Slow, obviously-correct reference computations.
//!
//! Every function here trades speed for transparency: full enumeration of
//! outcome assignments, decision trees or subsets. They exist to be compared
//! against the optimized implementations in `orbitprio-core` and are only
//! practical for small inputs.

pub mod random;

use std::collections::{BTreeMap, BTreeSet};

use orbitprio_core::formula::{
    confidence, decided_priority, DnfFormula, ExecutionState, FilterCatalog, FilterId, Tier,
};
use orbitprio_core::geo::{GeoPoint, Region};
use orbitprio_core::runtime::effective_time;
use orbitprio_core::schedule::{Capture, Query};

/// All 2^n assignments of `ids`, with their probability under independent
/// pass probabilities.
pub fn assignments(
    ids: &[FilterId],
    catalog: &FilterCatalog,
) -> Vec<(BTreeMap<FilterId, bool>, f64)> {
    let n = ids.len();
    let mut out = Vec::with_capacity(1 << n);
    for bits in 0u64..(1u64 << n) {
        let mut w = 1.0;
        let mut a = BTreeMap::new();
        for (i, &id) in ids.iter().enumerate() {
            let p = catalog.get(id).expect("catalog filter").pass_prob;
            let v = bits >> i & 1 == 1;
            w *= if v { p } else { 1.0 - p };
            a.insert(id, v);
        }
        out.push((a, w));
    }
    out
}

/// Exact probability that the formula is satisfied given the evaluated
/// outcomes in `state`, by enumerating every unevaluated filter.
pub fn joint_satisfaction_probability(
    formula: &DnfFormula,
    state: &ExecutionState,
    catalog: &FilterCatalog,
) -> f64 {
    let unevaluated: Vec<FilterId> =
        formula.filter_set().into_iter().filter(|f| !state.is_evaluated(*f)).collect();
    assignments(&unevaluated, catalog)
        .into_iter()
        .filter(|(a, _)| {
            formula
                .evaluate(|f| state.outcome(f).or_else(|| a.get(&f).copied()).unwrap_or(false))
                .is_some()
        })
        .map(|(_, w)| w)
        .sum()
}

/// Exact distribution of the priority an image receives when the formula is
/// evaluated to completion with perfect models: the maximum priority of a
/// satisfied term, or the compute tier.
pub fn priority_distribution(formula: &DnfFormula, catalog: &FilterCatalog) -> BTreeMap<Tier, f64> {
    let ids: Vec<FilterId> = formula.filter_set().into_iter().collect();
    let mut dist = BTreeMap::new();
    for (a, w) in assignments(&ids, catalog) {
        let tier = match formula.evaluate(|f| a[&f]) {
            Some(p) => Tier::from_priority(p).expect("term priority"),
            None => Tier::Compute,
        };
        *dist.entry(tier).or_insert(0.0) += w;
    }
    dist
}

/// Stop rule of the onboard loop, written directly from its definition.
fn stops(
    formula: &DnfFormula,
    state: &ExecutionState,
    catalog: &FilterCatalog,
    beta: f64,
    alpha: f64,
) -> bool {
    if decided_priority(formula, state).is_some() {
        return true;
    }
    if !formula.terms().iter().any(|t| t.is_alive(state)) {
        return true;
    }
    let c = confidence(formula, state, catalog).expect("valid formula");
    c < beta || c > alpha
}

/// Minimum expected cost over every decision tree, found by trying every
/// unevaluated filter of the formula (dead ones included) at every node.
/// No memoization, no state compression. Exponential; keep |F| small.
pub fn min_decision_tree_cost(
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    beta: f64,
    alpha: f64,
) -> f64 {
    let ids: Vec<FilterId> = formula.filter_set().into_iter().collect();
    tree(formula, catalog, &ids, &ExecutionState::new(), beta, alpha)
}

fn tree(
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    ids: &[FilterId],
    state: &ExecutionState,
    beta: f64,
    alpha: f64,
) -> f64 {
    if stops(formula, state, catalog, beta, alpha) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for &id in ids {
        if state.is_evaluated(id) {
            continue;
        }
        let f = catalog.get(id).expect("catalog filter");
        let mut cost = effective_time(f, catalog, state);
        for (outcome, w) in [(true, f.pass_prob), (false, 1.0 - f.pass_prob)] {
            if w == 0.0 {
                continue;
            }
            let mut next = state.clone();
            next.record(f, outcome).expect("fresh filter");
            cost += w * tree(formula, catalog, ids, &next, beta, alpha);
        }
        best = best.min(cost);
    }
    best
}

/// Cost of evaluating a set of filters on one image, each backbone once.
pub fn set_cost(set: &BTreeSet<FilterId>, catalog: &FilterCatalog) -> f64 {
    let mut loaded = BTreeSet::new();
    let mut total = 0.0;
    for &id in set {
        let f = catalog.get(id).expect("catalog filter");
        total += f.head_time;
        if let Some(b) = f.backbone {
            if loaded.insert(b) {
                total += catalog.backbone(b).expect("catalog backbone").load_time;
            }
        }
    }
    total
}

/// Minimum cost of any subset of filters whose true outcomes fix the value
/// of the formula, checked by enumerating every completion of the rest.
pub fn min_certificate_cost(
    formula: &DnfFormula,
    truth: &BTreeMap<FilterId, bool>,
    catalog: &FilterCatalog,
) -> f64 {
    let ids: Vec<FilterId> = formula.filter_set().into_iter().collect();
    let n = ids.len();
    let value = formula.evaluate(|f| truth[&f]).is_some();
    let mut best = f64::INFINITY;
    for mask in 0u64..(1u64 << n) {
        let chosen: BTreeSet<FilterId> =
            (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ids[i]).collect();
        let free: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
        let decides = (0u64..(1u64 << free.len())).all(|fill| {
            let outcome = |f: FilterId| {
                let i = ids.iter().position(|&x| x == f).expect("formula filter");
                match free.iter().position(|&j| j == i) {
                    Some(k) => fill >> k & 1 == 1,
                    None => truth[&f],
                }
            };
            formula.evaluate(outcome).is_some() == value
        });
        if decides {
            best = best.min(set_cost(&chosen, catalog));
        }
    }
    best
}

/// Nearest-rank percentile: the smallest sample value `x` such that at
/// least `q` of the samples are at most `x`. `None` for an empty sample.
pub fn percentile(samples: &[f64], q: f64) -> Option<f64> {
    let n = samples.len() as f64;
    let mut candidates: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|&x| samples.iter().filter(|&&y| y <= x).count() as f64 >= q * n - 1e-9)
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.first().copied()
}

/// Region membership by modular longitude offsets and a triangle fan,
/// without any reuse of the library's geometry.
pub fn region_contains(region: &Region, p: GeoPoint) -> bool {
    match region {
        Region::Box(b) => {
            if p.lat < b.lat_min || p.lat > b.lat_max {
                return false;
            }
            if b.lon_max - b.lon_min >= 360.0 {
                return true;
            }
            let width = (b.lon_max - b.lon_min).rem_euclid(360.0);
            (p.lon - b.lon_min).rem_euclid(360.0) <= width
        }
        Region::Polygon(poly) => {
            let alias = match p.lon {
                x if x == 180.0 => vec![180.0, -180.0],
                x if x == -180.0 => vec![-180.0, 180.0],
                x => vec![x],
            };
            let v = &poly.vertices;
            alias
                .into_iter()
                .any(|lon| (1..v.len() - 1).any(|i| in_triangle(v[0], v[i], v[i + 1], p.lat, lon)))
        }
    }
}

fn in_triangle(a: GeoPoint, b: GeoPoint, c: GeoPoint, lat: f64, lon: f64) -> bool {
    let side = |u: GeoPoint, w: GeoPoint| {
        (w.lon - u.lon) * (lat - u.lat) - (w.lat - u.lat) * (lon - u.lon)
    };
    let (d1, d2, d3) = (side(a, b), side(b, c), side(c, a));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Positions of the queries whose area of interest contains `p`, by
/// checking every region of every query.
pub fn aoi_linear_scan(queries: &[Query], p: GeoPoint) -> Vec<usize> {
    queries
        .iter()
        .enumerate()
        .filter(|(_, q)| q.aoi.iter().any(|r| region_contains(r, p)))
        .map(|(i, _)| i)
        .collect()
}

/// Terms a capture at `p` should carry, as a map from filter set to
/// priority: latency-sensitive queries covering `p` at or above the
/// threshold (never below 2), merged by filter set.
pub fn expected_terms(
    queries: &[Query],
    p: GeoPoint,
    threshold: u8,
) -> BTreeMap<BTreeSet<FilterId>, u8> {
    let mut out: BTreeMap<BTreeSet<FilterId>, u8> = BTreeMap::new();
    for i in aoi_linear_scan(queries, p) {
        let q = &queries[i];
        if !q.latency_sensitive || q.priority < threshold.max(2) {
            continue;
        }
        let set: BTreeSet<FilterId> = q.filters.iter().copied().collect();
        let e = out.entry(set).or_insert(0);
        *e = (*e).max(q.priority);
    }
    out
}

/// Terms of a formula in the same map form.
pub fn formula_terms(formula: &DnfFormula) -> BTreeMap<BTreeSet<FilterId>, u8> {
    formula.terms().iter().map(|t| (t.filters().iter().copied().collect(), t.priority())).collect()
}

/// Per-slot expected terms for a capture plan; an empty map means the slot
/// carries no formula.
pub fn brute_force_schedule(
    plan: &[Capture],
    queries: &[Query],
    threshold: u8,
) -> Vec<BTreeMap<BTreeSet<FilterId>, u8>> {
    plan.iter().map(|c| expected_terms(queries, c.loc, threshold)).collect()
}
