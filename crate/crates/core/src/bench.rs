//! Synthetic formula suites and policy cost comparisons.
//!
//! A suite is drawn from scenario queries: pick a query, place a capture
//! inside its area of interest, build the formula every query covering that
//! point contributes, then truncate it to a filter budget. Each formula is
//! scored by the expected cost of the exact, greedy and static policies and
//! by the sampled cost of the omniscient oracle.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ScenarioError, SolverError};
use crate::formula::{DnfFormula, FilterCatalog, FilterId, Term};
use crate::geo::{GeoPoint, Region};
use crate::rng;
use crate::runtime::Thresholds;
use crate::sbfe::{exact_expected_cost, greedy_expected_cost, oracle_policy, static_expected_cost};
use crate::scenario::ScenarioSpec;
use crate::schedule::Schedule;

pub const DEFAULT_SUITE_SIZE: usize = 2473;
pub const DEFAULT_MAX_FILTERS: usize = 15;
/// Probability of keeping each term after the first while truncating.
pub const TERM_KEEP_PROB: f64 = 0.8;
/// Time grid of the catalogs, seconds. Medians are compared at this
/// resolution.
pub const TIME_QUANTUM: f64 = 0.05;
pub const DEFAULT_ORACLE_SAMPLES: usize = 64;

fn sample_point(region: &Region, r: &mut ChaCha8Rng) -> GeoPoint {
    match region {
        Region::Box(b) => {
            let lat = r.gen_range(b.lat_min..=b.lat_max);
            let width =
                if b.wraps() { b.lon_max + 360.0 - b.lon_min } else { b.lon_max - b.lon_min };
            GeoPoint::new(lat, b.lon_min + r.gen_range(0.0..=width)).normalized()
        }
        Region::Polygon(p) => {
            let n = p.vertices.len() as f64;
            let lat = p.vertices.iter().map(|v| v.lat).sum::<f64>() / n;
            let lon = p.vertices.iter().map(|v| v.lon).sum::<f64>() / n;
            GeoPoint::new(lat, lon)
        }
    }
}

/// Keeps the first term (cut to `max_filters` filters if needed) and each
/// later term with probability `keep_prob` as long as the distinct filter
/// count stays within budget.
pub fn truncate_formula(
    formula: &DnfFormula,
    max_filters: usize,
    keep_prob: f64,
    r: &mut impl Rng,
) -> DnfFormula {
    let max_filters = max_filters.max(1);
    let mut used: BTreeSet<FilterId> = BTreeSet::new();
    let mut kept: BTreeMap<Vec<FilterId>, u8> = BTreeMap::new();
    for (k, t) in formula.terms().iter().enumerate() {
        if k > 0 && !r.gen_bool(keep_prob) {
            continue;
        }
        let mut filters = t.filters().to_vec();
        if k == 0 {
            filters.truncate(max_filters);
        }
        let fresh = filters.iter().filter(|f| !used.contains(f)).count();
        if used.len() + fresh > max_filters {
            continue;
        }
        used.extend(filters.iter().copied());
        let e = kept.entry(filters).or_insert(t.priority());
        *e = (*e).max(t.priority());
    }
    let mut terms: Vec<(Vec<FilterId>, u8)> = kept.into_iter().collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    DnfFormula::new(
        terms.into_iter().map(|(f, p)| Term::new(f, p).expect("subset of a valid term")).collect(),
    )
    .expect("distinct filter sets")
}

/// Deterministic suite of `count` formulas with at most `max_filters`
/// distinct filters each, drawn evenly across `specs`.
pub fn generate_suite(
    specs: &[ScenarioSpec],
    max_filters: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<DnfFormula>, ScenarioError> {
    let mut pools = Vec::new();
    for spec in specs {
        let set = spec.query_set()?;
        let pool: Vec<usize> = set
            .queries()
            .iter()
            .enumerate()
            .filter(|(_, q)| q.latency_sensitive && q.priority >= 2)
            .map(|(i, _)| i)
            .collect();
        if !pool.is_empty() {
            pools.push((set, pool));
        }
    }
    if pools.is_empty() {
        return Err(ScenarioError::EmptyPool);
    }
    let mut r = rng::stream(seed, &[rng::label("suite")]);
    let mut suite = Vec::with_capacity(count);
    while suite.len() < count {
        let (set, pool) = &pools[r.gen_range(0..pools.len())];
        let q = &set.queries()[pool[r.gen_range(0..pool.len())]];
        let region = &q.aoi[r.gen_range(0..q.aoi.len())];
        let p = sample_point(region, &mut r);
        // a point on a region's boundary may miss other regions; the
        // anchoring query always covers it
        let Some(full) = set.formula_at(p, 2) else {
            continue;
        };
        suite.push(truncate_formula(&full, max_filters, TERM_KEEP_PROB, &mut r));
    }
    Ok(suite)
}

/// Per-formula evaluation times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulaCosts {
    pub filters: usize,
    pub oracle: f64,
    /// Sample variance of the oracle cost.
    pub oracle_var: f64,
    pub oracle_samples: usize,
    pub exact: f64,
    pub greedy: f64,
    pub static_baseline: f64,
}

pub fn evaluate_formula(
    formula: &DnfFormula,
    catalog: &FilterCatalog,
    th: Thresholds,
    oracle_samples: usize,
    seed: u64,
) -> Result<FormulaCosts, SolverError> {
    let exact = exact_expected_cost(formula, catalog, th)?;
    let greedy = greedy_expected_cost(formula, catalog, th)?;
    let static_baseline = static_expected_cost(formula, catalog, th)?;
    let ids: Vec<FilterId> = formula.filter_set().into_iter().collect();
    let mut bytes = Vec::new();
    formula.write_to(&mut bytes)?;
    let parts: Vec<u64> = bytes.iter().map(|&b| u64::from(b)).collect();
    let fseed = rng::mix(seed, &parts);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let n = oracle_samples.max(1);
    for s in 0..n {
        let truth: BTreeMap<FilterId, bool> = ids
            .iter()
            .map(|&id| {
                let p = catalog.get(id).map(|f| f.pass_prob).unwrap_or(0.0);
                (id, rng::unit(fseed, &[s as u64, u64::from(id.0)]) < p)
            })
            .collect();
        let (_, cost) = oracle_policy(formula, &|id| truth[&id], catalog)?;
        sum += cost;
        sum_sq += cost * cost;
    }
    let mean = sum / n as f64;
    let var =
        if n > 1 { ((sum_sq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0) } else { 0.0 };
    Ok(FormulaCosts {
        filters: ids.len(),
        oracle: mean,
        oracle_var: var,
        oracle_samples: n,
        exact,
        greedy,
        static_baseline,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyStats {
    pub mean: f64,
    pub median: f64,
}

impl PolicyStats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return PolicyStats { mean: f64::NAN, median: f64::NAN };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        PolicyStats { mean: v.iter().sum::<f64>() / n as f64, median }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub formulas: usize,
    pub beta: f64,
    pub alpha: f64,
    pub oracle: PolicyStats,
    /// Standard error of the oracle's suite mean.
    pub oracle_sem: f64,
    pub exact: PolicyStats,
    pub greedy: PolicyStats,
    pub static_baseline: PolicyStats,
}

impl BenchReport {
    pub fn from_rows(rows: &[FormulaCosts], th: Thresholds) -> Self {
        let col = |f: fn(&FormulaCosts) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let n = rows.len().max(1) as f64;
        let sem =
            rows.iter().map(|r| r.oracle_var / r.oracle_samples as f64).sum::<f64>().sqrt() / n;
        BenchReport {
            formulas: rows.len(),
            beta: th.beta,
            alpha: th.alpha,
            oracle: PolicyStats::of(&col(|r| r.oracle)),
            oracle_sem: sem,
            exact: PolicyStats::of(&col(|r| r.exact)),
            greedy: PolicyStats::of(&col(|r| r.greedy)),
            static_baseline: PolicyStats::of(&col(|r| r.static_baseline)),
        }
    }

    /// Relative excess of greedy over exact mean time.
    pub fn greedy_gap(&self) -> f64 {
        self.greedy.mean / self.exact.mean - 1.0
    }
}

pub fn bench_suite(
    suite: &[DnfFormula],
    catalog: &FilterCatalog,
    th: Thresholds,
    oracle_samples: usize,
    seed: u64,
) -> Result<(Vec<FormulaCosts>, BenchReport), SolverError> {
    let rows = suite
        .iter()
        .map(|f| evaluate_formula(f, catalog, th, oracle_samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let report = BenchReport::from_rows(&rows, th);
    Ok((rows, report))
}

pub const SYNTHETIC_SLOTS: usize = 16_200;
pub const SYNTHETIC_UNIQUE: usize = 256;
/// Mean number of consecutive captures inside one area of interest.
pub const SYNTHETIC_MEAN_RUN: f64 = 40.0;

/// A capture schedule with `slots` slots drawing on at most `unique`
/// distinct formulas from `pool`. Runs of one formula have geometric
/// lengths with mean [`SYNTHETIC_MEAN_RUN`]; about a quarter of runs are
/// captures outside every area of interest.
pub fn synthetic_schedule(pool: &[DnfFormula], slots: usize, unique: usize, seed: u64) -> Schedule {
    let mut distinct: Vec<&DnfFormula> = Vec::new();
    for f in pool {
        if distinct.len() == unique {
            break;
        }
        if !distinct.contains(&f) {
            distinct.push(f);
        }
    }
    let mut r = rng::stream(seed, &[rng::label("synthetic_schedule")]);
    let mut out: Vec<Option<DnfFormula>> = Vec::with_capacity(slots);
    let stop = 1.0 / SYNTHETIC_MEAN_RUN;
    while out.len() < slots {
        let slot = if distinct.is_empty() || r.gen_bool(0.25) {
            None
        } else {
            Some(distinct[r.gen_range(0..distinct.len())].clone())
        };
        let mut len = 1;
        while !r.gen_bool(stop) {
            len += 1;
        }
        let len = len.min(slots - out.len());
        out.extend(std::iter::repeat(slot).take(len));
    }
    Schedule::from_slots(out)
}
