//! Ground-side bookkeeping of filter pass rates reported by satellites.
//!
//! Each update treats the currently shipped pass probability as a prior
//! worth `prior_strength` observations and combines it with the reported
//! counts under add-one smoothing:
//!
//! ```text
//! p' = (prior_strength * p + passed + 1) / (prior_strength + executed + 2)
//! ```
//!
//! With the default strength a prior of 0.5 and 0 passes out of 100 gives
//! about 0.033, while 50 out of 100 leaves it at exactly 0.5.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::formula::{FilterCatalog, FilterId};

pub const DEFAULT_PRIOR_STRENGTH: f64 = 5.0;

/// Per-filter counts summarized onboard since the last contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterReport {
    pub executed: u64,
    pub passed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterStat {
    pub pass_prob: f64,
    pub tpr: f64,
    /// Simulation time of the last change, seconds.
    pub updated_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub stats: BTreeMap<FilterId, FilterStat>,
    pub prior_strength: f64,
}

impl FilterStats {
    pub fn from_catalog(catalog: &FilterCatalog) -> Self {
        FilterStats {
            stats: catalog
                .filters()
                .map(|f| (f.id, FilterStat { pass_prob: f.pass_prob, tpr: f.tpr, updated_at: 0.0 }))
                .collect(),
            prior_strength: DEFAULT_PRIOR_STRENGTH,
        }
    }

    pub fn pass_prob(&self, id: FilterId) -> Option<f64> {
        self.stats.get(&id).map(|s| s.pass_prob)
    }

    /// Folds reports into the stats. Filters with zero executions and
    /// unknown filters are left untouched.
    pub fn update(&mut self, reports: &BTreeMap<FilterId, FilterReport>, now: f64) {
        for (id, r) in reports {
            let Some(stat) = self.stats.get_mut(id) else {
                continue;
            };
            if r.executed == 0 {
                continue;
            }
            let passed = r.passed.min(r.executed) as f64;
            stat.pass_prob = (self.prior_strength * stat.pass_prob + passed + 1.0)
                / (self.prior_strength + r.executed as f64 + 2.0);
            stat.updated_at = now;
        }
    }

    /// Copies the pass probabilities into a catalog shipped to satellites.
    pub fn apply(&self, catalog: &mut FilterCatalog) {
        catalog.set_pass_probs(self.stats.iter().map(|(&id, s)| (id, s.pass_prob)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Filter;

    fn stats(prior: f64) -> FilterStats {
        let cat = FilterCatalog::new(
            [Filter {
                id: FilterId(1),
                backbone: None,
                head_time: 1.0,
                pass_prob: prior,
                tpr: 0.95,
                fpr: 0.05,
            }],
            [],
        )
        .unwrap();
        FilterStats::from_catalog(&cat)
    }

    fn report(executed: u64, passed: u64) -> BTreeMap<FilterId, FilterReport> {
        [(FilterId(1), FilterReport { executed, passed })].into_iter().collect()
    }

    #[test]
    fn strong_evidence_of_rarity() {
        let mut s = stats(0.5);
        s.update(&report(100, 0), 10.0);
        let p = s.pass_prob(FilterId(1)).unwrap();
        // (5 * 0.5 + 0 + 1) / (5 + 100 + 2)
        assert!((p - 3.5 / 107.0).abs() < 1e-15);
        assert!(p < 0.05);
        assert_eq!(s.stats[&FilterId(1)].updated_at, 10.0);
    }

    #[test]
    fn agreement_is_a_fixed_point() {
        let mut s = stats(0.5);
        s.update(&report(100, 50), 1.0);
        assert_eq!(s.pass_prob(FilterId(1)), Some(0.5));
    }

    #[test]
    fn empty_reports_change_nothing() {
        let mut s = stats(0.3);
        let before = s.clone();
        s.update(&BTreeMap::new(), 5.0);
        s.update(&report(0, 0), 5.0);
        assert_eq!(s, before);
    }

    #[test]
    fn monotone_in_pass_fraction() {
        let mut last = -1.0;
        for passed in 0..=40 {
            let mut s = stats(0.2);
            s.update(&report(40, passed), 0.0);
            let p = s.pass_prob(FilterId(1)).unwrap();
            assert!(p > last);
            last = p;
        }
    }
}
