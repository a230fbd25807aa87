//! Scenario catalogs: single-task versus multi-task costs and base rates.

use std::collections::BTreeMap;

use orbitprio_core::formula::{
    Backbone, BackboneId, DnfFormula, Filter, FilterCatalog, FilterId, Term,
};
use orbitprio_core::geo::GeoPoint;
use orbitprio_core::runtime::{prioritize_image, FilterOrdering, FixedOutcomes, Thresholds};
use orbitprio_core::scenario::{build_scenario, single_task, single_vs_multitask, ScenarioName};
use orbitprio_core::timing::TimingModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn group(heads: usize, backbone: f64, head: f64) -> FilterCatalog {
    FilterCatalog::new(
        (0..heads as u16).map(|i| Filter {
            id: FilterId(i),
            backbone: Some(BackboneId(0)),
            head_time: head,
            pass_prob: 0.5,
            tpr: 0.95,
            fpr: 0.05,
        }),
        [Backbone { id: BackboneId(0), load_time: backbone }],
    )
    .unwrap()
}

fn run_times(
    f: &DnfFormula,
    c: &FilterCatalog,
    truth: &BTreeMap<FilterId, bool>,
    order: FilterOrdering,
) -> Vec<f64> {
    let mut src = FixedOutcomes(truth.clone());
    let mut r = ChaCha8Rng::seed_from_u64(0);
    prioritize_image(
        f,
        c,
        Thresholds::EXHAUSTIVE,
        order,
        &mut src,
        &TimingModel::default(),
        &mut r,
        1.0,
    )
    .unwrap()
    .filter_times
}

#[test]
fn three_heads_on_one_backbone() {
    let mt = group(3, 0.8, 0.05);
    let st = single_task(&mt);
    let f = DnfFormula::new(vec![Term::new((0..3).map(FilterId), 3).unwrap()]).unwrap();
    let all_true: BTreeMap<FilterId, bool> = (0..3).map(|i| (FilterId(i), true)).collect();
    let st_times = run_times(&f, &st, &all_true, FilterOrdering::StaticByTime);
    let mt_times = run_times(&f, &mt, &all_true, FilterOrdering::StaticByTime);
    for t in &st_times {
        assert!((t - 0.85).abs() < 1e-12);
    }
    assert!((mt_times[0] - 0.85).abs() < 1e-12);
    assert!(mt_times[1..].iter().all(|t| (t - 0.05).abs() < 1e-12));
}

#[test]
fn single_head_group_costs_the_same() {
    let mt = group(1, 0.8, 0.05);
    let st = single_task(&mt);
    assert_eq!(
        st.standalone_time(st.get(FilterId(0)).unwrap()),
        mt.standalone_time(mt.get(FilterId(0)).unwrap())
    );
}

/// On every outcome path of a 4-filter formula, executing the same filter
/// sequence costs no more with shared backbones.
#[test]
fn multitask_never_costs_more_on_any_path() {
    let mt = FilterCatalog::new(
        [(0, Some(0), 0.10), (1, Some(0), 0.15), (2, Some(1), 0.05), (3, None, 0.30)].map(
            |(i, b, h)| Filter {
                id: FilterId(i),
                backbone: b.map(BackboneId),
                head_time: h,
                pass_prob: 0.5,
                tpr: 0.95,
                fpr: 0.05,
            },
        ),
        [
            Backbone { id: BackboneId(0), load_time: 1.2 },
            Backbone { id: BackboneId(1), load_time: 0.7 },
        ],
    )
    .unwrap();
    let st = single_task(&mt);
    let f = DnfFormula::new(vec![
        Term::new([FilterId(0), FilterId(1)], 5).unwrap(),
        Term::new([FilterId(1), FilterId(2)], 4).unwrap(),
        Term::new([FilterId(3), FilterId(0)], 3).unwrap(),
    ])
    .unwrap();
    for bits in 0..16u32 {
        let truth: BTreeMap<FilterId, bool> =
            (0..4).map(|i| (FilterId(i), bits >> i & 1 == 1)).collect();
        for order in [FilterOrdering::StaticByTime, FilterOrdering::Greedy] {
            // replay the multitask sequence on both catalogs
            let mut src = FixedOutcomes(truth.clone());
            let mut r = ChaCha8Rng::seed_from_u64(0);
            let res = prioritize_image(
                &f,
                &mt,
                Thresholds::EXHAUSTIVE,
                order,
                &mut src,
                &TimingModel::default(),
                &mut r,
                1.0,
            )
            .unwrap();
            let mt_total: f64 = res.filter_times.iter().sum();
            let st_total: f64 =
                res.filters_run.iter().map(|&id| st.get(id).unwrap().head_time).sum();
            assert!(mt_total <= st_total + 1e-12, "path {bits:04b}");
            let same_group = res.filters_run.iter().filter(|id| id.0 <= 1).count() >= 2;
            if same_group {
                assert!(mt_total < st_total);
            }
        }
    }
}

#[test]
fn scenario_variants_share_statistics() {
    for name in ScenarioName::ALL {
        let spec = build_scenario(name, 4).unwrap();
        let (st, mt) = single_vs_multitask(&spec);
        assert_eq!(st.len(), mt.len());
        for f in mt.filters() {
            let s = st.get(f.id).unwrap();
            assert_eq!((s.pass_prob, s.tpr, s.fpr), (f.pass_prob, f.tpr, f.fpr));
        }
    }
}

#[test]
fn base_rates_reproduce_marginals() {
    let spec = build_scenario(ScenarioName::Urban, 8).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let n = 200_000;
    let p = GeoPoint::new(-60.0, -150.0);
    for (&id, &rate) in &spec.base_rates {
        let q = spec.truth_rate(id, p);
        assert_eq!(q, rate);
        let hits = (0..n).filter(|_| r.gen::<f64>() < q).count() as f64;
        let sigma = (n as f64 * q * (1.0 - q)).sqrt();
        assert!((hits - n as f64 * q).abs() <= 3.0 * sigma.max(1.0), "{id:?}");
    }
}
