//! Random catalogs, formulas and queries for property checks.

use std::collections::BTreeSet;

use orbitprio_core::formula::{
    Backbone, BackboneId, DnfFormula, Filter, FilterCatalog, FilterId, Term,
};
use orbitprio_core::geo::{ConvexPolygon, GeoBox, GeoPoint, Region};
use orbitprio_core::schedule::Query;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` filters with ids `0..n`, a few of them sharing backbones.
pub fn catalog(r: &mut impl Rng, n: usize) -> FilterCatalog {
    let backbones = r.gen_range(0..=3usize);
    let bbs: Vec<Backbone> = (0..backbones)
        .map(|i| Backbone {
            id: BackboneId(i as u16),
            load_time: r.gen_range(1..=30) as f64 * 0.05,
        })
        .collect();
    let filters: Vec<Filter> = (0..n)
        .map(|i| {
            let backbone = if backbones > 0 && r.gen_bool(0.6) {
                Some(BackboneId(r.gen_range(0..backbones) as u16))
            } else {
                None
            };
            let tpr = r.gen_range(0.6..=1.0);
            Filter {
                id: FilterId(i as u16),
                backbone,
                head_time: r.gen_range(1..=20) as f64 * 0.05,
                pass_prob: r.gen_range(0.02..0.98),
                tpr,
                fpr: r.gen_range(0.0..(1.0 - tpr).max(1e-3)),
            }
        })
        .collect();
    FilterCatalog::new(filters, bbs).expect("valid random catalog")
}

/// A formula over filters `0..n` using every filter at least once when
/// `cover` is set. Terms may overlap.
pub fn formula(r: &mut impl Rng, n: usize, max_terms: usize, cover: bool) -> DnfFormula {
    let mut sets: BTreeSet<Vec<u16>> = BTreeSet::new();
    let terms = r.gen_range(1..=max_terms);
    for _ in 0..terms {
        let k = r.gen_range(1..=n.min(4));
        let mut ids: Vec<u16> = (0..n as u16).collect();
        ids.shuffle(r);
        let mut t: Vec<u16> = ids[..k].to_vec();
        t.sort_unstable();
        sets.insert(t);
    }
    if cover {
        let used: BTreeSet<u16> = sets.iter().flatten().copied().collect();
        for i in 0..n as u16 {
            if !used.contains(&i) {
                sets.insert(vec![i]);
            }
        }
    }
    DnfFormula::new(
        sets.into_iter()
            .map(|s| Term::new(s.into_iter().map(FilterId), r.gen_range(2..=5)).unwrap())
            .collect(),
    )
    .unwrap()
}

/// A formula whose terms partition filters `0..n`.
pub fn disjoint_formula(r: &mut impl Rng, n: usize) -> DnfFormula {
    let mut ids: Vec<u16> = (0..n as u16).collect();
    ids.shuffle(r);
    let mut terms = Vec::new();
    let mut rest = &ids[..];
    while !rest.is_empty() {
        let k = r.gen_range(1..=rest.len().min(4));
        terms.push(Term::new(rest[..k].iter().map(|&i| FilterId(i)), r.gen_range(2..=5)).unwrap());
        rest = &rest[k..];
    }
    DnfFormula::new(terms).unwrap()
}

pub fn point(r: &mut impl Rng) -> GeoPoint {
    match r.gen_range(0..10) {
        0 => GeoPoint::new(r.gen_range(-90.0..=90.0), 180.0),
        1 => GeoPoint::new(r.gen_range(-90.0..=90.0), -180.0),
        2 => GeoPoint::new(r.gen_range(-5..=5) as f64 * 10.0, r.gen_range(-18..=18) as f64 * 10.0),
        _ => GeoPoint::new(r.gen_range(-90.0..=90.0), r.gen_range(-180.0..180.0)),
    }
}

pub fn region(r: &mut impl Rng) -> Region {
    if r.gen_bool(0.7) {
        // boxes on a 10-degree grid now and then so grid points hit edges
        let snap = r.gen_bool(0.3);
        let coord = |r: &mut ChaCha8Rng, lo: f64, hi: f64| {
            if snap {
                (r.gen_range(lo..=hi) / 10.0).round() * 10.0
            } else {
                r.gen_range(lo..=hi)
            }
        };
        let mut rr = ChaCha8Rng::seed_from_u64(r.gen());
        let a = coord(&mut rr, -80.0, 80.0);
        let b = coord(&mut rr, -80.0, 80.0);
        let lon_min = coord(&mut rr, -180.0, 180.0);
        let lon_max = coord(&mut rr, -180.0, 180.0);
        Region::Box(GeoBox::new(a.min(b), a.max(b), lon_min, lon_max).unwrap())
    } else {
        let c = GeoPoint::new(r.gen_range(-70.0..70.0), r.gen_range(-170.0..170.0));
        let n = r.gen_range(3..=7);
        let rad = r.gen_range(1.0..10.0);
        let mut angles: Vec<f64> =
            (0..n).map(|_| r.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        let v: Vec<GeoPoint> = angles
            .iter()
            .map(|a| GeoPoint::new(c.lat + rad * a.sin(), c.lon + rad * a.cos()))
            .collect();
        match ConvexPolygon::new(v) {
            Ok(p) => Region::Polygon(p),
            Err(_) => Region::Box(GeoBox::around(c, rad, rad)),
        }
    }
}

pub fn queries(r: &mut impl Rng, n: usize, filters: usize) -> Vec<Query> {
    (0..n)
        .map(|i| {
            let k = r.gen_range(1..=filters.min(3));
            let mut ids: Vec<u16> = (0..filters as u16).collect();
            ids.shuffle(r);
            Query {
                id: i as u32,
                filters: ids[..k].iter().map(|&x| FilterId(x)).collect(),
                aoi: (0..r.gen_range(1..=2)).map(|_| region(r)).collect(),
                priority: r.gen_range(1..=5),
                latency_sensitive: r.gen_bool(0.85),
            }
        })
        .collect()
}
