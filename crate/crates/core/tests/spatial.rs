//! Area-of-interest lookup and schedule generation against linear scans.

mod common;

use orbitprio_core::geo::{GeoPoint, Region, RegionIndex};
use orbitprio_core::schedule::{generate_schedule, Capture, QuerySet};
use orbitprio_oracles::{aoi_linear_scan, brute_force_schedule, formula_terms};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn index_equals_linear_scan(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let nq = r.gen_range(1..=25);
        let queries = common::queries(&mut r, nq, 6);
        let index = RegionIndex::new(queries.iter().map(|q| q.aoi.clone()).collect()).unwrap();
        let mut probes: Vec<GeoPoint> = (0..50).map(|_| common::point(&mut r)).collect();
        for q in &queries {
            for reg in &q.aoi {
                match reg {
                    Region::Box(b) => {
                        probes.push(GeoPoint::new(b.lat_min, b.lon_min));
                        probes.push(GeoPoint::new(b.lat_max, b.lon_max));
                    }
                    Region::Polygon(p) => probes.extend(p.vertices.iter().copied()),
                }
            }
        }
        for p in probes {
            prop_assert_eq!(index.lookup(p), aoi_linear_scan(&queries, p), "at {:?}", p);
        }
    }

    #[test]
    fn schedule_equals_brute_force(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let nq = r.gen_range(1..=15);
        let queries = common::queries(&mut r, nq, 8);
        let set = QuerySet::new(queries.clone(), None).unwrap();
        // a ground track: steady drift with occasional jumps
        let mut lat = r.gen_range(-60.0..60.0);
        let mut lon: f64 = r.gen_range(-180.0..180.0);
        let plan: Vec<Capture> = (0..r.gen_range(0..300))
            .map(|i| {
                lat = (lat + r.gen_range(-0.5..0.5f64)).clamp(-89.0, 89.0);
                lon = ((lon + r.gen_range(0.0..1.0) + 180.0).rem_euclid(360.0)) - 180.0;
                Capture { image: i, satellite: 0, time: i as f64, loc: GeoPoint::new(lat, lon), size: 1 }
            })
            .collect();
        let threshold = r.gen_range(1..=5);
        let s = generate_schedule(&plan, &set, threshold);
        let want = brute_force_schedule(&plan, &queries, threshold);
        prop_assert_eq!(s.slot_count(), plan.len());
        for (slot, w) in s.expand().iter().zip(&want) {
            match slot {
                None => prop_assert!(w.is_empty()),
                Some(f) => {
                    prop_assert_eq!(&formula_terms(f), w);
                    let pr: Vec<u8> = f.terms().iter().map(|t| t.priority()).collect();
                    prop_assert!(pr.windows(2).all(|x| x[0] >= x[1]));
                    prop_assert!(pr.iter().all(|&p| p >= threshold.max(2)));
                }
            }
        }
        for e in s.entries().windows(2) {
            prop_assert!(e[0].start + e[0].len < e[1].start || e[0].formula != e[1].formula);
        }
    }
}
