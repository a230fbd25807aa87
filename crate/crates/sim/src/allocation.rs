//! Station-to-satellite matching for one tick.
//!
//! Pairs are taken greedily by the satellite's demand: the tier of its
//! best pending data, then the bytes waiting in that tier. Equal demand
//! goes to the satellite served least recently, then to the lower id. A
//! satellite takes the free station in view that the fewest still-waiting
//! satellites could use. Each station serves at most one satellite and
//! each satellite uses at most one station.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use orbitprio_core::formula::Tier;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub satellite: u32,
    pub tier: Tier,
    pub bytes: u64,
    /// Time this satellite last transmitted; `-inf` when never.
    pub last_served: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub station: u32,
    pub satellite: u32,
}

fn precedence(a: &Demand, b: &Demand) -> Ordering {
    b.tier
        .cmp(&a.tier)
        .then(b.bytes.cmp(&a.bytes))
        .then(a.last_served.total_cmp(&b.last_served))
        .then(a.satellite.cmp(&b.satellite))
}

/// `visible` lists (satellite, station) pairs in view; `demands` holds one
/// entry per satellite with data to send.
pub fn allocate_bandwidth(visible: &[(u32, u32)], demands: &[Demand]) -> Vec<Assignment> {
    let mut order: Vec<&Demand> = demands.iter().collect();
    order.sort_by(|a, b| precedence(a, b));
    let mut used: BTreeSet<u32> = BTreeSet::new();
    let mut waiting: BTreeSet<u32> = demands.iter().map(|d| d.satellite).collect();
    let mut out = Vec::new();
    for d in order {
        waiting.remove(&d.satellite);
        // among free stations, take the one fewest waiting satellites can use
        let contention =
            |st: u32| visible.iter().filter(|&&(sat, s)| s == st && waiting.contains(&sat)).count();
        let station = visible
            .iter()
            .filter(|&&(sat, st)| sat == d.satellite && !used.contains(&st))
            .map(|&(_, st)| (contention(st), st))
            .min()
            .map(|(_, st)| st);
        if let Some(st) = station {
            used.insert(st);
            out.push(Assignment { station: st, satellite: d.satellite });
        }
    }
    out.sort_by_key(|a| (a.station, a.satellite));
    out
}
