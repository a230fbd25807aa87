//! Per-image and per-satellite records and the run summary.
//!
//! Latency runs from the first contact after capture (the capture time
//! itself when a station is already in view) to the end of the image's
//! downlink. Images still queued at the end of the run count as delivered
//! at the end of the run, so their latency is a lower bound. High-priority
//! images are those whose ground truth satisfies a query of priority 3 or
//! more.

use std::collections::BTreeMap;

use orbitprio_core::formula::Tier;
use orbitprio_core::runtime::ExitReason;
use serde::{Deserialize, Serialize};

use crate::power::EnergyLedger;

pub const LATENCY_DEFINITION: &str = "downlink end minus first contact after capture; \
     images queued at run end are censored at run end; high priority = ground-truth priority > 2";

/// Ground-truth priority above which an image counts as high priority.
pub const HIGH_PRIORITY_ABOVE: u8 = 2;

pub const CDF_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image: u64,
    pub satellite: u32,
    pub capture_time: f64,
    pub lat: f64,
    pub lon: f64,
    pub first_contact: Option<f64>,
    /// End of the contact window that `first_contact` falls in.
    pub first_window_end: Option<f64>,
    /// Filters in the formula the image was scheduled with (0 = none).
    pub formula_filters: u32,
    pub compute_start: Option<f64>,
    pub prioritization_time: Option<f64>,
    pub filters_run: u32,
    pub exit: Option<ExitReason>,
    /// Tier at transmission, or at run end when still queued.
    pub assigned: Tier,
    pub truth_priority: Option<u8>,
    pub downlink_time: Option<f64>,
}

impl ImageRecord {
    pub fn is_high(&self) -> bool {
        self.truth_priority.is_some_and(|p| p > HIGH_PRIORITY_ABOVE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub satellite: u32,
    pub time: f64,
    pub window_end: f64,
    /// Threshold uplinked with the schedule (2 when not forecast).
    pub p_star: u8,
    pub r_reject: f64,
    pub alpha: f64,
    pub schedule_slots: usize,
    pub schedule_bytes: usize,
    pub backlog_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteEnergy {
    pub satellite: u32,
    pub total: EnergyLedger,
    /// Energy within the configured comparison window from the start.
    pub window: EnergyLedger,
    pub initial_charge: f64,
    pub final_charge: f64,
    pub min_charge: f64,
    pub max_charge: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsLog {
    pub duration: f64,
    pub images: Vec<ImageRecord>,
    pub contacts: Vec<ContactRecord>,
    pub satellites: Vec<SatelliteEnergy>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line<'a> {
    Image(&'a ImageRecord),
    Contact(&'a ContactRecord),
    Satellite(&'a SatelliteEnergy),
}

impl MetricsLog {
    /// One JSON object per line: images, then contacts, then satellites.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let lines = self
            .images
            .iter()
            .map(Line::Image)
            .chain(self.contacts.iter().map(Line::Contact))
            .chain(self.satellites.iter().map(Line::Satellite));
        for l in lines {
            out.push_str(&serde_json::to_string(&l).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// Latency of each high-priority image that reached a contact.
    pub fn high_latencies(&self) -> Vec<(f64, bool)> {
        self.images
            .iter()
            .filter(|r| r.is_high())
            .filter_map(|r| {
                let fc = r.first_contact?;
                Some(match r.downlink_time {
                    Some(d) => (d - fc, true),
                    None => ((self.duration - fc).max(0.0), false),
                })
            })
            .collect()
    }
}

/// Nearest-rank percentile: the smallest sample with at least `q * n`
/// samples at or below it.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len() as f64;
    let rank = (q * n - 1e-9).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Empirical CDF at up to `points` evenly spaced ranks.
pub fn cdf_samples(sorted: &[f64], points: usize) -> Vec<(f64, f64)> {
    let n = sorted.len();
    if n == 0 || points == 0 {
        return Vec::new();
    }
    let step = (n as f64 / points as f64).max(1.0);
    let mut out = Vec::new();
    let mut k = step;
    while (k.round() as usize) <= n {
        let i = k.round() as usize;
        out.push((sorted[i - 1], i as f64 / n as f64));
        k += step;
    }
    if out.last().map(|&(_, f)| f) != Some(1.0) {
        out.push((sorted[n - 1], 1.0));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: usize,
    pub delivered: usize,
    pub censored: usize,
    pub p50: Option<f64>,
    pub p90: Option<f64>,
    pub p95: Option<f64>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub latency_definition: String,
    pub images: usize,
    pub delivered: usize,
    pub queued_at_end: usize,
    pub prioritized: usize,
    pub high: LatencySummary,
    pub cdf: Vec<(f64, f64)>,
    pub prioritization_mean: Option<f64>,
    pub prioritization_std: Option<f64>,
    /// Share of high-priority images downlinked within their first contact.
    pub high_sent_first_pct: Option<f64>,
    /// Compute energy as a share of generated energy over the comparison window.
    pub compute_energy_pct: Option<f64>,
    pub assigned_tiers: BTreeMap<String, usize>,
}

pub fn summarize(log: &MetricsLog) -> Summary {
    let lat = log.high_latencies();
    let mut values: Vec<f64> = lat.iter().map(|&(v, _)| v).collect();
    values.sort_by(f64::total_cmp);
    let high = LatencySummary {
        count: lat.len(),
        delivered: lat.iter().filter(|&&(_, d)| d).count(),
        censored: lat.iter().filter(|&&(_, d)| !d).count(),
        p50: percentile(&values, 0.50),
        p90: percentile(&values, 0.90),
        p95: percentile(&values, 0.95),
        mean: mean_std(&values).map(|(m, _)| m),
    };

    let times: Vec<f64> = log.images.iter().filter_map(|r| r.prioritization_time).collect();
    let pt = mean_std(&times);

    let reached: Vec<&ImageRecord> =
        log.images.iter().filter(|r| r.is_high() && r.first_contact.is_some()).collect();
    let sent_first = reached
        .iter()
        .filter(|r| matches!((r.downlink_time, r.first_window_end), (Some(d), Some(e)) if d <= e + 1e-9))
        .count();

    let generated: f64 = log.satellites.iter().map(|s| s.window.generated).sum();
    let compute: f64 = log.satellites.iter().map(|s| s.window.compute).sum();

    let mut assigned_tiers = BTreeMap::new();
    for r in &log.images {
        *assigned_tiers.entry(r.assigned.to_string()).or_insert(0) += 1;
    }
    let delivered = log.images.iter().filter(|r| r.downlink_time.is_some()).count();

    Summary {
        latency_definition: LATENCY_DEFINITION.to_string(),
        images: log.images.len(),
        delivered,
        queued_at_end: log.images.len() - delivered,
        prioritized: times.len(),
        high,
        cdf: cdf_samples(&values, CDF_POINTS),
        prioritization_mean: pt.map(|(m, _)| m),
        prioritization_std: pt.map(|(_, s)| s),
        high_sent_first_pct: (!reached.is_empty())
            .then(|| 100.0 * sent_first as f64 / reached.len() as f64),
        compute_energy_pct: (generated > 0.0).then(|| 100.0 * compute / generated),
        assigned_tiers,
    }
}
