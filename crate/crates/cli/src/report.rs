//! Text and file renderings of a run summary.

use std::fmt::Write as _;

use orbitprio_sim::Summary;
use serde::Serialize;

/// Machine-readable report; `config_hash` covers every input including the seed.
#[derive(Serialize)]
pub struct Report<'a> {
    pub config_hash: &'a str,
    pub seed: u64,
    pub scenario: String,
    pub variant: String,
    pub accelerator: String,
    pub summary: &'a Summary,
}

fn opt(v: Option<f64>, unit: &str) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}{unit}"))
}

pub fn table(r: &Report<'_>) -> String {
    let s = r.summary;
    let mut out = String::new();
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "{k:<28} {v}");
    };
    row("config hash", r.config_hash.to_string());
    row("seed", r.seed.to_string());
    row("scenario", r.scenario.clone());
    row("variant", r.variant.clone());
    row("accelerator", r.accelerator.clone());
    row("images captured", s.images.to_string());
    row("images delivered", s.delivered.to_string());
    row("images queued at end", s.queued_at_end.to_string());
    row("images prioritized", s.prioritized.to_string());
    row("prioritization mean", opt(s.prioritization_mean, " s"));
    row("prioritization std", opt(s.prioritization_std, " s"));
    row("high-priority images", format!("{} ({} censored)", s.high.count, s.high.censored));
    row("high latency P50", opt(s.high.p50.map(|x| x / 60.0), " min"));
    row("high latency P90", opt(s.high.p90.map(|x| x / 60.0), " min"));
    row("high latency P95", opt(s.high.p95.map(|x| x / 60.0), " min"));
    row("high latency mean", opt(s.high.mean.map(|x| x / 60.0), " min"));
    row("high sent in first contact", opt(s.high_sent_first_pct, " %"));
    row("compute / generated energy", opt(s.compute_energy_pct, " %"));
    let tiers: Vec<String> = s.assigned_tiers.iter().map(|(k, v)| format!("{k}:{v}")).collect();
    row("final tiers", tiers.join(" "));
    row("latency", s.latency_definition.clone());
    out
}

/// Two numeric columns: latency in seconds and cumulative fraction.
pub fn cdf(s: &Summary) -> String {
    let mut out = String::from("# latency_s\tfraction\n");
    for (x, f) in &s.cdf {
        let _ = writeln!(out, "{x:.3}\t{f:.6}");
    }
    out
}
