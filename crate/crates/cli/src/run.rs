//! The `run` subcommand.

use std::path::{Path, PathBuf};

use clap::Args;
use orbitprio_core::scenario::{AcceleratorKind, ScenarioName, ScenarioSpec};
use orbitprio_sim::{summarize, Preset, SimConfig, Variant, World};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::report::{self, Report};

#[derive(Args, Debug)]
pub struct RunArgs {
    /// urban, disaster or intelligence.
    #[arg(long, default_value = "urban")]
    scenario: String,
    /// Workload JSON (as printed by `scenario`) used in place of the generated one.
    #[arg(long)]
    scenario_file: Option<PathBuf>,
    /// baseline, earthsight-st or earthsight-mt.
    #[arg(long, default_value = "earthsight-mt")]
    variant: String,
    /// tpu or gpu.
    #[arg(long, default_value = "tpu")]
    accel: String,
    /// desk (12 satellites, 3 stations) or full (153 satellites, 14 stations).
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Shorthand for `--preset full`.
    #[arg(long)]
    high_load: bool,
    #[arg(long, default_value_t = 6.0)]
    hours: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run this many consecutive seeds starting at `--seed`, in parallel.
    #[arg(long, default_value_t = 1)]
    replicates: u64,
    /// Station link goodput, bytes per second.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Mean captures per second per satellite while imaging.
    #[arg(long)]
    capture_rate: Option<f64>,
    /// Override every filter's accuracy (tpr = a, fpr = 1 - a).
    #[arg(long)]
    accuracy: Option<f64>,
    /// Use ascending filter time instead of the greedy utility order.
    #[arg(long)]
    no_filter_ordering: bool,
    /// Skip ground statistics, look-ahead and thresholded schedules.
    #[arg(long)]
    no_ground_scheduler: bool,
    /// Hold the upper confidence threshold at `--alpha`.
    #[arg(long)]
    no_dynamic_threshold: bool,
    /// Static upper threshold used with `--no-dynamic-threshold`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Write a per-image filter trace.
    #[arg(long)]
    trace: bool,
    /// TOML file whose keys override the flags (same layout as the written config.toml).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "ORBITPRIO_OUT", default_value = "orbitprio-out")]
    out: PathBuf,
}

fn parse_accel(s: &str) -> Result<AcceleratorKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "tpu" => Ok(AcceleratorKind::Tpu),
        "gpu" => Ok(AcceleratorKind::Gpu),
        _ => Err(format!("accel: unknown accelerator `{s}` (tpu, gpu)")),
    }
}

fn accel_name(a: AcceleratorKind) -> &'static str {
    match a {
        AcceleratorKind::Tpu => "tpu",
        AcceleratorKind::Gpu => "gpu",
    }
}

/// Config built from flags alone.
fn from_flags(a: &RunArgs) -> Result<SimConfig, String> {
    let mut c = SimConfig {
        scenario: a.scenario.parse::<ScenarioName>().map_err(|e| format!("scenario: {e}"))?,
        variant: a.variant.parse::<Variant>().map_err(|e| e.to_string())?,
        accelerator: parse_accel(&a.accel)?,
        preset: a.preset.parse::<Preset>().map_err(|e| e.to_string())?,
        seed: a.seed,
        trace: a.trace,
        ..SimConfig::default()
    };
    if a.high_load {
        c.preset = Preset::Full;
    }
    c.duration_s = a.hours * 3600.0;
    if let Some(b) = a.bandwidth {
        c.downlink_bandwidth = b;
    }
    if let Some(r) = a.capture_rate {
        c.capture.rate_per_s = r;
    }
    c.model_accuracy = a.accuracy;
    let toggled = a.no_filter_ordering || a.no_ground_scheduler || a.no_dynamic_threshold;
    if toggled && !c.variant.is_adaptive() {
        return Err("ablation: component toggles apply only to the earthsight variants".into());
    }
    c.ablation.filter_ordering = !a.no_filter_ordering;
    c.ablation.ground_scheduler = !a.no_ground_scheduler;
    c.ablation.dynamic_threshold = !a.no_dynamic_threshold;
    if let Some(alpha) = a.alpha {
        if !a.no_dynamic_threshold {
            return Err("alpha: a static threshold needs --no-dynamic-threshold".into());
        }
        c.ablation.static_alpha = alpha;
    }
    Ok(c)
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies a TOML override file on top of `config`.
pub fn apply_overrides(config: &SimConfig, text: &str) -> Result<SimConfig, String> {
    let over: toml::Value = toml::from_str(text).map_err(|e| format!("config file: {e}"))?;
    let mut base = toml::Value::try_from(config).map_err(|e| format!("config: {e}"))?;
    merge(&mut base, over);
    base.try_into().map_err(|e: toml::de::Error| format!("config file: {e}"))
}

pub fn config_hash(config: &SimConfig, spec_text: Option<&str>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    if let Some(s) = spec_text {
        h.update(b"\0scenario-file\0");
        h.update(s.as_bytes());
    }
    hex::encode(h.finalize())
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn run_one(
    config: SimConfig,
    spec: Option<&(ScenarioSpec, String)>,
    out: &Path,
) -> Result<String, String> {
    let hash = config_hash(&config, spec.map(|(_, t)| t.as_str()));
    let world = match spec {
        Some((s, _)) => World::with_spec(config.clone(), s.clone(), None),
        None => World::new(config.clone()),
    }
    .map_err(|e| e.to_string())?;
    let output = world.run().map_err(|e| e.to_string())?;
    let summary = summarize(&output.log);
    let scenario = spec.map_or(config.scenario, |(s, _)| s.name);
    let report = Report {
        config_hash: &hash,
        seed: config.seed,
        scenario: scenario.to_string(),
        variant: config.variant.to_string(),
        accelerator: accel_name(config.accelerator).to_string(),
        summary: &summary,
    };
    let dir = out.join(format!(
        "{}-{}-{}-seed{}-{}",
        report.scenario,
        report.variant,
        report.accelerator,
        config.seed,
        &hash[..12]
    ));
    std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let table = report::table(&report);
    write(&dir.join("config.toml"), &toml::to_string(&config).map_err(|e| e.to_string())?)?;
    write(&dir.join("summary.txt"), &table)?;
    write(
        &dir.join("summary.json"),
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    write(&dir.join("metrics.jsonl"), &output.log.to_jsonl())?;
    write(&dir.join("latency_cdf.tsv"), &report::cdf(&summary))?;
    if config.trace {
        let mut lines = String::new();
        for t in &output.trace {
            lines.push_str(&serde_json::to_string(t).expect("trace serializes"));
            lines.push('\n');
        }
        write(&dir.join("trace.jsonl"), &lines)?;
    }
    Ok(format!("{table}output                       {}\n", dir.display()))
}

pub fn execute(args: RunArgs) -> Result<(), String> {
    let mut base = from_flags(&args)?;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("config: {}: {e}", path.display()))?;
        base = apply_overrides(&base, &text)?;
        if !base.variant.is_adaptive() && base.ablation != orbitprio_sim::Ablations::default() {
            return Err("ablation: component toggles apply only to the earthsight variants".into());
        }
    }
    base.validate().map_err(|e| e.to_string())?;
    let spec = match &args.scenario_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("scenario_file: {}: {e}", path.display()))?;
            let spec: ScenarioSpec = serde_json::from_str(&text)
                .map_err(|e| format!("scenario_file: {}: {e}", path.display()))?;
            Some((spec, text))
        }
        None => None,
    };
    if args.replicates == 0 {
        return Err("replicates: must be at least 1".into());
    }
    let configs: Vec<SimConfig> =
        (0..args.replicates).map(|k| SimConfig { seed: base.seed + k, ..base.clone() }).collect();
    let results: Vec<Result<String, String>> =
        configs.into_par_iter().map(|c| run_one(c, spec.as_ref(), &args.out)).collect();
    for r in results {
        println!("{}", r?);
    }
    Ok(())
}
