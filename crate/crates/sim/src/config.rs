//! Run configuration and constellation presets.

use std::fmt;
use std::str::FromStr;

use orbitprio_core::runtime::ControllerConfig;
use orbitprio_core::scenario::{AcceleratorKind, AcceleratorProfile, ScenarioName};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::ground::GroundStation;
use crate::orbit::{OrbitModel, SUBSOLAR_LON_AT_EPOCH_DEG};
use crate::power::PowerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Uplinked queries, fixed filter order, exhaustive evaluation and no
    /// ground-side scheduling.
    Baseline,
    /// Adaptive runtime and ground scheduler over single-task models.
    EarthsightSt,
    /// Adaptive runtime and ground scheduler over shared-backbone models.
    EarthsightMt,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Baseline, Variant::EarthsightSt, Variant::EarthsightMt];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::EarthsightSt => "earthsight-st",
            Variant::EarthsightMt => "earthsight-mt",
        }
    }

    pub fn is_adaptive(self) -> bool {
        self != Variant::Baseline
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL.into_iter().find(|v| v.as_str() == s.to_ascii_lowercase()).ok_or_else(|| {
            SimError::config(
                "variant",
                format!("unknown variant `{s}` (baseline, earthsight-st, earthsight-mt)"),
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 12 satellites, 3 stations.
    Desk,
    /// 153 satellites, 14 stations.
    Full,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Full => "full",
        }
    }
}

impl FromStr for Preset {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            _ => Err(SimError::config("preset", format!("unknown preset `{s}` (desk, full)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub satellites: Vec<OrbitModel>,
    pub stations: Vec<GroundStation>,
}

pub const SSO_INCLINATION_DEG: f64 = 97.4;
pub const DEFAULT_ALTITUDE_KM: f64 = 500.0;

/// Sun-synchronous planes spread over `raan_span` degrees around the noon
/// meridian.
fn walker(planes: usize, per_plane: usize, raan_span: f64) -> Vec<OrbitModel> {
    let mut out = Vec::with_capacity(planes * per_plane);
    for p in 0..planes {
        let offset = if planes == 1 {
            0.0
        } else {
            -raan_span / 2.0 + raan_span * p as f64 / (planes - 1) as f64
        };
        let raan = SUBSOLAR_LON_AT_EPOCH_DEG + offset;
        for k in 0..per_plane {
            let phase = 360.0 * k as f64 / per_plane as f64
                + 360.0 * p as f64 / (planes * per_plane) as f64;
            out.push(
                OrbitModel::new(DEFAULT_ALTITUDE_KM, SSO_INCLINATION_DEG, raan, phase, 0.0)
                    .expect("preset orbit is valid"),
            );
        }
    }
    out
}

impl Constellation {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Desk => Constellation {
                satellites: walker(3, 4, 40.0),
                stations: vec![
                    GroundStation::new("athens", 37.98, 23.73),
                    GroundStation::new("delhi", 28.61, 77.21),
                    GroundStation::new("tokyo", 35.68, 139.69),
                ],
            },
            Preset::Full => Constellation {
                satellites: walker(9, 17, 40.0),
                stations: vec![
                    GroundStation::new("svalbard", 78.23, 15.41),
                    GroundStation::new("fairbanks", 64.84, -147.72),
                    GroundStation::new("wallops", 37.94, -75.47),
                    GroundStation::new("vancouver", 49.28, -123.12),
                    GroundStation::new("santiago", -33.45, -70.67),
                    GroundStation::new("sao_paulo", -23.55, -46.63),
                    GroundStation::new("hartebeesthoek", -25.89, 27.69),
                    GroundStation::new("athens", 37.98, 23.73),
                    GroundStation::new("dubai", 25.20, 55.27),
                    GroundStation::new("delhi", 28.61, 77.21),
                    GroundStation::new("singapore", 1.35, 103.82),
                    GroundStation::new("tokyo", 35.68, 139.69),
                    GroundStation::new("perth", -31.95, 115.86),
                    GroundStation::new("awarua", -46.53, 168.38),
                ],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureConfig {
    /// Mean captures per second per satellite while imaging.
    pub rate_per_s: f64,
    pub image_bytes: u64,
    /// Image only when the sun is at least this high at the ground point.
    pub min_sun_elevation_deg: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        CaptureConfig { rate_per_s: 0.75, image_bytes: 50_000, min_sun_elevation_deg: 10.0 }
    }
}

/// Components that can be switched off in the adaptive variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ablations {
    /// Greedy utility ordering; off falls back to ascending filter time.
    pub filter_ordering: bool,
    /// Ground statistics, look-ahead and thresholded schedules; off uplinks
    /// every query at priority 2 and above with uninformed pass rates.
    pub ground_scheduler: bool,
    /// Adaptive upper threshold; off holds it at `static_alpha`.
    pub dynamic_threshold: bool,
    pub static_alpha: f64,
}

impl Default for Ablations {
    fn default() -> Self {
        Ablations {
            filter_ordering: true,
            ground_scheduler: true,
            dynamic_threshold: true,
            static_alpha: 0.5,
        }
    }
}

/// Pass rate assumed for every filter when ground statistics are off.
pub const UNINFORMED_PASS_PROB: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: ScenarioName,
    pub variant: Variant,
    pub accelerator: AcceleratorKind,
    pub preset: Preset,
    pub duration_s: f64,
    pub dt: f64,
    pub seed: u64,
    pub capture: CaptureConfig,
    /// Goodput of one station link, bytes per second.
    pub downlink_bandwidth: f64,
    pub min_elevation_deg: f64,
    pub power: PowerConfig,
    pub controller: ControllerConfig,
    pub ablation: Ablations,
    pub lookahead_horizon_s: f64,
    /// Overrides every filter's accuracy (tpr = a, fpr = 1 - a).
    pub model_accuracy: Option<f64>,
    /// Prefetch hit rate of the adaptive runtime's pipelined selection.
    pub prefetch_hit_prob: f64,
    /// Span over which compute energy is compared with generation.
    pub energy_window_s: f64,
    /// Keep a per-image trace of filter decisions.
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scenario: ScenarioName::Urban,
            variant: Variant::EarthsightMt,
            accelerator: AcceleratorKind::Tpu,
            preset: Preset::Desk,
            duration_s: 6.0 * 3600.0,
            dt: 1.0,
            seed: 1,
            capture: CaptureConfig::default(),
            downlink_bandwidth: 25_000.0,
            min_elevation_deg: 10.0,
            power: PowerConfig::default(),
            controller: ControllerConfig::default(),
            ablation: Ablations::default(),
            lookahead_horizon_s: 6.0 * 3600.0,
            model_accuracy: None,
            prefetch_hit_prob: 0.8,
            energy_window_s: 6.0 * 3600.0,
            trace: false,
        }
    }
}

impl SimConfig {
    pub fn profile(&self) -> AcceleratorProfile {
        match self.accelerator {
            AcceleratorKind::Tpu => AcceleratorProfile::tpu(),
            AcceleratorKind::Gpu => AcceleratorProfile::gpu(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SimError::config(field, format!("must be positive, got {v}")))
            }
        };
        positive("duration_s", self.duration_s)?;
        positive("dt", self.dt)?;
        positive("downlink_bandwidth", self.downlink_bandwidth)?;
        positive("lookahead_horizon_s", self.lookahead_horizon_s)?;
        positive("energy_window_s", self.energy_window_s)?;
        positive("capture.image_bytes", self.capture.image_bytes as f64)?;
        if !(self.capture.rate_per_s.is_finite() && self.capture.rate_per_s >= 0.0) {
            return Err(SimError::config("capture.rate_per_s", "must be non-negative"));
        }
        if !(-90.0..=90.0).contains(&self.capture.min_sun_elevation_deg) {
            return Err(SimError::config("capture.min_sun_elevation_deg", "must be in [-90, 90]"));
        }
        if !(0.0..90.0).contains(&self.min_elevation_deg) {
            return Err(SimError::config("min_elevation_deg", "must be in [0, 90)"));
        }
        if !(0.0..=1.0).contains(&self.prefetch_hit_prob) {
            return Err(SimError::config("prefetch_hit_prob", "must be in [0, 1]"));
        }
        if let Some(a) = self.model_accuracy {
            if !(a > 0.5 && a <= 1.0) {
                return Err(SimError::config("model_accuracy", "must be in (0.5, 1]"));
            }
        }
        let a = self.ablation.static_alpha;
        if !(a > self.controller.beta && a <= 1.0) {
            return Err(SimError::config(
                "ablation.static_alpha",
                format!("must be in (beta, 1], got {a}"),
            ));
        }
        orbitprio_core::runtime::ThresholdController::new(self.controller)
            .map_err(|e| SimError::config("controller", e.to_string()))?;
        self.power.validate()
    }
}
