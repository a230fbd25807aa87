//! Synthetic workloads: filter catalogs, queries and ground-truth rates for
//! disaster response, intelligence and urban monitoring.
//!
//! Filters are grouped by domain onto shared backbones. The multi-task
//! catalog keeps the grouping; the single-task catalog folds each backbone
//! into every head that uses it. Times below are accelerator seconds for the
//! low-power (TPU-like) profile on a 0.05 s grid.
//!
//! Each scenario owns a disjoint block of filter and backbone ids so that
//! formulas from different scenarios can share one catalog.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FormulaError, ScenarioError};
use crate::formula::{Backbone, BackboneId, Filter, FilterCatalog, FilterId};
use crate::geo::{GeoBox, GeoPoint, Region};
use crate::rng;
use crate::schedule::{Query, QuerySet};

pub const DEFAULT_TPR: f64 = 0.95;
pub const DEFAULT_FPR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Disaster,
    Intelligence,
    Urban,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 3] =
        [ScenarioName::Disaster, ScenarioName::Intelligence, ScenarioName::Urban];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Disaster => "disaster",
            ScenarioName::Intelligence => "intelligence",
            ScenarioName::Urban => "urban",
        }
    }

    fn id_base(self) -> u16 {
        match self {
            ScenarioName::Disaster => 200,
            ScenarioName::Intelligence => 100,
            ScenarioName::Urban => 0,
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disaster" => Ok(ScenarioName::Disaster),
            "intelligence" => Ok(ScenarioName::Intelligence),
            "urban" => Ok(ScenarioName::Urban),
            other => Err(ScenarioError::UnknownScenario(other.to_string())),
        }
    }
}

/// Timing and power characteristics of an onboard accelerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceleratorProfile {
    pub name: AcceleratorKind,
    /// Multiplier applied to every catalog time.
    pub time_scale: f64,
    /// Draw while computing, watts.
    pub compute_power: f64,
    /// CPU seconds to select and stage the next filter.
    pub select_time: f64,
    /// CPU-accelerator coordination seconds per filter.
    pub comm_overhead: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceleratorKind {
    Tpu,
    Gpu,
}

impl AcceleratorProfile {
    pub fn tpu() -> Self {
        AcceleratorProfile {
            name: AcceleratorKind::Tpu,
            time_scale: 1.0,
            compute_power: 2.0,
            select_time: 0.05,
            comm_overhead: 0.02,
        }
    }

    /// Roughly 3.2 times faster than the TPU-like part at five times the
    /// power.
    pub fn gpu() -> Self {
        AcceleratorProfile {
            name: AcceleratorKind::Gpu,
            time_scale: 2.46 / 7.82,
            compute_power: 10.0,
            select_time: 0.02,
            comm_overhead: 0.01,
        }
    }

    pub fn scale_catalog(&self, catalog: &FilterCatalog) -> FilterCatalog {
        let filters = catalog
            .filters()
            .map(|f| Filter { head_time: f.head_time * self.time_scale, ..f.clone() });
        let backbones = catalog
            .backbones()
            .map(|b| Backbone { id: b.id, load_time: b.load_time * self.time_scale });
        FilterCatalog::new(filters.collect::<Vec<_>>(), backbones.collect::<Vec<_>>())
            .expect("scaling preserves validity")
    }
}

impl FromStr for AcceleratorProfile {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tpu" | "coral" => Ok(AcceleratorProfile::tpu()),
            "gpu" | "jetson" => Ok(AcceleratorProfile::gpu()),
            other => Err(ScenarioError::UnknownProfile(other.to_string())),
        }
    }
}

/// Ground-truth rates that differ inside a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalRates {
    pub region: Region,
    pub rates: BTreeMap<FilterId, f64>,
}

/// A named place with per-hazard risk weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub name: String,
    pub center: GeoPoint,
    pub risks: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    /// Multi-task catalog at the reference (TPU-like) timing.
    pub catalog: FilterCatalog,
    pub filter_names: BTreeMap<FilterId, String>,
    pub backbone_names: BTreeMap<BackboneId, String>,
    pub queries: Vec<Query>,
    pub sites: Vec<Site>,
    pub base_rates: BTreeMap<FilterId, f64>,
    /// Later entries take precedence.
    pub regional_rates: Vec<RegionalRates>,
}

impl ScenarioSpec {
    pub fn query_set(&self) -> Result<QuerySet, ScenarioError> {
        Ok(QuerySet::new(self.queries.clone(), Some(&self.catalog))?)
    }

    /// Probability that `filter` is truly positive for an image at `p`.
    pub fn truth_rate(&self, filter: FilterId, p: GeoPoint) -> f64 {
        self.regional_rates
            .iter()
            .rev()
            .find(|r| r.rates.contains_key(&filter) && r.region.contains(p))
            .and_then(|r| r.rates.get(&filter).copied())
            .or_else(|| self.base_rates.get(&filter).copied())
            .unwrap_or(0.0)
    }

    /// Largest number of distinct filters in any single query's term.
    pub fn max_term_filters(&self) -> usize {
        self.queries.iter().map(|q| q.filters.len()).max().unwrap_or(0)
    }

    pub fn filter_id(&self, name: &str) -> Option<FilterId> {
        self.filter_names.iter().find(|(_, n)| n.as_str() == name).map(|(&id, _)| id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Single-task catalog: every filter becomes a standalone model that pays
/// its backbone on every run. Pass rates and accuracy are unchanged.
pub fn single_task(catalog: &FilterCatalog) -> FilterCatalog {
    let filters: Vec<Filter> = catalog
        .filters()
        .map(|f| Filter { backbone: None, head_time: catalog.standalone_time(f), ..f.clone() })
        .collect();
    FilterCatalog::new(filters, Vec::new()).expect("standalone filters are valid")
}

/// `(single-task, multi-task)` catalogs for a scenario.
pub fn single_vs_multitask(spec: &ScenarioSpec) -> (FilterCatalog, FilterCatalog) {
    (single_task(&spec.catalog), spec.catalog.clone())
}

struct FilterDef {
    name: &'static str,
    backbone: Option<&'static str>,
    head: f64,
    rate: f64,
}

const fn fd(name: &'static str, backbone: Option<&'static str>, head: f64, rate: f64) -> FilterDef {
    FilterDef { name, backbone, head, rate }
}

struct Template {
    name: &'static str,
    filters: &'static [&'static str],
    priority: u8,
    /// Tag a site or region must carry for the template to apply.
    tag: &'static str,
    latency_sensitive: bool,
}

const fn tpl(
    name: &'static str,
    filters: &'static [&'static str],
    priority: u8,
    tag: &'static str,
) -> Template {
    Template { name, filters, priority, tag, latency_sensitive: true }
}

const fn routine(
    name: &'static str,
    filters: &'static [&'static str],
    tag: &'static str,
) -> Template {
    Template { name, filters, priority: 1, tag, latency_sensitive: false }
}

struct Builder {
    name: ScenarioName,
    ids: BTreeMap<&'static str, FilterId>,
    filter_names: BTreeMap<FilterId, String>,
    backbone_names: BTreeMap<BackboneId, String>,
    filters: Vec<Filter>,
    backbones: Vec<Backbone>,
    base_rates: BTreeMap<FilterId, f64>,
    queries: Vec<Query>,
    regional: Vec<RegionalRates>,
    sites: Vec<Site>,
}

impl Builder {
    fn new(
        name: ScenarioName,
        backbones: &[(&'static str, f64)],
        defs: &[FilterDef],
    ) -> Result<Self, ScenarioError> {
        let base = name.id_base();
        let mut b = Builder {
            name,
            ids: BTreeMap::new(),
            filter_names: BTreeMap::new(),
            backbone_names: BTreeMap::new(),
            filters: Vec::new(),
            backbones: Vec::new(),
            base_rates: BTreeMap::new(),
            queries: Vec::new(),
            regional: Vec::new(),
            sites: Vec::new(),
        };
        let mut bb_ids = BTreeMap::new();
        for (i, &(bname, load)) in backbones.iter().enumerate() {
            let id = BackboneId(base + i as u16);
            bb_ids.insert(bname, id);
            b.backbone_names.insert(id, bname.to_string());
            b.backbones.push(Backbone { id, load_time: load });
        }
        for (i, d) in defs.iter().enumerate() {
            let id = FilterId(base + i as u16);
            b.ids.insert(d.name, id);
            b.filter_names.insert(id, d.name.to_string());
            b.base_rates.insert(id, d.rate);
            b.filters.push(Filter {
                id,
                backbone: d.backbone.map(|n| bb_ids[n]),
                head_time: d.head,
                pass_prob: d.rate,
                tpr: DEFAULT_TPR,
                fpr: DEFAULT_FPR,
            });
        }
        Ok(b)
    }

    fn id(&self, name: &str) -> FilterId {
        self.ids[name]
    }

    fn add_queries(&mut self, templates: &[Template], tags: &[&str], aoi: &[Region]) {
        for t in templates.iter().filter(|t| tags.contains(&t.tag)) {
            let id = self.queries.len() as u32 + u32::from(self.name.id_base()) * 1000;
            let _ = t.name;
            self.queries.push(Query {
                id,
                filters: t.filters.iter().map(|f| self.id(f)).collect(),
                aoi: aoi.to_vec(),
                priority: t.priority,
                latency_sensitive: t.latency_sensitive,
            });
        }
    }

    fn regional(&mut self, region: Region, rates: &[(&str, f64)]) {
        let rates = rates.iter().map(|&(n, r)| (self.id(n), r)).collect();
        self.regional.push(RegionalRates { region, rates });
    }

    fn finish(self) -> Result<ScenarioSpec, ScenarioError> {
        let catalog = FilterCatalog::new(self.filters, self.backbones)?;
        let spec = ScenarioSpec {
            name: self.name,
            catalog,
            filter_names: self.filter_names,
            backbone_names: self.backbone_names,
            queries: self.queries,
            sites: self.sites,
            base_rates: self.base_rates,
            regional_rates: self.regional,
        };
        spec.query_set()?;
        Ok(spec)
    }
}

fn jittered_box(center: GeoPoint, dlat: f64, dlon: f64, seed: u64, key: u64) -> Region {
    let mut r = rng::stream(seed, &[rng::label("aoi"), key]);
    let s = r.gen_range(0.9..1.1);
    Region::Box(GeoBox::around(center, dlat * s, dlon * s))
}

fn plain_box(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Region {
    Region::Box(GeoBox::new(lat_min, lat_max, lon_min, lon_max).expect("static box"))
}

pub fn build_scenario(name: ScenarioName, seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    match name {
        ScenarioName::Urban => urban(seed),
        ScenarioName::Intelligence => intelligence(seed),
        ScenarioName::Disaster => disaster(seed),
    }
}

pub fn build_scenario_named(name: &str, seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    build_scenario(name.parse()?, seed)
}

// ---------------------------------------------------------------- urban

const URBAN_BACKBONES: &[(&str, f64)] = &[("built", 2.40), ("surface", 2.00)];

const URBAN_FILTERS: &[FilterDef] = &[
    fd("cloud_free", None, 0.40, 0.70),
    fd("flood_water", Some("surface"), 0.08, 0.06),
    fd("smoke_plume", Some("surface"), 0.08, 0.05),
    fd("building_damage", Some("built"), 0.10, 0.04),
    fd("construction", Some("built"), 0.08, 0.12),
    fd("informal_settlement", Some("built"), 0.10, 0.15),
    fd("vehicle_massing", Some("built"), 0.10, 0.06),
    fd("crowd", Some("built"), 0.08, 0.06),
    fd("road_blockage", Some("built"), 0.08, 0.05),
    fd("vegetation_change", Some("surface"), 0.05, 0.10),
    fd("water_extent_change", Some("surface"), 0.05, 0.08),
    fd("heat_island", Some("surface"), 0.05, 0.15),
];

const URBAN_TEMPLATES: &[Template] = &[
    tpl("urban_flooding", &["cloud_free", "flood_water"], 4, "flood"),
    tpl("flooded_settlement", &["cloud_free", "flood_water", "informal_settlement"], 5, "flood"),
    tpl("shoreline_change", &["cloud_free", "water_extent_change"], 3, "flood"),
    tpl("structural_collapse", &["cloud_free", "building_damage"], 5, "quake"),
    tpl("blocked_access", &["building_damage", "road_blockage"], 4, "quake"),
    tpl("mass_movement", &["cloud_free", "vehicle_massing", "crowd"], 5, "unrest"),
    tpl("transit_failure", &["vehicle_massing", "road_blockage"], 3, "unrest"),
    tpl("evacuation_jam", &["flood_water", "vehicle_massing", "road_blockage"], 4, "flood"),
    tpl("collapsed_settlement", &["building_damage", "informal_settlement", "crowd"], 5, "quake"),
    tpl("settlement_fire", &["smoke_plume", "informal_settlement", "crowd"], 5, "wildfire"),
    tpl("fire_smoke", &["cloud_free", "smoke_plume"], 4, "wildfire"),
    tpl("interface_fire", &["smoke_plume", "vegetation_change"], 3, "wildfire"),
    tpl("new_construction", &["cloud_free", "construction"], 2, "all"),
    tpl("park_season", &["cloud_free", "vegetation_change"], 2, "all"),
    routine("heat_survey", &["heat_island"], "all"),
];

/// (name, lat, lon, flood, quake, unrest, wildfire)
const CITIES: &[(&str, f64, f64, f64, f64, f64, f64)] = &[
    ("tokyo", 35.68, 139.69, 0.6, 0.9, 0.2, 0.1),
    ("delhi", 28.61, 77.21, 0.5, 0.4, 0.6, 0.2),
    ("shanghai", 31.23, 121.47, 0.8, 0.2, 0.3, 0.1),
    ("sao_paulo", -23.55, -46.63, 0.5, 0.1, 0.5, 0.2),
    ("mexico_city", 19.43, -99.13, 0.4, 0.9, 0.5, 0.2),
    ("cairo", 30.04, 31.24, 0.2, 0.3, 0.7, 0.1),
    ("mumbai", 19.08, 72.88, 0.9, 0.3, 0.5, 0.1),
    ("beijing", 39.90, 116.41, 0.3, 0.4, 0.4, 0.2),
    ("dhaka", 23.81, 90.41, 1.0, 0.4, 0.6, 0.1),
    ("osaka", 34.69, 135.50, 0.6, 0.8, 0.2, 0.1),
    ("new_york", 40.71, -74.01, 0.6, 0.1, 0.3, 0.1),
    ("karachi", 24.86, 67.01, 0.6, 0.4, 0.7, 0.2),
    ("buenos_aires", -34.60, -58.38, 0.5, 0.1, 0.5, 0.1),
    ("istanbul", 41.01, 28.98, 0.3, 0.9, 0.5, 0.3),
    ("kolkata", 22.57, 88.36, 0.9, 0.3, 0.5, 0.1),
    ("manila", 14.60, 120.98, 0.9, 0.7, 0.5, 0.1),
    ("lagos", 6.52, 3.38, 0.8, 0.1, 0.7, 0.1),
    ("rio_de_janeiro", -22.91, -43.17, 0.7, 0.1, 0.6, 0.3),
    ("kinshasa", -4.44, 15.27, 0.6, 0.1, 0.7, 0.2),
    ("los_angeles", 34.05, -118.24, 0.2, 0.9, 0.4, 0.9),
    ("moscow", 55.76, 37.62, 0.3, 0.1, 0.5, 0.3),
    ("lahore", 31.55, 74.34, 0.6, 0.3, 0.6, 0.2),
    ("bangkok", 13.76, 100.50, 0.9, 0.1, 0.5, 0.1),
    ("jakarta", -6.21, 106.85, 1.0, 0.6, 0.5, 0.2),
    ("lima", -12.05, -77.04, 0.3, 0.9, 0.5, 0.1),
    ("london", 51.51, -0.13, 0.5, 0.1, 0.3, 0.1),
    ("tehran", 35.69, 51.39, 0.2, 0.9, 0.7, 0.2),
    ("bogota", 4.71, -74.07, 0.4, 0.6, 0.5, 0.2),
    ("ho_chi_minh", 10.82, 106.63, 0.9, 0.1, 0.4, 0.1),
    ("hong_kong", 22.32, 114.17, 0.7, 0.2, 0.6, 0.2),
    ("baghdad", 33.31, 44.36, 0.4, 0.3, 0.8, 0.2),
    ("riyadh", 24.71, 46.68, 0.2, 0.1, 0.4, 0.2),
    ("santiago", -33.45, -70.67, 0.2, 0.9, 0.5, 0.6),
    ("singapore", 1.35, 103.82, 0.6, 0.1, 0.2, 0.1),
    ("sydney", -33.87, 151.21, 0.4, 0.1, 0.2, 0.9),
    ("johannesburg", -26.20, 28.05, 0.3, 0.2, 0.6, 0.4),
    ("nairobi", -1.29, 36.82, 0.4, 0.3, 0.7, 0.3),
    ("kathmandu", 27.72, 85.32, 0.5, 0.9, 0.6, 0.3),
    ("athens", 37.98, 23.73, 0.2, 0.7, 0.5, 0.9),
    ("paris", 48.86, 2.35, 0.4, 0.1, 0.5, 0.1),
    ("chicago", 41.88, -87.63, 0.4, 0.1, 0.3, 0.1),
    ("addis_ababa", 9.03, 38.74, 0.3, 0.5, 0.6, 0.3),
    ("dubai", 25.20, 55.27, 0.3, 0.1, 0.2, 0.1),
    ("seoul", 37.57, 126.98, 0.5, 0.2, 0.4, 0.2),
    ("khartoum", 15.50, 32.56, 0.6, 0.1, 0.8, 0.3),
    ("vancouver", 49.28, -123.12, 0.3, 0.8, 0.2, 0.7),
];

/// Half-extent of a metropolitan area of interest, degrees.
pub const URBAN_HALF_LAT: f64 = 2.5;
pub const URBAN_HALF_LON: f64 = 3.0;

/// Risk weight at which a hazard's templates apply to a city.
pub const RISK_CUTOFF: f64 = 0.5;

fn urban(seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    let mut b = Builder::new(ScenarioName::Urban, URBAN_BACKBONES, URBAN_FILTERS)?;
    let hazards = ["flood", "quake", "unrest", "wildfire"];
    let hazard_filters: [&[&str]; 4] = [
        &["flood_water", "water_extent_change"],
        &["building_damage", "road_blockage"],
        &["vehicle_massing", "crowd"],
        &["smoke_plume", "vegetation_change"],
    ];
    for (k, &(name, lat, lon, flood, quake, unrest, fire)) in CITIES.iter().enumerate() {
        let center = GeoPoint::new(lat, lon);
        let weights = [flood, quake, unrest, fire];
        let mut tags = vec!["all"];
        for (h, &w) in hazards.iter().zip(&weights) {
            if w >= RISK_CUTOFF {
                tags.push(h);
            }
        }
        let aoi = jittered_box(center, URBAN_HALF_LAT, URBAN_HALF_LON, seed, k as u64);
        b.add_queries(URBAN_TEMPLATES, &tags, std::slice::from_ref(&aoi));
        // risk raises the local incidence of the hazard's indicators
        let mut rates = Vec::new();
        for (filters, &w) in hazard_filters.iter().zip(&weights) {
            for &f in filters.iter() {
                let base = URBAN_FILTERS.iter().find(|d| d.name == f).expect("filter").rate;
                rates.push((f, (base * (0.5 + w)).min(1.0)));
            }
        }
        b.regional(aoi, &rates);
        b.sites.push(Site {
            name: name.to_string(),
            center,
            risks: hazards.iter().zip(weights).map(|(h, w)| (h.to_string(), w)).collect(),
        });
    }
    b.finish()
}

// ---------------------------------------------------------- intelligence

const INTEL_BACKBONES: &[(&str, f64)] = &[("maritime", 1.30), ("aerial", 1.40), ("land", 1.60)];

const INTEL_FILTERS: &[FilterDef] = &[
    fd("cloud_free", None, 0.25, 0.65),
    fd("ship", Some("maritime"), 0.15, 0.25),
    fd("military_vessel", Some("maritime"), 0.20, 0.10),
    fd("vessel_cluster", Some("maritime"), 0.15, 0.08),
    fd("port_congestion", Some("maritime"), 0.15, 0.10),
    fd("aircraft", Some("aerial"), 0.15, 0.20),
    fd("military_aircraft", Some("aerial"), 0.20, 0.10),
    fd("aircraft_cluster", Some("aerial"), 0.15, 0.08),
    fd("vehicle", Some("land"), 0.15, 0.30),
    fd("armor", Some("land"), 0.20, 0.08),
    fd("vehicle_cluster", Some("land"), 0.15, 0.10),
    fd("earthworks", Some("land"), 0.15, 0.10),
    fd("bridge_damage", Some("land"), 0.20, 0.03),
    fd("road_damage", Some("land"), 0.15, 0.05),
];

const INTEL_TEMPLATES: &[Template] = &[
    tpl("naval_presence", &["cloud_free", "ship", "military_vessel"], 4, "sea"),
    tpl(
        "naval_concentration",
        &["cloud_free", "ship", "military_vessel", "vessel_cluster"],
        5,
        "sea",
    ),
    tpl("port_disruption", &["ship", "port_congestion"], 3, "sea"),
    tpl("shipping_traffic", &["cloud_free", "ship"], 2, "sea"),
    routine("route_logging", &["ship"], "sea"),
    tpl("combat_aircraft", &["cloud_free", "aircraft", "military_aircraft"], 4, "air"),
    tpl(
        "airbase_surge",
        &["cloud_free", "aircraft", "military_aircraft", "aircraft_cluster"],
        5,
        "air",
    ),
    tpl("air_traffic", &["cloud_free", "aircraft"], 2, "air"),
    tpl(
        "armament_buildup",
        &["cloud_free", "vehicle", "armor", "vehicle_cluster", "earthworks"],
        5,
        "land",
    ),
    tpl("armored_convoy", &["vehicle", "armor", "road_damage"], 4, "land"),
    tpl("crossing_destroyed", &["cloud_free", "bridge_damage"], 5, "land"),
    tpl("supply_disruption", &["cloud_free", "road_damage"], 4, "land"),
    tpl("fortification", &["cloud_free", "earthworks"], 3, "land"),
    tpl("road_traffic", &["cloud_free", "vehicle"], 2, "land"),
];

/// (name, lat_min, lat_max, lon_min, lon_max, tags, activity multiplier)
const INTEL_REGIONS: &[(&str, f64, f64, f64, f64, &[&str], f64)] = &[
    ("black_sea", 40.5, 47.0, 27.5, 42.0, &["sea", "air"], 1.5),
    ("eastern_europe", 45.0, 56.0, 22.0, 42.0, &["land", "air"], 1.6),
    ("baltic", 53.5, 60.5, 12.0, 30.0, &["sea", "air"], 1.1),
    ("eastern_med", 31.0, 37.5, 26.0, 36.5, &["sea", "air"], 1.2),
    ("levant", 29.5, 37.5, 34.0, 43.0, &["land", "air"], 1.5),
    ("persian_gulf", 23.5, 30.5, 47.5, 57.5, &["sea", "air"], 1.3),
    ("red_sea", 12.0, 22.0, 36.0, 44.5, &["sea"], 1.4),
    ("horn_of_africa", 2.0, 15.0, 38.0, 51.0, &["land"], 1.1),
    ("caucasus", 38.5, 44.0, 40.0, 50.0, &["land", "air"], 1.2),
    ("korean_peninsula", 34.0, 42.5, 124.0, 131.0, &["land", "air", "sea"], 1.4),
    ("taiwan_strait", 21.5, 27.5, 116.0, 123.0, &["sea", "air"], 1.5),
    ("south_china_sea", 5.0, 20.0, 108.0, 120.0, &["sea"], 1.2),
    ("kashmir", 32.0, 37.0, 72.0, 80.0, &["land", "air"], 1.2),
    ("sahel", 11.0, 18.0, -5.0, 10.0, &["land"], 1.0),
    ("hormuz_approach", 22.0, 27.5, 56.0, 62.0, &["sea"], 1.3),
    ("arctic_north", 66.0, 71.0, 30.0, 60.0, &["sea", "air"], 0.9),
];

fn intelligence(seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    let mut b = Builder::new(ScenarioName::Intelligence, INTEL_BACKBONES, INTEL_FILTERS)?;
    let mut r = rng::stream(seed, &[rng::label("intelligence")]);
    for &(name, lat0, lat1, lon0, lon1, tags, activity) in INTEL_REGIONS {
        let grow = r.gen_range(-0.5..0.5);
        let aoi =
            plain_box((lat0 - grow).max(-90.0), (lat1 + grow).min(90.0), lon0 - grow, lon1 + grow);
        b.add_queries(INTEL_TEMPLATES, tags, std::slice::from_ref(&aoi));
        let mut rates = Vec::new();
        for d in INTEL_FILTERS.iter().filter(|d| d.backbone.is_some()) {
            rates.push((d.name, (d.rate * activity).min(1.0)));
        }
        b.regional(aoi, &rates);
        b.sites.push(Site {
            name: name.to_string(),
            center: GeoPoint::new((lat0 + lat1) / 2.0, (lon0 + lon1) / 2.0),
            risks: [("activity".to_string(), activity)].into_iter().collect(),
        });
    }
    b.finish()
}

// -------------------------------------------------------------- disaster

const DISASTER_BACKBONES: &[(&str, f64)] = &[("thermal", 0.50), ("water", 0.45), ("geology", 0.55)];

const DISASTER_FILTERS: &[FilterDef] = &[
    fd("fire_hotspot", Some("thermal"), 0.10, 0.03),
    fd("fire_front_spread", Some("thermal"), 0.02, 0.30),
    fd("ash_plume", Some("thermal"), 0.05, 0.01),
    fd("lava_flow", Some("thermal"), 0.05, 0.01),
    fd("flood_extent", Some("water"), 0.10, 0.04),
    fd("river_overflow", Some("water"), 0.02, 0.30),
    fd("oil_slick", Some("water"), 0.05, 0.01),
    fd("ground_deformation", Some("geology"), 0.05, 0.01),
    fd("landslide", Some("geology"), 0.05, 0.01),
];

const DISASTER_TEMPLATES: &[Template] = &[
    tpl("spreading_wildfire", &["fire_hotspot", "fire_front_spread"], 5, "fire"),
    tpl("contained_fire", &["fire_hotspot"], 2, "fire"),
    tpl("new_eruption", &["ash_plume"], 5, "volcano"),
    tpl("lava_advance", &["lava_flow"], 3, "volcano"),
    tpl("river_breach", &["flood_extent", "river_overflow"], 4, "flood"),
    tpl("swollen_river", &["flood_extent"], 2, "flood"),
    tpl("surface_rupture", &["ground_deformation"], 4, "quake"),
    tpl("slope_failure", &["landslide"], 3, "quake"),
    tpl("spill_at_sea", &["oil_slick"], 3, "spill"),
];

const DISASTER_REGIONS: &[(&str, f64, f64, f64, f64, &[&str])] = &[
    ("western_us", 32.0, 49.0, -124.5, -104.0, &["fire", "quake"]),
    ("mediterranean", 35.0, 45.0, -9.0, 30.0, &["fire", "quake"]),
    ("southeast_australia", -39.0, -28.0, 140.0, 154.0, &["fire"]),
    ("siberia", 55.0, 68.0, 90.0, 130.0, &["fire"]),
    ("amazon", -15.0, 2.0, -70.0, -45.0, &["fire", "flood"]),
    ("ganges_brahmaputra", 21.0, 30.0, 78.0, 95.0, &["flood", "quake"]),
    ("mekong_yangtze", 10.0, 32.0, 100.0, 122.0, &["flood"]),
    ("mississippi", 29.0, 42.0, -95.0, -85.0, &["flood"]),
    ("niger_basin", 4.0, 16.0, -6.0, 10.0, &["flood", "spill"]),
    ("indonesia_arc", -9.0, 4.0, 95.0, 128.0, &["volcano", "quake"]),
    ("andes", -40.0, 5.0, -80.0, -66.0, &["volcano", "quake"]),
    ("japan_kamchatka", 31.0, 60.0, 129.0, 163.0, &["volcano", "quake"]),
    ("iceland", 63.0, 67.0, -25.0, -13.0, &["volcano"]),
    ("anatolia_iran", 34.0, 42.0, 26.0, 60.0, &["quake"]),
    ("gulf_of_mexico", 18.0, 30.5, -98.0, -81.0, &["spill"]),
    ("north_sea", 51.0, 62.0, -4.0, 9.0, &["spill"]),
    ("persian_gulf", 23.5, 30.5, 47.5, 57.5, &["spill"]),
];

fn disaster(seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    let mut b = Builder::new(ScenarioName::Disaster, DISASTER_BACKBONES, DISASTER_FILTERS)?;
    let mut r = rng::stream(seed, &[rng::label("disaster")]);
    for &(name, lat0, lat1, lon0, lon1, tags) in DISASTER_REGIONS {
        let grow = r.gen_range(-0.5..0.5);
        let aoi = plain_box(lat0 - grow, lat1 + grow, lon0 - grow, lon1 + grow);
        b.add_queries(DISASTER_TEMPLATES, tags, std::slice::from_ref(&aoi));
        b.sites.push(Site {
            name: name.to_string(),
            center: GeoPoint::new((lat0 + lat1) / 2.0, (lon0 + lon1) / 2.0),
            risks: tags.iter().map(|t| (t.to_string(), 1.0)).collect(),
        });
    }
    b.finish()
}

/// One catalog holding the filters of several scenarios.
pub fn union_catalog<'a>(
    catalogs: impl IntoIterator<Item = &'a FilterCatalog>,
) -> Result<FilterCatalog, FormulaError> {
    let mut filters = Vec::new();
    let mut backbones = Vec::new();
    for c in catalogs {
        filters.extend(c.filters().cloned());
        backbones.extend(c.backbones().cloned());
    }
    FilterCatalog::new(filters, backbones)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        for name in ScenarioName::ALL {
            let a = build_scenario(name, 11).unwrap();
            let b = build_scenario(name, 11).unwrap();
            assert_eq!(a.to_json(), b.to_json());
        }
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(matches!(
            build_scenario_named("volcanic", 1),
            Err(ScenarioError::UnknownScenario(_))
        ));
        assert!(matches!(
            "fpga".parse::<AcceleratorProfile>(),
            Err(ScenarioError::UnknownProfile(_))
        ));
    }

    #[test]
    fn disaster_is_smallest() {
        let d = build_scenario(ScenarioName::Disaster, 1).unwrap();
        let i = build_scenario(ScenarioName::Intelligence, 1).unwrap();
        assert!(d.max_term_filters() <= i.max_term_filters());
    }

    #[test]
    fn city_aois_contain_their_centers() {
        let u = build_scenario(ScenarioName::Urban, 3).unwrap();
        let qs = u.query_set().unwrap();
        for site in &u.sites {
            assert!(!qs.aoi_match(site.center).is_empty(), "{}", site.name);
        }
    }

    #[test]
    fn single_task_folds_backbones() {
        let u = build_scenario(ScenarioName::Urban, 0).unwrap();
        let (st, mt) = single_vs_multitask(&u);
        for f in mt.filters() {
            let s = st.get(f.id).unwrap();
            assert_eq!(s.backbone, None);
            assert!((s.head_time - mt.standalone_time(f)).abs() < 1e-12);
            assert_eq!(s.pass_prob, f.pass_prob);
            assert_eq!(s.tpr, f.tpr);
        }
    }

    #[test]
    fn gpu_is_faster() {
        let u = build_scenario(ScenarioName::Urban, 0).unwrap();
        let tpu = AcceleratorProfile::tpu().scale_catalog(&u.catalog);
        let gpu = AcceleratorProfile::gpu().scale_catalog(&u.catalog);
        for f in tpu.filters() {
            assert!(gpu.get(f.id).unwrap().head_time < f.head_time);
        }
    }

    #[test]
    fn scenario_ids_are_disjoint() {
        let specs: Vec<ScenarioSpec> =
            ScenarioName::ALL.iter().map(|&n| build_scenario(n, 0).unwrap()).collect();
        union_catalog(specs.iter().map(|s| &s.catalog)).unwrap();
    }

    #[test]
    fn regional_rates_override_base() {
        let u = build_scenario(ScenarioName::Urban, 0).unwrap();
        let flood = u.filter_id("flood_water").unwrap();
        let lagos = u.sites.iter().find(|s| s.name == "lagos").unwrap().center;
        assert!((u.truth_rate(flood, lagos) - 0.06 * 1.3).abs() < 1e-12);
        assert_eq!(u.truth_rate(flood, GeoPoint::new(-60.0, -150.0)), 0.06);
    }
}
