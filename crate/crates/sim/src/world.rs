//! The simulated world and its tick loop.
//!
//! Each tick `[t, t + dt)` runs, in order and satellite by satellite:
//! contact changes (with schedule uplink at contact start), downlink,
//! captures, onboard compute and power integration. Downlink sees the queue
//! as it stood at the start of the tick; compute jobs start and finish at
//! sub-tick times.

use std::collections::{BTreeMap, HashMap, VecDeque};

use orbitprio_core::codec::{decode_schedule, encode_schedule};
use orbitprio_core::formula::{DnfFormula, FilterCatalog, FilterId, Tier};
use orbitprio_core::lookahead::{DownlinkWindow, ForecastImage, Lookahead, PriorityLedger};
use orbitprio_core::rng;
use orbitprio_core::runtime::{
    prioritize_image, FilterOrdering, PrioritizationResult, SimulatedOutcomes, ThresholdController,
    Thresholds, TraceRecord,
};
use orbitprio_core::scenario::{
    build_scenario, single_vs_multitask, AcceleratorProfile, ScenarioSpec,
};
use orbitprio_core::schedule::{generate_schedule, Capture, QuerySet, Schedule};
use orbitprio_core::stats::{FilterReport, FilterStats};
use orbitprio_core::timing::TimingModel;
use rand_chacha::ChaCha8Rng;

use crate::allocation::{allocate_bandwidth, Demand};
use crate::capture::{seq_of, CapturePlan};
use crate::config::{Constellation, SimConfig, Variant, UNINFORMED_PASS_PROB};
use crate::error::SimError;
use crate::ground::{ContactTimeline, ContactWindow};
use crate::metrics::{ContactRecord, ImageRecord, MetricsLog, SatelliteEnergy};
use crate::orbit::{in_eclipse, OrbitModel};
use crate::power::{Battery, EnergyLedger, Subsystem};
use crate::queue::{DownlinkQueue, Queued};

#[derive(Debug, Clone)]
struct UplinkedSchedule {
    first_seq: u64,
    schedule: Schedule,
}

#[derive(Debug, Clone)]
struct Job {
    record: usize,
    end: f64,
    result: PrioritizationResult,
}

/// Work waiting for the accelerator.
#[derive(Debug, Clone)]
struct Pending {
    formula: DnfFormula,
    truth: BTreeMap<FilterId, bool>,
}

#[derive(Debug, Clone)]
struct SatelliteState {
    id: u32,
    orbit: OrbitModel,
    plan: CapturePlan,
    battery: Battery,
    energy: EnergyLedger,
    window_energy: Option<EnergyLedger>,
    initial_charge: f64,
    min_charge: f64,
    max_charge: f64,
    queue: DownlinkQueue,
    compute_queue: VecDeque<usize>,
    job: Option<Job>,
    controller: ThresholdController,
    catalog: FilterCatalog,
    schedule: Option<UplinkedSchedule>,
    reports: BTreeMap<FilterId, FilterReport>,
    in_contact: bool,
    window_end: f64,
    awaiting_contact: Vec<usize>,
    last_served: f64,
    rng: ChaCha8Rng,
}

/// Ground-side filter statistics and forecasting shared by all satellites.
#[derive(Debug)]
struct GroundSegment {
    stats: FilterStats,
    catalog: FilterCatalog,
    lookahead: Lookahead,
}

/// Everything a finished run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub log: MetricsLog,
    pub trace: Vec<TraceRecord>,
}

pub struct World {
    config: SimConfig,
    profile: AcceleratorProfile,
    spec: ScenarioSpec,
    queries: QuerySet,
    /// Catalog of the variant's models before any statistics.
    models: FilterCatalog,
    ground: GroundSegment,
    timeline: ContactTimeline,
    sats: Vec<SatelliteState>,
    images: Vec<ImageRecord>,
    pending: HashMap<usize, Pending>,
    contacts: Vec<ContactRecord>,
    trace: Vec<TraceRecord>,
    tick: u64,
    ticks: u64,
}

impl World {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        let spec = build_scenario(config.scenario, config.seed)?;
        Self::with_spec(config, spec, None)
    }

    /// Builds a world from an explicit workload and, optionally, an explicit
    /// constellation in place of the configured preset.
    pub fn with_spec(
        config: SimConfig,
        spec: ScenarioSpec,
        constellation: Option<Constellation>,
    ) -> Result<Self, SimError> {
        config.validate()?;
        let constellation = constellation.unwrap_or_else(|| Constellation::preset(config.preset));
        for o in &constellation.satellites {
            o.validate()?;
        }
        let profile = config.profile();
        let queries = spec.query_set()?;
        let (st, mt) = single_vs_multitask(&spec);
        let mut models = profile.scale_catalog(match config.variant {
            Variant::EarthsightMt => &mt,
            Variant::Baseline | Variant::EarthsightSt => &st,
        });
        if let Some(a) = config.model_accuracy {
            models.set_accuracy(a)?;
        }
        let mut ground_catalog = models.clone();
        if config.variant.is_adaptive() && !config.ablation.ground_scheduler {
            let ids: Vec<FilterId> = ground_catalog.filters().map(|f| f.id).collect();
            ground_catalog.set_pass_probs(ids.into_iter().map(|id| (id, UNINFORMED_PASS_PROB)));
        }
        let ground = GroundSegment {
            stats: FilterStats::from_catalog(&models),
            catalog: ground_catalog,
            lookahead: Lookahead::new(),
        };

        let ticks = (config.duration_s / config.dt).ceil() as u64;
        let horizon_end = ticks as f64 * config.dt + config.lookahead_horizon_s;
        let timeline = ContactTimeline::compute(
            &constellation.satellites,
            &constellation.stations,
            config.min_elevation_deg,
            horizon_end,
            config.dt,
        );

        let mut sats = Vec::with_capacity(constellation.satellites.len());
        for (i, orbit) in constellation.satellites.iter().enumerate() {
            let id = i as u32;
            let battery = Battery::new(&config.power);
            sats.push(SatelliteState {
                id,
                orbit: *orbit,
                plan: CapturePlan::new(config.seed, id, *orbit, config.capture),
                battery,
                energy: EnergyLedger::default(),
                window_energy: None,
                initial_charge: battery.charge,
                min_charge: battery.charge,
                max_charge: battery.charge,
                queue: DownlinkQueue::new(),
                compute_queue: VecDeque::new(),
                job: None,
                controller: ThresholdController::new(config.controller)?,
                catalog: ground.catalog.clone(),
                schedule: None,
                reports: BTreeMap::new(),
                in_contact: false,
                window_end: 0.0,
                awaiting_contact: Vec::new(),
                last_served: f64::NEG_INFINITY,
                rng: rng::stream(config.seed, &[rng::label("timing"), u64::from(id)]),
            });
        }

        Ok(World {
            config,
            profile,
            spec,
            queries,
            models,
            ground,
            timeline,
            sats,
            images: Vec::new(),
            pending: HashMap::new(),
            contacts: Vec::new(),
            trace: Vec::new(),
            tick: 0,
            ticks,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn timeline(&self) -> &ContactTimeline {
        &self.timeline
    }

    pub fn now(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.ticks
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    /// Charge of each satellite's battery, joules.
    pub fn battery_levels(&self) -> Vec<f64> {
        self.sats.iter().map(|s| s.battery.charge).collect()
    }

    /// Images waiting or in flight on each satellite.
    pub fn queue_lengths(&self) -> Vec<usize> {
        self.sats.iter().map(|s| s.queue.len()).collect()
    }

    fn thresholds(&self, sat: usize) -> Thresholds {
        if !self.config.variant.is_adaptive() {
            Thresholds::EXHAUSTIVE
        } else if self.config.ablation.dynamic_threshold {
            self.sats[sat].controller.thresholds()
        } else {
            Thresholds {
                beta: self.config.controller.beta,
                alpha: self.config.ablation.static_alpha,
            }
        }
    }

    fn ordering(&self) -> FilterOrdering {
        if self.config.variant.is_adaptive() && self.config.ablation.filter_ordering {
            FilterOrdering::Greedy
        } else {
            FilterOrdering::StaticByTime
        }
    }

    fn timing(&self) -> TimingModel {
        let hit = if self.config.variant.is_adaptive() {
            self.config.prefetch_hit_prob
        } else {
            // a fixed order is always known in advance
            1.0
        };
        TimingModel::pipelined(self.profile.select_time, self.profile.comm_overhead, hit)
    }

    /// Advances the world by one tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.now();
        let end = t + self.config.dt;
        for s in 0..self.sats.len() {
            self.update_contact(s, t)?;
        }
        let tx_busy = self.downlink(t);
        for s in 0..self.sats.len() {
            self.capture(s, end);
        }
        for s in 0..self.sats.len() {
            let compute_busy = self.compute(s, t, end)?;
            self.integrate_power(s, t, tx_busy[s], compute_busy);
        }
        self.tick += 1;
        Ok(())
    }

    pub fn run(mut self) -> Result<SimOutput, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.finish())
    }

    fn update_contact(&mut self, s: usize, t: f64) -> Result<(), SimError> {
        let window = self.timeline.window_at(s, t);
        let was = self.sats[s].in_contact;
        match window {
            Some(w) if !was => {
                let sat = &mut self.sats[s];
                sat.in_contact = true;
                sat.window_end = w.end;
                for idx in sat.awaiting_contact.drain(..) {
                    self.images[idx].first_contact = Some(t);
                    self.images[idx].first_window_end = Some(w.end);
                }
                if self.config.variant.is_adaptive() {
                    self.uplink(s, t, Some(w))?;
                }
            }
            None if was => self.sats[s].in_contact = false,
            None if t == 0.0 && self.config.variant.is_adaptive() => {
                // schedule loaded before the run starts
                self.uplink(s, t, None)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Ground processing at contact start: statistics, forecast, schedule.
    fn uplink(&mut self, s: usize, t: f64, current: Option<ContactWindow>) -> Result<(), SimError> {
        let horizon = t + self.config.lookahead_horizon_s;
        let next = self.timeline.next_window_after(s, t).filter(|w| w.start < horizon);
        let bandwidth = self.config.downlink_bandwidth;

        let (threshold, r_reject) = if self.config.ablation.ground_scheduler {
            let reports = std::mem::take(&mut self.sats[s].reports);
            if reports.values().any(|r| r.executed > 0) {
                self.ground.stats.update(&reports, t);
                let mut cat = self.models.clone();
                self.ground.stats.apply(&mut cat);
                self.ground.catalog = cat;
                self.ground.lookahead.invalidate();
            }
            let forecast_end = next.map_or(horizon, |w| w.start);
            let images: Vec<ForecastImage> = self.sats[s]
                .plan
                .upcoming(t, forecast_end)
                .into_iter()
                .map(|c| ForecastImage {
                    time: c.time,
                    size: c.size as f64,
                    formula: self.queries.formula_at(c.loc, 2),
                })
                .collect();
            let windows: Vec<DownlinkWindow> = current
                .map(|w| (t, w.end))
                .into_iter()
                .chain(next.map(|w| (w.start, w.end)))
                .map(|(start, end)| DownlinkWindow {
                    satellite: s as u32,
                    station: 0,
                    start,
                    end,
                    bandwidth,
                })
                .collect();
            let backlog = self.backlog(s);
            let f = self.ground.lookahead.forecast_contact(
                &images,
                &backlog,
                &windows,
                &self.ground.catalog,
            );
            (f.schedule_threshold(), f.r_reject)
        } else {
            (2, 0.0)
        };

        let coverage_end = next.map_or(horizon, |w| w.end);
        let plan: Vec<Capture> = self.sats[s].plan.upcoming(t, coverage_end);
        let schedule = generate_schedule(&plan, &self.queries, threshold);
        let bytes = encode_schedule(&schedule)?;
        let decoded = decode_schedule(&bytes)?;
        let first_seq = plan.first().map_or(0, |c| seq_of(c.image));

        let sat = &mut self.sats[s];
        // one threshold step per contact, judged against the target that
        // was in force since the previous uplink
        if self.config.ablation.dynamic_threshold && sat.controller.computed_count() > 0 {
            let ratio = sat.controller.power_ratio(sat.battery.charge, sat.battery.capacity);
            sat.controller.update_alpha(ratio);
        }
        sat.schedule = Some(UplinkedSchedule { first_seq, schedule: decoded });
        sat.catalog = self.ground.catalog.clone();
        sat.controller.set_target_reject_rate(r_reject);
        sat.controller.reset_tallies();
        let backlog_bytes = Tier::TRANSMIT_ORDER.iter().map(|&tier| sat.queue.bytes_in(tier)).sum();
        self.contacts.push(ContactRecord {
            satellite: s as u32,
            time: t,
            window_end: current.map_or(t, |w| w.end),
            p_star: threshold,
            r_reject,
            alpha: sat.controller.alpha(),
            schedule_slots: plan.len(),
            schedule_bytes: bytes.len(),
            backlog_bytes,
        });
        Ok(())
    }

    /// Expected bytes per tier of everything already on board.
    fn backlog(&mut self, s: usize) -> PriorityLedger {
        let mut ledger = PriorityLedger::default();
        let sat = &self.sats[s];
        if let Some(f) = sat.queue.in_flight() {
            ledger.add_to(f.remaining, f.item.tier);
        }
        let mut waiting: Vec<(usize, Queued)> = Vec::new();
        for q in sat.queue.iter() {
            waiting.push((q.seq as usize, *q));
        }
        for (idx, q) in waiting {
            let scheduled = self.pending.get(&idx).map(|p| p.formula.clone());
            match scheduled {
                Some(formula) => {
                    let d = self.ground.lookahead.distribution(&formula, &self.ground.catalog);
                    ledger.add(q.size as f64, &d);
                }
                None => ledger.add_to(q.size as f64, q.tier),
            }
        }
        ledger
    }

    /// Transmits for one tick; returns transmitter busy seconds per satellite.
    fn downlink(&mut self, t: f64) -> Vec<f64> {
        let mut busy = vec![0.0; self.sats.len()];
        let mut visible = Vec::new();
        let mut demands = Vec::new();
        let reserve = self.config.power.reserve_fraction;
        for (s, sat) in self.sats.iter().enumerate() {
            if !sat.in_contact || sat.battery.fraction() <= reserve {
                continue;
            }
            let Some((tier, bytes)) = sat.queue.demand() else {
                continue;
            };
            for st in self.timeline.stations_at(s, t) {
                visible.push((s as u32, st));
            }
            demands.push(Demand { satellite: s as u32, tier, bytes, last_served: sat.last_served });
        }
        for a in allocate_bandwidth(&visible, &demands) {
            let s = a.satellite as usize;
            let sat = &mut self.sats[s];
            let report = sat.queue.transmit(t, self.config.dt, self.config.downlink_bandwidth);
            for (item, best_left) in &report.starts {
                debug_assert!(best_left.map_or(true, |b| b <= item.tier));
            }
            for d in report.delivered {
                let rec = &mut self.images[d.seq as usize];
                rec.downlink_time = Some(d.finished);
                rec.assigned = d.tier;
                // sent before the accelerator reached it
                self.pending.remove(&(d.seq as usize));
            }
            sat.last_served = t;
            busy[s] = report.busy;
        }
        busy
    }

    fn capture(&mut self, s: usize, end: f64) {
        let caps = self.sats[s].plan.take_before(end);
        for c in caps {
            let idx = self.images.len();
            let matched = self.queries.aoi_match(c.loc);
            let mut truth = BTreeMap::new();
            for q in &matched {
                for &f in &q.filters {
                    truth.entry(f).or_insert_with(|| {
                        rng::unit(self.config.seed, &[rng::label("truth"), c.image, u64::from(f.0)])
                            < self.spec.truth_rate(f, c.loc)
                    });
                }
            }
            let truth_priority =
                self.queries.true_priority(c.loc, |f| truth.get(&f).copied().unwrap_or(false));
            let formula = if self.config.variant.is_adaptive() {
                self.sats[s].schedule.as_ref().and_then(|u| {
                    let seq = seq_of(c.image);
                    seq.checked_sub(u.first_seq)
                        .and_then(|slot| u.schedule.formula_at(slot as usize))
                        .cloned()
                })
            } else {
                self.queries.formula_at(c.loc, 2)
            };
            let sat = &mut self.sats[s];
            let (first_contact, first_window_end) = if sat.in_contact {
                (Some(c.time), Some(sat.window_end))
            } else {
                sat.awaiting_contact.push(idx);
                (None, None)
            };
            self.images.push(ImageRecord {
                image: c.image,
                satellite: c.satellite,
                capture_time: c.time,
                lat: c.loc.lat,
                lon: c.loc.lon,
                first_contact,
                first_window_end,
                formula_filters: formula.as_ref().map_or(0, |f| f.filter_set().len() as u32),
                compute_start: None,
                prioritization_time: None,
                filters_run: 0,
                exit: None,
                assigned: Tier::P1,
                truth_priority,
                downlink_time: None,
            });
            sat.queue.push(Queued { seq: idx as u64, size: c.size, tier: Tier::P1 });
            if let Some(formula) = formula {
                sat.compute_queue.push_back(idx);
                self.pending.insert(idx, Pending { formula, truth });
            }
        }
    }

    /// Runs the accelerator over `[t, end)`; returns busy seconds.
    fn compute(&mut self, s: usize, t: f64, end: f64) -> Result<f64, SimError> {
        if self.sats[s].battery.fraction() <= self.config.power.reserve_fraction {
            if let Some(job) = self.sats[s].job.as_mut() {
                job.end += end - t;
            }
            return Ok(0.0);
        }
        let mut cursor = t;
        let mut busy = 0.0;
        loop {
            if let Some(job) = self.sats[s].job.take() {
                if job.end <= end {
                    busy += job.end - cursor;
                    cursor = job.end;
                    self.complete(s, job);
                    continue;
                }
                busy += end - cursor;
                self.sats[s].job = Some(job);
                break;
            }
            let Some(idx) = self.sats[s].compute_queue.pop_front() else {
                break;
            };
            let Some(pending) = self.pending.remove(&idx) else {
                // already downlinked as unprocessed imagery
                continue;
            };
            let start = cursor.max(self.images[idx].capture_time);
            if start >= end {
                self.pending.insert(idx, pending);
                self.sats[s].compute_queue.push_front(idx);
                break;
            }
            cursor = start;
            let result = self.prioritize(s, idx, &pending)?;
            self.images[idx].compute_start = Some(start);
            self.sats[s].job = Some(Job { record: idx, end: start + result.compute_time, result });
        }
        Ok(busy)
    }

    fn prioritize(
        &mut self,
        s: usize,
        idx: usize,
        pending: &Pending,
    ) -> Result<PrioritizationResult, SimError> {
        let thresholds = self.thresholds(s);
        let ordering = self.ordering();
        let timing = self.timing();
        let image = self.images[idx].image;
        let mut outcomes = SimulatedOutcomes {
            truth: pending.truth.clone(),
            seed: rng::mix(self.config.seed, &[rng::label("outcome"), image]),
        };
        let power = self.profile.compute_power;
        let sat = &mut self.sats[s];
        Ok(prioritize_image(
            &pending.formula,
            &sat.catalog,
            thresholds,
            ordering,
            &mut outcomes,
            &timing,
            &mut sat.rng,
            power,
        )?)
    }

    fn complete(&mut self, s: usize, job: Job) {
        let adaptive = self.config.variant.is_adaptive();
        let tier = match job.result.priority {
            Tier::Compute if !adaptive => Tier::P1,
            t => t,
        };
        let sat = &mut self.sats[s];
        sat.queue.retier(job.record as u64, tier);
        for (&f, &passed) in job.result.filters_run.iter().zip(&job.result.outcomes) {
            let r = sat.reports.entry(f).or_default();
            r.executed += 1;
            r.passed += u64::from(passed);
        }
        if adaptive {
            sat.controller.record(job.result.priority == Tier::Compute);
        }
        let rec = &mut self.images[job.record];
        rec.prioritization_time = Some(job.result.compute_time);
        rec.filters_run = job.result.filters_run.len() as u32;
        rec.exit = Some(job.result.exit);
        if rec.downlink_time.is_none() {
            rec.assigned = tier;
        }
        if self.config.trace {
            self.trace.push(TraceRecord::new(rec.image, rec.satellite, &job.result));
        }
    }

    fn integrate_power(&mut self, s: usize, t: f64, tx_busy: f64, compute_busy: f64) {
        let dt = self.config.dt;
        let p = self.config.power;
        let sat = &mut self.sats[s];
        let eci = sat.orbit.propagate(t);
        let generation = if in_eclipse(eci) { 0.0 } else { p.solar_w * dt };
        let mut draws = vec![(Subsystem::Adacs, p.adacs_w * dt)];
        if sat.plan.imaging(t) {
            draws.push((Subsystem::Camera, p.camera_w * dt));
        }
        if sat.in_contact {
            draws.push((Subsystem::Receiver, p.receiver_w * dt));
        }
        if tx_busy > 0.0 {
            draws.push((Subsystem::Transmitter, p.transmitter_w * tx_busy));
        }
        if compute_busy > 0.0 {
            draws.push((Subsystem::Compute, self.profile.compute_power * compute_busy));
        }
        sat.battery.step(generation, &draws, &mut sat.energy);
        sat.min_charge = sat.min_charge.min(sat.battery.charge);
        sat.max_charge = sat.max_charge.max(sat.battery.charge);
        if sat.window_energy.is_none() && t + dt >= self.config.energy_window_s - 1e-9 {
            sat.window_energy = Some(sat.energy);
        }
    }

    /// Closes the run and returns its records.
    pub fn finish(mut self) -> SimOutput {
        for sat in &self.sats {
            for q in sat.queue.iter() {
                self.images[q.seq as usize].assigned = q.tier;
            }
            if let Some(f) = sat.queue.in_flight() {
                self.images[f.item.seq as usize].assigned = f.item.tier;
            }
        }
        let satellites = self
            .sats
            .iter()
            .map(|sat| SatelliteEnergy {
                satellite: sat.id,
                total: sat.energy,
                window: sat.window_energy.unwrap_or(sat.energy),
                initial_charge: sat.initial_charge,
                final_charge: sat.battery.charge,
                min_charge: sat.min_charge,
                max_charge: sat.max_charge,
                capacity: sat.battery.capacity,
            })
            .collect();
        SimOutput {
            log: MetricsLog {
                duration: self.ticks as f64 * self.config.dt,
                images: self.images,
                contacts: self.contacts,
                satellites,
            },
            trace: self.trace,
        }
    }
}

/// Builds and runs a world from `config`.
pub fn run(config: &SimConfig) -> Result<SimOutput, SimError> {
    World::new(config.clone())?.run()
}
