//! Ground stations and the contact timeline.
//!
//! Visibility is sampled once per tick: a satellite visible at `t` is in
//! contact for `[t, t + dt)`.

use orbitprio_core::geo::GeoPoint;
use serde::{Deserialize, Serialize};

use crate::orbit::{eci_to_ecef, visible, OrbitModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub name: String,
    pub location: GeoPoint,
}

impl GroundStation {
    pub fn new(name: &str, lat: f64, lon: f64) -> Self {
        GroundStation { name: name.to_string(), location: GeoPoint::new(lat, lon) }
    }
}

/// One station's view of one satellite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pass {
    pub station: u32,
    pub start: f64,
    pub end: f64,
}

/// Interval during which a satellite sees at least one station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactWindow {
    pub start: f64,
    pub end: f64,
}

impl ContactWindow {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ContactTimeline {
    pub dt: f64,
    /// Per satellite, passes ordered by start then station.
    pub passes: Vec<Vec<Pass>>,
    /// Per satellite, merged windows in time order.
    pub windows: Vec<Vec<ContactWindow>>,
}

impl ContactTimeline {
    /// Samples visibility on `[0, until)` in steps of `dt`.
    pub fn compute(
        orbits: &[OrbitModel],
        stations: &[GroundStation],
        min_elevation_deg: f64,
        until: f64,
        dt: f64,
    ) -> Self {
        let ticks = (until / dt).ceil() as usize;
        let mut passes = Vec::with_capacity(orbits.len());
        let mut windows = Vec::with_capacity(orbits.len());
        for orbit in orbits {
            let mut open: Vec<Option<f64>> = vec![None; stations.len()];
            let mut sat_passes = Vec::new();
            let mut sat_windows: Vec<ContactWindow> = Vec::new();
            let mut window_open: Option<f64> = None;
            for k in 0..=ticks {
                let t = k as f64 * dt;
                let sampling = k < ticks;
                let ecef = if sampling { Some(eci_to_ecef(orbit.propagate(t), t)) } else { None };
                let mut any = false;
                for (s, st) in stations.iter().enumerate() {
                    let vis = ecef.is_some_and(|p| visible(p, st.location, min_elevation_deg));
                    any |= vis;
                    match (open[s], vis) {
                        (None, true) => open[s] = Some(t),
                        (Some(start), false) => {
                            sat_passes.push(Pass { station: s as u32, start, end: t });
                            open[s] = None;
                        }
                        _ => {}
                    }
                }
                match (window_open, any) {
                    (None, true) => window_open = Some(t),
                    (Some(start), false) => {
                        sat_windows.push(ContactWindow { start, end: t });
                        window_open = None;
                    }
                    _ => {}
                }
            }
            sat_passes.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.station.cmp(&b.station)));
            passes.push(sat_passes);
            windows.push(sat_windows);
        }
        ContactTimeline { dt, passes, windows }
    }

    /// Window containing `t`, if any.
    pub fn window_at(&self, satellite: usize, t: f64) -> Option<ContactWindow> {
        let w = &self.windows[satellite];
        let i = w.partition_point(|x| x.end <= t);
        w.get(i).filter(|x| x.start <= t).copied()
    }

    /// First window starting strictly after `t`.
    pub fn next_window_after(&self, satellite: usize, t: f64) -> Option<ContactWindow> {
        let w = &self.windows[satellite];
        let i = w.partition_point(|x| x.start <= t);
        w.get(i).copied()
    }

    /// Stations in view of `satellite` at `t`.
    pub fn stations_at(&self, satellite: usize, t: f64) -> Vec<u32> {
        self.passes[satellite]
            .iter()
            .take_while(|p| p.start <= t)
            .filter(|p| p.end > t)
            .map(|p| p.station)
            .collect()
    }
}
