//! Capture plans: Poisson arrivals along each ground track, kept only while
//! the ground below is lit. Plans are a pure function of the seed and the
//! orbit, so the ground segment can forecast them exactly.

use std::collections::VecDeque;

use orbitprio_core::rng;
use orbitprio_core::schedule::Capture;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::CaptureConfig;
use crate::orbit::{eci_to_ecef, ground_sun_sin_elevation, subpoint, OrbitModel};

/// Image id for the `seq`-th capture of `satellite`.
pub fn image_id(satellite: u32, seq: u64) -> u64 {
    (u64::from(satellite) << 32) | seq
}

#[derive(Debug, Clone)]
pub struct CapturePlan {
    satellite: u32,
    orbit: OrbitModel,
    config: CaptureConfig,
    rng: ChaCha8Rng,
    clock: f64,
    next_seq: u64,
    min_sun_sin: f64,
    buffer: VecDeque<Capture>,
}

impl CapturePlan {
    pub fn new(seed: u64, satellite: u32, orbit: OrbitModel, config: CaptureConfig) -> Self {
        CapturePlan {
            satellite,
            orbit,
            config,
            rng: rng::stream(seed, &[rng::label("capture"), u64::from(satellite)]),
            clock: 0.0,
            next_seq: 0,
            min_sun_sin: config.min_sun_elevation_deg.to_radians().sin(),
            buffer: VecDeque::new(),
        }
    }

    /// Whether the imager works at time `t`.
    pub fn imaging(&self, t: f64) -> bool {
        ground_sun_sin_elevation(self.orbit.propagate(t)) >= self.min_sun_sin
    }

    fn extend_to(&mut self, until: f64) {
        if self.config.rate_per_s <= 0.0 {
            self.clock = self.clock.max(until);
            return;
        }
        while self.clock < until {
            let u: f64 = self.rng.gen();
            self.clock += -(1.0 - u).ln() / self.config.rate_per_s;
            let eci = self.orbit.propagate(self.clock);
            if ground_sun_sin_elevation(eci) < self.min_sun_sin {
                continue;
            }
            let seq = self.next_seq;
            self.next_seq += 1;
            self.buffer.push_back(Capture {
                image: image_id(self.satellite, seq),
                satellite: self.satellite,
                time: self.clock,
                loc: subpoint(eci_to_ecef(eci, self.clock)),
                size: self.config.image_bytes,
            });
        }
    }

    /// Planned captures with `from <= time < until` that are still ahead.
    pub fn upcoming(&mut self, from: f64, until: f64) -> Vec<Capture> {
        self.extend_to(until);
        self.buffer.iter().filter(|c| c.time >= from && c.time < until).copied().collect()
    }

    /// Removes and returns captures taken before `until`.
    pub fn take_before(&mut self, until: f64) -> Vec<Capture> {
        self.extend_to(until);
        let mut out = Vec::new();
        while self.buffer.front().is_some_and(|c| c.time < until) {
            out.push(self.buffer.pop_front().expect("front exists"));
        }
        out
    }
}

/// Sequence number encoded in an image id.
pub fn seq_of(image: u64) -> u64 {
    image & 0xFFFF_FFFF
}
