//! Solar generation, subsystem draws and battery bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Panel output while sunlit, watts.
    pub solar_w: f64,
    pub adacs_w: f64,
    /// Drawn while the imager is active (ground below in daylight).
    pub camera_w: f64,
    /// Drawn while any station is in view.
    pub receiver_w: f64,
    /// Drawn while bytes are being sent.
    pub transmitter_w: f64,
    pub battery_capacity_j: f64,
    pub initial_charge_fraction: f64,
    /// Compute and transmission pause at or below this charge fraction.
    pub reserve_fraction: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            solar_w: 8.0,
            adacs_w: 1.0,
            camera_w: 1.5,
            receiver_w: 0.5,
            transmitter_w: 4.0,
            battery_capacity_j: 20.0 * 3600.0,
            initial_charge_fraction: 0.70,
            reserve_fraction: 0.05,
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        for (field, v) in [
            ("power.solar_w", self.solar_w),
            ("power.adacs_w", self.adacs_w),
            ("power.camera_w", self.camera_w),
            ("power.receiver_w", self.receiver_w),
            ("power.transmitter_w", self.transmitter_w),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::config(field, "must be a non-negative wattage"));
            }
        }
        if !(self.battery_capacity_j.is_finite() && self.battery_capacity_j > 0.0) {
            return Err(SimError::config("power.battery_capacity_j", "must be positive"));
        }
        for (field, v) in [
            ("power.initial_charge_fraction", self.initial_charge_fraction),
            ("power.reserve_fraction", self.reserve_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::config(field, "must be in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    Adacs,
    Camera,
    Receiver,
    Transmitter,
    Compute,
}

impl Subsystem {
    pub const ALL: [Subsystem; 5] = [
        Subsystem::Adacs,
        Subsystem::Camera,
        Subsystem::Receiver,
        Subsystem::Transmitter,
        Subsystem::Compute,
    ];
}

/// Joules per subsystem over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub generated: f64,
    pub adacs: f64,
    pub camera: f64,
    pub receiver: f64,
    pub transmitter: f64,
    pub compute: f64,
    /// Sum of every draw, accumulated separately from the per-subsystem bins.
    pub drawn: f64,
    /// Generation lost to a full battery.
    pub spilled: f64,
    /// Demand not covered by an empty battery.
    pub unmet: f64,
}

impl EnergyLedger {
    pub fn get(&self, s: Subsystem) -> f64 {
        match s {
            Subsystem::Adacs => self.adacs,
            Subsystem::Camera => self.camera,
            Subsystem::Receiver => self.receiver,
            Subsystem::Transmitter => self.transmitter,
            Subsystem::Compute => self.compute,
        }
    }

    fn bin(&mut self, s: Subsystem) -> &mut f64 {
        match s {
            Subsystem::Adacs => &mut self.adacs,
            Subsystem::Camera => &mut self.camera,
            Subsystem::Receiver => &mut self.receiver,
            Subsystem::Transmitter => &mut self.transmitter,
            Subsystem::Compute => &mut self.compute,
        }
    }

    pub fn subsystem_total(&self) -> f64 {
        Subsystem::ALL.iter().map(|&s| self.get(s)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub charge: f64,
    pub capacity: f64,
}

impl Battery {
    pub fn new(config: &PowerConfig) -> Self {
        Battery {
            charge: config.initial_charge_fraction * config.battery_capacity_j,
            capacity: config.battery_capacity_j,
        }
    }

    pub fn fraction(&self) -> f64 {
        self.charge / self.capacity
    }

    /// Integrates one step: `generation` joules in, `draws` joules out.
    pub fn step(&mut self, generation: f64, draws: &[(Subsystem, f64)], ledger: &mut EnergyLedger) {
        let mut total = 0.0;
        for &(s, j) in draws {
            *ledger.bin(s) += j;
            total += j;
        }
        ledger.drawn += total;
        ledger.generated += generation;
        let next = self.charge + generation - total;
        if next > self.capacity {
            ledger.spilled += next - self.capacity;
            self.charge = self.capacity;
        } else if next < 0.0 {
            ledger.unmet += -next;
            self.charge = 0.0;
        } else {
            self.charge = next;
        }
    }
}
