//! Circular Keplerian orbits, Earth rotation and sunlight geometry.
//!
//! Positions are in kilometres. The inertial frame has its z axis through
//! the north pole and coincides with the Earth-fixed frame at `t = 0`. The
//! sun sits at a fixed inertial direction over the equinox equator, so a
//! run has no seasons. At `t = 0` it is local noon at
//! [`SUBSOLAR_LON_AT_EPOCH_DEG`].

use orbitprio_core::geo::GeoPoint;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const MU_KM3_S2: f64 = 398_600.4418;
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;
/// Lowest and highest altitude accepted as low Earth orbit.
pub const LEO_RANGE_KM: (f64, f64) = (160.0, 2000.0);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn unit(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self.scale(1.0 / n)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitModel {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    /// Argument of latitude at `epoch`.
    pub phase_deg: f64,
    pub epoch: f64,
}

impl OrbitModel {
    pub fn new(
        altitude_km: f64,
        inclination_deg: f64,
        raan_deg: f64,
        phase_deg: f64,
        epoch: f64,
    ) -> Result<Self, SimError> {
        let o = OrbitModel { altitude_km, inclination_deg, raan_deg, phase_deg, epoch };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let (lo, hi) = LEO_RANGE_KM;
        if !(self.altitude_km > lo && self.altitude_km < hi) {
            return Err(SimError::config(
                "altitude_km",
                format!("{} is outside ({lo}, {hi})", self.altitude_km),
            ));
        }
        for (field, v) in [
            ("inclination_deg", self.inclination_deg),
            ("raan_deg", self.raan_deg),
            ("phase_deg", self.phase_deg),
            ("epoch", self.epoch),
        ] {
            if !v.is_finite() {
                return Err(SimError::config(field, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn semi_major_axis(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU * (self.semi_major_axis().powi(3) / MU_KM3_S2).sqrt()
    }

    pub fn mean_motion(&self) -> f64 {
        std::f64::consts::TAU / self.period()
    }

    /// Inertial position at time `t`.
    pub fn propagate(&self, t: f64) -> Vec3 {
        let a = self.semi_major_axis();
        let u = self.phase_deg.to_radians() + self.mean_motion() * (t - self.epoch);
        let (su, cu) = u.sin_cos();
        let (sr, cr) = self.raan_deg.to_radians().sin_cos();
        let (si, ci) = self.inclination_deg.to_radians().sin_cos();
        Vec3::new(a * (cr * cu - sr * su * ci), a * (sr * cu + cr * su * ci), a * su * si)
    }
}

/// Rotates an inertial vector into the Earth-fixed frame at time `t`.
pub fn eci_to_ecef(p: Vec3, t: f64) -> Vec3 {
    let (s, c) = (EARTH_ROTATION_RAD_S * t).sin_cos();
    Vec3::new(c * p.x + s * p.y, -s * p.x + c * p.y, p.z)
}

/// Earth-fixed unit vector of a surface point.
pub fn surface_unit(p: GeoPoint) -> Vec3 {
    let (sl, cl) = p.lat.to_radians().sin_cos();
    let (so, co) = p.lon.to_radians().sin_cos();
    Vec3::new(cl * co, cl * so, sl)
}

/// Geocentric latitude and longitude below an Earth-fixed position.
pub fn subpoint(ecef: Vec3) -> GeoPoint {
    let r = ecef.norm();
    GeoPoint::new((ecef.z / r).asin().to_degrees(), ecef.y.atan2(ecef.x).to_degrees())
}

/// Sine of the elevation of `sat_ecef` above the local horizon of `station`.
pub fn sin_elevation(sat_ecef: Vec3, station: GeoPoint) -> f64 {
    let up = surface_unit(station);
    let d = sat_ecef.sub(up.scale(EARTH_RADIUS_KM));
    let n = d.norm();
    if n == 0.0 {
        return 1.0;
    }
    d.dot(up) / n
}

pub fn elevation_deg(sat_ecef: Vec3, station: GeoPoint) -> f64 {
    sin_elevation(sat_ecef, station).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Whether the satellite is at or above `min_elevation_deg`.
pub fn visible(sat_ecef: Vec3, station: GeoPoint, min_elevation_deg: f64) -> bool {
    sin_elevation(sat_ecef, station) >= min_elevation_deg.to_radians().sin() - 1e-12
}

/// Longitude under the sun at `t = 0`.
pub const SUBSOLAR_LON_AT_EPOCH_DEG: f64 = 110.0;

/// Inertial unit vector towards the sun.
pub fn sun_direction() -> Vec3 {
    let (s, c) = SUBSOLAR_LON_AT_EPOCH_DEG.to_radians().sin_cos();
    Vec3::new(c, s, 0.0)
}

/// Cylindrical Earth shadow.
pub fn in_eclipse(sat_eci: Vec3) -> bool {
    let sun = sun_direction();
    let along = sat_eci.dot(sun);
    if along >= 0.0 {
        return false;
    }
    let perp = sat_eci.sub(sun.scale(along)).norm();
    perp < EARTH_RADIUS_KM
}

/// Sine of the sun's elevation at the ground point below `sat_eci`.
pub fn ground_sun_sin_elevation(sat_eci: Vec3) -> f64 {
    sat_eci.unit().dot(sun_direction())
}
