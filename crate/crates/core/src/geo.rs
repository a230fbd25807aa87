//! Areas of interest on a lat/lon grid and a spatial index over them.
//!
//! Regions are closed: a point on a boundary is inside. Boxes whose
//! `lon_min` exceeds `lon_max` wrap across the antimeridian. Points are
//! assumed already normalized to `[-180, 180]` longitude; the meridians
//! -180 and 180 are treated as the same line.

use rstar::primitives::{GeomWithData, Rectangle};
use rstar::RTree;
use serde::{Deserialize, Serialize};

use crate::error::GeoError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    /// Same point with its longitude wrapped to `[-180, 180)`.
    pub fn normalized(self) -> Self {
        let lon = (self.lon + 180.0).rem_euclid(360.0) - 180.0;
        GeoPoint { lat: self.lat, lon }
    }

    fn lon_aliases(self) -> impl Iterator<Item = f64> {
        let alias = if self.lon == 180.0 {
            Some(-180.0)
        } else if self.lon == -180.0 {
            Some(180.0)
        } else {
            None
        };
        std::iter::once(self.lon).chain(alias)
    }
}

/// A closed lat/lon box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

/// A convex polygon given by `(lat, lon)` vertices in either winding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Box(GeoBox),
    Polygon(ConvexPolygon),
}

fn check_lat(lat: f64) -> Result<(), GeoError> {
    if (-90.0..=90.0).contains(&lat) {
        Ok(())
    } else {
        Err(GeoError::Latitude(lat))
    }
}

fn check_lon(lon: f64) -> Result<(), GeoError> {
    if (-180.0..=180.0).contains(&lon) {
        Ok(())
    } else {
        Err(GeoError::Longitude(lon))
    }
}

impl GeoBox {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self, GeoError> {
        let b = GeoBox { lat_min, lat_max, lon_min, lon_max };
        b.validate()?;
        Ok(b)
    }

    /// Box of half-widths `dlat`, `dlon` degrees around `center`, wrapping
    /// in longitude and clipped in latitude.
    pub fn around(center: GeoPoint, dlat: f64, dlon: f64) -> Self {
        let wrap = |x: f64| (x + 180.0).rem_euclid(360.0) - 180.0;
        let (lon_min, lon_max) = if dlon >= 180.0 {
            (-180.0, 180.0)
        } else {
            (wrap(center.lon - dlon), wrap(center.lon + dlon))
        };
        GeoBox {
            lat_min: (center.lat - dlat).max(-90.0),
            lat_max: (center.lat + dlat).min(90.0),
            lon_min,
            lon_max,
        }
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        check_lat(self.lat_min)?;
        check_lat(self.lat_max)?;
        check_lon(self.lon_min)?;
        check_lon(self.lon_max)?;
        if self.lat_min > self.lat_max {
            return Err(GeoError::InvertedBox(self.lat_min, self.lat_max));
        }
        Ok(())
    }

    pub fn wraps(&self) -> bool {
        self.lon_min > self.lon_max
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        if p.lat < self.lat_min || p.lat > self.lat_max {
            return false;
        }
        p.lon_aliases().any(|lon| {
            if self.wraps() {
                lon >= self.lon_min || lon <= self.lon_max
            } else {
                lon >= self.lon_min && lon <= self.lon_max
            }
        })
    }

    /// Non-wrapping `[lat_min, lon_min] .. [lat_max, lon_max]` envelopes.
    fn envelopes(&self) -> Vec<([f64; 2], [f64; 2])> {
        if self.wraps() {
            vec![
                ([self.lat_min, self.lon_min], [self.lat_max, 180.0]),
                ([self.lat_min, -180.0], [self.lat_max, self.lon_max]),
            ]
        } else {
            vec![([self.lat_min, self.lon_min], [self.lat_max, self.lon_max])]
        }
    }
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<GeoPoint>) -> Result<Self, GeoError> {
        let p = ConvexPolygon { vertices };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        let v = &self.vertices;
        if v.len() < 3 {
            return Err(GeoError::TooFewVertices(v.len()));
        }
        for p in v {
            check_lat(p.lat)?;
            check_lon(p.lon)?;
        }
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.lon), hi.max(p.lon)));
        if hi - lo > 180.0 {
            return Err(GeoError::PolygonTooWide);
        }
        let mut sign = 0.0f64;
        for i in 0..v.len() {
            let c = cross(v[i], v[(i + 1) % v.len()], v[(i + 2) % v.len()]);
            if c != 0.0 {
                if sign != 0.0 && c.signum() != sign {
                    return Err(GeoError::NotConvex);
                }
                sign = c.signum();
            }
        }
        if sign == 0.0 {
            // all vertices collinear: no interior
            return Err(GeoError::NotConvex);
        }
        Ok(())
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lon_aliases().any(|lon| {
            let q = GeoPoint { lat: p.lat, lon };
            let n = self.vertices.len();
            let (mut pos, mut neg) = (false, false);
            for i in 0..n {
                let c = cross(self.vertices[i], self.vertices[(i + 1) % n], q);
                pos |= c > 0.0;
                neg |= c < 0.0;
            }
            !(pos && neg)
        })
    }

    fn envelope(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            lo = [lo[0].min(p.lat), lo[1].min(p.lon)];
            hi = [hi[0].max(p.lat), hi[1].max(p.lon)];
        }
        (lo, hi)
    }
}

/// z component of (b - a) x (c - b) in the (lon, lat) plane.
fn cross(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> f64 {
    (b.lon - a.lon) * (c.lat - b.lat) - (b.lat - a.lat) * (c.lon - b.lon)
}

impl Region {
    pub fn validate(&self) -> Result<(), GeoError> {
        match self {
            Region::Box(b) => b.validate(),
            Region::Polygon(p) => p.validate(),
        }
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        match self {
            Region::Box(b) => b.contains(p),
            Region::Polygon(poly) => poly.contains(p),
        }
    }

    fn envelopes(&self) -> Vec<([f64; 2], [f64; 2])> {
        match self {
            Region::Box(b) => b.envelopes(),
            Region::Polygon(p) => vec![p.envelope()],
        }
    }
}

type Entry = GeomWithData<Rectangle<[f64; 2]>, (usize, usize)>;

/// R-tree over the envelopes of a list of region sets. A lookup returns the
/// positions of the sets containing a point, ascending and without repeats.
#[derive(Debug, Clone)]
pub struct RegionIndex {
    tree: RTree<Entry>,
    regions: Vec<Vec<Region>>,
}

impl RegionIndex {
    pub fn new(regions: Vec<Vec<Region>>) -> Result<Self, GeoError> {
        let mut entries = Vec::new();
        for (owner, set) in regions.iter().enumerate() {
            for (k, r) in set.iter().enumerate() {
                r.validate()?;
                for (lo, hi) in r.envelopes() {
                    entries.push(GeomWithData::new(Rectangle::from_corners(lo, hi), (owner, k)));
                }
            }
        }
        Ok(RegionIndex { tree: RTree::bulk_load(entries), regions })
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn lookup(&self, p: GeoPoint) -> Vec<usize> {
        let mut out = Vec::new();
        for lon in p.lon_aliases() {
            for e in self.tree.locate_all_at_point(&[p.lat, lon]) {
                let (owner, k) = e.data;
                if self.regions[owner][k].contains(p) {
                    out.push(owner);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
