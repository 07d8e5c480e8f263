//! Spherical geometry helpers: points, great-circle distances, local offsets
//! and the planar segment/polygon predicates used for closure checks.
//!
//! Planar predicates treat `(lon, lat)` as Cartesian coordinates. That is
//! accurate enough at city scale, which is the only scale this crate targets.

use serde::{Deserialize, Serialize};

use crate::error::GeoError;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Builds a validated point.
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        let p = Self { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !self.lat.is_finite() || !self.lon.is_finite() {
            return Err(GeoError::NonFinite(self.lat, self.lon));
        }
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(GeoError::OutOfRange(self.lat, self.lon));
        }
        Ok(())
    }

    /// Moves the point by `east_m`/`north_m` meters using a local
    /// equirectangular approximation.
    pub fn offset(&self, east_m: f64, north_m: f64) -> GeoPoint {
        let dlat = (north_m / EARTH_RADIUS_M).to_degrees();
        let dlon = (east_m / (EARTH_RADIUS_M * self.lat.to_radians().cos())).to_degrees();
        GeoPoint {
            lat: self.lat + dlat,
            lon: self.lon + dlon,
        }
    }

    /// Linear interpolation in coordinate space.
    pub fn lerp(&self, other: &GeoPoint, t: f64) -> GeoPoint {
        GeoPoint {
            lat: self.lat + (other.lat - self.lat) * t,
            lon: self.lon + (other.lon - self.lon) * t,
        }
    }
}

impl std::fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6},{:.6}", self.lat, self.lon)
    }
}

impl std::str::FromStr for GeoPoint {
    type Err = GeoError;

    /// Parses `"lat,lon"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lat, lon) = s.split_once(',').ok_or_else(|| GeoError::Parse(s.to_string()))?;
        let lat = lat.trim().parse().map_err(|_| GeoError::Parse(s.to_string()))?;
        let lon = lon.trim().parse().map_err(|_| GeoError::Parse(s.to_string()))?;
        GeoPoint::new(lat, lon)
    }
}

/// Great-circle distance in meters (haversine formula).
pub fn haversine_m(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Geographic (great-circle) midpoint of two points.
pub fn midpoint(a: &GeoPoint, b: &GeoPoint) -> GeoPoint {
    if a == b {
        return *a;
    }
    let (lat1, lon1) = (a.lat.to_radians(), a.lon.to_radians());
    let lat2 = b.lat.to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let bx = lat2.cos() * dlon.cos();
    let by = lat2.cos() * dlon.sin();
    let lat = (lat1.sin() + lat2.sin()).atan2(((lat1.cos() + bx).powi(2) + by * by).sqrt());
    let lon = lon1 + by.atan2(lat1.cos() + bx);
    GeoPoint {
        lat: lat.to_degrees(),
        lon: (lon.to_degrees() + 540.0) % 360.0 - 180.0,
    }
}

/// Total haversine length of a polyline.
pub fn polyline_length_m(points: &[GeoPoint]) -> f64 {
    points.windows(2).map(|w| haversine_m(&w[0], &w[1])).sum()
}

/// Axis-aligned box in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl BoundingBox {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut bb = BoundingBox {
            south: first.lat,
            west: first.lon,
            north: first.lat,
            east: first.lon,
        };
        for p in it {
            bb.south = bb.south.min(p.lat);
            bb.north = bb.north.max(p.lat);
            bb.west = bb.west.min(p.lon);
            bb.east = bb.east.max(p.lon);
        }
        Some(bb)
    }

    /// Grows the box by `meters` on every side. Longitude padding uses the
    /// latitude of the box center.
    pub fn expanded(&self, meters: f64) -> BoundingBox {
        let dlat = (meters / EARTH_RADIUS_M).to_degrees();
        let mid_lat = ((self.south + self.north) / 2.0).to_radians();
        let dlon = (meters / (EARTH_RADIUS_M * mid_lat.cos())).to_degrees();
        BoundingBox {
            south: self.south - dlat,
            west: self.west - dlon,
            north: self.north + dlat,
            east: self.east + dlon,
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.lat >= self.south && p.lat <= self.north && p.lon >= self.west && p.lon <= self.east
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.south <= other.north && other.south <= self.north && self.west <= other.east && other.west <= self.east
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: (self.south + self.north) / 2.0,
            lon: (self.west + self.east) / 2.0,
        }
    }
}

fn orient(a: &GeoPoint, b: &GeoPoint, c: &GeoPoint) -> f64 {
    (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon)
}

fn on_segment(a: &GeoPoint, b: &GeoPoint, p: &GeoPoint) -> bool {
    p.lon >= a.lon.min(b.lon) && p.lon <= a.lon.max(b.lon) && p.lat >= a.lat.min(b.lat) && p.lat <= a.lat.max(b.lat)
}

/// Closed segment intersection (touching counts).
pub fn segments_intersect(p1: &GeoPoint, p2: &GeoPoint, q1: &GeoPoint, q2: &GeoPoint) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Even-odd point-in-polygon test. `ring` is open (last vertex not repeated).
pub fn point_in_polygon(p: &GeoPoint, ring: &[GeoPoint]) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (&ring[i], &ring[j]);
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if p.lon < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// True when the segment touches the polygon boundary or lies inside it.
pub fn segment_intersects_polygon(a: &GeoPoint, b: &GeoPoint, ring: &[GeoPoint]) -> bool {
    if point_in_polygon(a, ring) || point_in_polygon(b, ring) {
        return true;
    }
    let n = ring.len();
    (0..n).any(|i| segments_intersect(a, b, &ring[i], &ring[(i + 1) % n]))
}
