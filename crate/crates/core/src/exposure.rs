//! PM2.5 fields and lowest-average-exposure route selection.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ExposureError, NetworkError};
use crate::geo::{haversine_m, BoundingBox, GeoPoint};
use crate::roadnet::{Route, TrafficScenario};

/// Samples taken along each route when scoring exposure.
pub const DEFAULT_SAMPLES: usize = 5;

/// Concentration added everywhere by [`synth_field`].
pub const DEFAULT_BACKGROUND: f64 = 5.0;

/// Regular lat/lon grid of PM2.5 values (µg/m³). `values[r][c]` is the value
/// at `origin + (r·cell_deg north, c·cell_deg east)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PollutionField {
    origin: GeoPoint,
    cell_deg: f64,
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    origin: [f64; 2],
    cell_deg: f64,
    rows: usize,
    cols: usize,
    values: Vec<Vec<f64>>,
}

impl PollutionField {
    pub fn new(origin: GeoPoint, cell_deg: f64, values: Vec<Vec<f64>>) -> Result<Self, ExposureError> {
        let bad = |m: &str| ExposureError::InvalidField(m.to_string());
        origin.validate().map_err(|e| bad(&e.to_string()))?;
        if !(cell_deg.is_finite() && cell_deg > 0.0) {
            return Err(bad("cell_deg must be positive"));
        }
        let cols = values.first().map_or(0, Vec::len);
        if values.is_empty() || cols == 0 {
            return Err(bad("grid is empty"));
        }
        if values.iter().any(|row| row.len() != cols) {
            return Err(bad("rows have different lengths"));
        }
        if values.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(bad("values must be finite and non-negative"));
        }
        Ok(Self {
            origin,
            cell_deg,
            values,
        })
    }

    pub fn uniform(bbox: &BoundingBox, rows: usize, cols: usize, value: f64) -> Result<Self, ExposureError> {
        let (origin, cell) = grid_frame(bbox, rows, cols);
        Self::new(origin, cell, vec![vec![value; cols]; rows])
    }

    pub fn from_json_str(s: &str) -> Result<Self, NetworkError> {
        let f: FieldFile = serde_json::from_str(s).map_err(NetworkError::from_json)?;
        let invalid = |message: String| NetworkError::Parse {
            line: 0,
            column: 0,
            message,
        };
        if f.values.len() != f.rows || f.values.iter().any(|r| r.len() != f.cols) {
            return Err(invalid(format!("values do not match {}x{}", f.rows, f.cols)));
        }
        Self::new(
            GeoPoint {
                lat: f.origin[0],
                lon: f.origin[1],
            },
            f.cell_deg,
            f.values,
        )
        .map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FieldFile {
            origin: [self.origin.lat, self.origin.lon],
            cell_deg: self.cell_deg,
            rows: self.rows(),
            cols: self.cols(),
            values: self.values.clone(),
        })
        .expect("field serializes")
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn cell_deg(&self) -> f64 {
        self.cell_deg
    }

    /// Location of grid node `(row, col)`.
    pub fn node_point(&self, row: usize, col: usize) -> GeoPoint {
        GeoPoint {
            lat: self.origin.lat + row as f64 * self.cell_deg,
            lon: self.origin.lon + col as f64 * self.cell_deg,
        }
    }

    /// Bilinear interpolation; points outside the grid are clamped to its
    /// edge.
    pub fn value_at(&self, p: &GeoPoint) -> f64 {
        let fr = ((p.lat - self.origin.lat) / self.cell_deg).clamp(0.0, (self.rows() - 1) as f64);
        let fc = ((p.lon - self.origin.lon) / self.cell_deg).clamp(0.0, (self.cols() - 1) as f64);
        let (r0, c0) = (fr.floor() as usize, fc.floor() as usize);
        let (r1, c1) = ((r0 + 1).min(self.rows() - 1), (c0 + 1).min(self.cols() - 1));
        let (tr, tc) = (fr - r0 as f64, fc - c0 as f64);
        let v = &self.values;
        let south = v[r0][c0] + (v[r0][c1] - v[r0][c0]) * tc;
        let north = v[r1][c0] + (v[r1][c1] - v[r1][c0]) * tc;
        south + (north - south) * tr
    }

    /// Resamples the field at cell centers of a `rows`×`cols` grid over
    /// `bbox`. Row 0 is the southern edge.
    pub fn resample(&self, bbox: &BoundingBox, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        let dlat = (bbox.north - bbox.south) / rows as f64;
        let dlon = (bbox.east - bbox.west) / cols as f64;
        (0..rows)
            .map(|r| {
                (0..cols)
                    .map(|c| {
                        self.value_at(&GeoPoint {
                            lat: bbox.south + (r as f64 + 0.5) * dlat,
                            lon: bbox.west + (c as f64 + 0.5) * dlon,
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

fn grid_frame(bbox: &BoundingBox, rows: usize, cols: usize) -> (GeoPoint, f64) {
    let lat_step = (bbox.north - bbox.south) / (rows.max(2) - 1) as f64;
    let lon_step = (bbox.east - bbox.west) / (cols.max(2) - 1) as f64;
    let cell = lat_step.max(lon_step).max(1e-9);
    (
        GeoPoint {
            lat: bbox.south,
            lon: bbox.west,
        },
        cell,
    )
}

/// A Gaussian PM2.5 source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plume {
    pub center: GeoPoint,
    pub peak: f64,
    pub sigma_m: f64,
}

/// Field over `bbox` with `rows`×`cols` nodes valued
/// `background + Σ peak·exp(−d²/2σ²)`, `d` being the haversine distance to
/// each plume center. The square cell size is the larger of the two axis
/// spacings, so the grid always covers the box.
pub fn synth_field(
    plumes: &[Plume],
    bbox: &BoundingBox,
    rows: usize,
    cols: usize,
    background: f64,
) -> Result<PollutionField, ExposureError> {
    if rows < 2 || cols < 2 {
        return Err(ExposureError::InvalidField("resolution must be at least 2x2".into()));
    }
    if plumes.iter().any(|p| !(p.peak >= 0.0 && p.sigma_m > 0.0)) {
        return Err(ExposureError::InvalidField(
            "plume peak must be >= 0 and sigma > 0".into(),
        ));
    }
    let (origin, cell) = grid_frame(bbox, rows, cols);
    let values = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let p = GeoPoint {
                        lat: origin.lat + r as f64 * cell,
                        lon: origin.lon + c as f64 * cell,
                    };
                    background
                        + plumes
                            .iter()
                            .map(|pl| {
                                let d = haversine_m(&p, &pl.center);
                                pl.peak * (-(d * d) / (2.0 * pl.sigma_m * pl.sigma_m)).exp()
                            })
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    PollutionField::new(origin, cell, values)
}

/// Exposure score of one route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureSummary {
    pub edge_ids: Vec<String>,
    pub sample_points: Vec<GeoPoint>,
    pub sample_values: Vec<f64>,
    pub mean: f64,
}

/// `k` points at equal arc-length fractions `0, 1/(k−1), …, 1` along the
/// route geometry. A zero-length route yields `k` copies of its point.
pub fn sample_points(route: &Route, k: usize) -> Result<Vec<GeoPoint>, ExposureError> {
    if k < 2 {
        return Err(ExposureError::TooFewSamples(k));
    }
    let geom = &route.geometry;
    let first = *geom.first().ok_or(ExposureError::EmptyRoute)?;
    let seg: Vec<f64> = geom.windows(2).map(|w| haversine_m(&w[0], &w[1])).collect();
    let total: f64 = seg.iter().sum();
    if total == 0.0 {
        return Ok(vec![first; k]);
    }

    let mut out = Vec::with_capacity(k);
    let mut i = 0;
    let mut walked = 0.0;
    for j in 0..k {
        let target = total * j as f64 / (k - 1) as f64;
        while i < seg.len() - 1 && walked + seg[i] < target {
            walked += seg[i];
            i += 1;
        }
        if j == k - 1 {
            out.push(*geom.last().unwrap());
            continue;
        }
        let t = if seg[i] > 0.0 {
            ((target - walked) / seg[i]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(geom[i].lerp(&geom[i + 1], t));
    }
    Ok(out)
}

pub fn route_exposure(route: &Route, field: &PollutionField, k: usize) -> Result<ExposureSummary, ExposureError> {
    let sample_points = sample_points(route, k)?;
    let sample_values: Vec<f64> = sample_points.iter().map(|p| field.value_at(p)).collect();
    let mean = sample_values.iter().sum::<f64>() / sample_values.len() as f64;
    Ok(ExposureSummary {
        edge_ids: route.edge_ids.clone(),
        sample_points,
        sample_values,
        mean,
    })
}

/// Five-sample mean PM2.5 along a route.
pub fn route_avg_pm25(route: &Route, field: &PollutionField) -> Result<ExposureSummary, ExposureError> {
    route_exposure(route, field, DEFAULT_SAMPLES)
}

/// The candidate with the lowest mean PM2.5. Ties go to the faster
/// best-scenario route, then to the smaller edge-id sequence, then to the
/// earlier candidate.
pub fn safest_route(candidates: &[Route], field: &PollutionField) -> Result<(Route, ExposureSummary), ExposureError> {
    let scored = candidates
        .iter()
        .map(|r| route_avg_pm25(r, field).map(|s| (r, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let cmp = |a: &(&Route, ExposureSummary), b: &(&Route, ExposureSummary)| -> Ordering {
        a.1.mean
            .total_cmp(&b.1.mean)
            .then_with(|| {
                a.0.duration(TrafficScenario::Best)
                    .total_cmp(&b.0.duration(TrafficScenario::Best))
            })
            .then_with(|| a.0.edge_ids.cmp(&b.0.edge_ids))
    };
    let mut best: Option<(&Route, ExposureSummary)> = None;
    for item in scored {
        if best.as_ref().is_none_or(|b| cmp(&item, b) == Ordering::Less) {
            best = Some(item);
        }
    }
    let (route, summary) = best.ok_or(ExposureError::NoCandidates)?;
    Ok((route.clone(), summary))
}
