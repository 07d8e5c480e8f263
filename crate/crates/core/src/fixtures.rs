//! Deterministic synthetic networks for tests, benches and demos.

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::exposure::{synth_field, Plume, PollutionField, DEFAULT_BACKGROUND};
use crate::geo::{haversine_m, BoundingBox, GeoPoint};
use crate::roadnet::{Edge, NodeRecord, RoadNetwork};

/// Central Denver, roughly where the bundled grid starts.
pub const DENVER_ORIGIN: GeoPoint = GeoPoint {
    lat: 39.7200,
    lon: -105.0100,
};

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    /// South-west corner.
    pub origin: GeoPoint,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 20,
            cols: 20,
            spacing_m: 400.0,
            origin: DENVER_ORIGIN,
            seed: 70,
        }
    }
}

/// Node id for grid cell `(row, col)`.
pub fn grid_node_id(row: usize, col: usize) -> String {
    format!("n{row:02}_{col:02}")
}

/// A bidirectional street grid. Every fifth row and column is an arterial
/// (50 km/h); the rest are local streets (30 km/h). Each edge gets a small
/// random speed jitter and its own scenario multipliers.
pub fn grid_network(spec: &GridSpec) -> RoadNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut nodes = Vec::with_capacity(spec.rows * spec.cols);
    let mut points = vec![vec![spec.origin; spec.cols]; spec.rows];
    for (r, row) in points.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            let p = spec.origin.offset(c as f64 * spec.spacing_m, r as f64 * spec.spacing_m);
            *slot = p;
            nodes.push(NodeRecord {
                id: grid_node_id(r, c),
                lat: p.lat,
                lon: p.lon,
            });
        }
    }

    let mut edges = Vec::new();
    let mut add = |a: (usize, usize), b: (usize, usize), arterial: bool, rng: &mut ChaCha8Rng| {
        let length_m = haversine_m(&points[a.0][a.1], &points[b.0][b.1]);
        for (from, to) in [(a, b), (b, a)] {
            let kmh: f64 = if arterial { 50.0 } else { 30.0 };
            let speed = kmh / 3.6 * rng.random_range(0.85..1.15);
            let o = rng.random_range(0.80..0.95);
            let best = rng.random_range(1.0..1.2);
            let p = best + rng.random_range(0.15..0.6);
            edges.push(Edge {
                id: format!("e{:04}", edges.len()),
                from: grid_node_id(from.0, from.1),
                to: grid_node_id(to.0, to.1),
                length_m,
                free_flow_s: length_m / speed,
                mult: [o, best, p],
            });
        }
    };
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            if c + 1 < spec.cols {
                add((r, c), (r, c + 1), r % 5 == 0, &mut rng);
            }
            if r + 1 < spec.rows {
                add((r, c), (r + 1, c), c % 5 == 0, &mut rng);
            }
        }
    }
    RoadNetwork::new(nodes, edges).expect("grid generator emits a valid network")
}

/// A random directed graph of `n` nodes scattered within ~2 km of the
/// origin; each ordered pair is connected with probability `density`.
pub fn random_network(n: usize, density: f64, seed: u64) -> RoadNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<GeoPoint> = (0..n)
        .map(|_| DENVER_ORIGIN.offset(rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0)))
        .collect();
    let nodes = points
        .iter()
        .enumerate()
        .map(|(i, p)| NodeRecord {
            id: format!("v{i}"),
            lat: p.lat,
            lon: p.lon,
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(density) {
                let length_m = haversine_m(&points[i], &points[j]).max(1.0);
                // integer seconds make equal-time ties common
                let free_flow_s = f64::from(rng.random_range(1..=20u32)) * 10.0;
                let o = rng.random_range(0.7..1.0);
                let b = rng.random_range(1.0..1.3);
                let p = b + rng.random_range(0.0..0.7);
                edges.push(Edge {
                    id: format!("e{:03}", edges.len()),
                    from: format!("v{i}"),
                    to: format!("v{j}"),
                    length_m,
                    free_flow_s,
                    mult: [o, b, p],
                });
            }
        }
    }
    RoadNetwork::new(nodes, edges).expect("random generator emits a valid network")
}

/// Center of the synthetic construction zone inside the default grid.
pub fn construction_center() -> GeoPoint {
    DENVER_ORIGIN.offset(3800.0, 3400.0)
}

/// A point on the synthetic highway along the grid's northern arterial.
pub fn highway_point() -> GeoPoint {
    DENVER_ORIGIN.offset(4000.0, 6000.0)
}

/// PM2.5 field over the default grid: a plume along the highway and a
/// weaker one at the construction site.
pub fn demo_field() -> PollutionField {
    let spec = GridSpec::default();
    let far = spec.origin.offset(
        (spec.cols - 1) as f64 * spec.spacing_m,
        (spec.rows - 1) as f64 * spec.spacing_m,
    );
    let bbox = BoundingBox::from_points([&spec.origin, &far]).unwrap().expanded(1000.0);
    let highway = highway_point();
    let mut plumes: Vec<Plume> = (-3..=3)
        .map(|k| Plume {
            center: highway.offset(f64::from(k) * 1200.0, 0.0),
            peak: 18.0,
            sigma_m: 700.0,
        })
        .collect();
    plumes.push(Plume {
        center: construction_center(),
        peak: 12.0,
        sigma_m: 500.0,
    });
    synth_field(&plumes, &bbox, 40, 40, DEFAULT_BACKGROUND).expect("demo field parameters are valid")
}

/// Contents of the four provider files for the demo area, stamped `as_of`.
pub fn provider_fixtures(as_of: DateTime<Utc>) -> Vec<(&'static str, serde_json::Value)> {
    let site = construction_center();
    let ring: Vec<[f64; 2]> = [(-300.0, -150.0), (300.0, -150.0), (300.0, 150.0), (-300.0, 150.0)]
        .iter()
        .map(|&(e, n)| {
            let p = site.offset(e, n);
            [p.lat, p.lon]
        })
        .collect();
    let on_grid = DENVER_ORIGIN.offset(2400.0, 1600.0);
    let far_away = DENVER_ORIGIN.offset(40_000.0, 30_000.0);
    let polygon: Vec<serde_json::Value> = ring.iter().map(|[lat, lon]| json!({"lat": lat, "lon": lon})).collect();
    vec![
        (
            "weather.json",
            json!({
                "as_of": as_of,
                "temperature_c": 4.5,
                "uv_index": 3.0,
                "wind_speed_ms": 5.2,
                "wind_direction_deg": 290.0,
                "visibility_m": 16000.0
            }),
        ),
        (
            "incidents.json",
            json!({
                "as_of": as_of,
                "incidents": [
                    {"id": "inc-1", "location": on_grid, "kind": "accident",
                     "description": "two vehicles blocking the right lane", "reported_at": as_of - Duration::minutes(20)},
                    {"id": "inc-2", "location": far_away, "kind": "stalled vehicle",
                     "description": "shoulder", "reported_at": as_of - Duration::minutes(45)}
                ]
            }),
        ),
        (
            "construction.json",
            json!({
                "as_of": as_of,
                "events": [
                    {"id": "cw-1", "location": site, "polygon": polygon,
                     "description": "bridge deck replacement, lanes reduced",
                     "start": as_of - Duration::days(30), "end": as_of + Duration::days(200)}
                ]
            }),
        ),
        ("conditions.json", json!({"as_of": as_of, "condition": "dry"})),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_edge_count() {
        let net = grid_network(&GridSpec::default());
        assert_eq!(net.node_count(), 400);
        // 2 directions x (20 rows x 19 + 20 cols x 19)
        assert_eq!(net.edge_count(), 1520);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = grid_network(&GridSpec {
            rows: 4,
            cols: 4,
            ..Default::default()
        });
        let b = grid_network(&GridSpec {
            rows: 4,
            cols: 4,
            ..Default::default()
        });
        assert_eq!(a.edges(), b.edges());
        let a = random_network(8, 0.3, 5);
        let b = random_network(8, 0.3, 5);
        assert_eq!(a.edges(), b.edges());
    }
}
