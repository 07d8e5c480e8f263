//! Closure-avoiding routing on top of plain fastest-path queries.
//!
//! The heuristic places candidate waypoints on an Archimedean spiral around
//! the origin, asks for the fastest route through each, and keeps the fastest
//! candidate that stays clear of every active closure. [`constrained_oracle`]
//! solves the same problem exactly by deleting blocked edges and is used to
//! measure the heuristic.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::RouteError;
use crate::geo::{self, haversine_m, GeoPoint};
use crate::roadnet::{
    fastest_route, route_crosses_closures, route_via_waypoint, RoadClosure, RoadNetwork, Route, TrafficScenario,
};

/// Lower bound for the default spiral radius.
pub const MIN_SPIRAL_RADIUS_M: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TravelMedium {
    Driving,
    Bus,
    Walking,
    Biking,
}

impl std::str::FromStr for TravelMedium {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "driving" | "car" => Ok(Self::Driving),
            "bus" => Ok(Self::Bus),
            "walking" => Ok(Self::Walking),
            "biking" | "bike" => Ok(Self::Biking),
            other => Err(format!("unknown travel medium `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralConfig {
    pub n_points: usize,
    pub turns: u32,
    /// Outer radius in meters. `None` means `max(1 km, half the trip's
    /// straight-line length)`.
    pub max_radius_m: Option<f64>,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        Self {
            n_points: 100,
            turns: 3,
            max_radius_m: None,
        }
    }
}

impl SpiralConfig {
    pub fn radius_for(&self, src: &GeoPoint, dst: &GeoPoint) -> f64 {
        self.max_radius_m
            .unwrap_or_else(|| MIN_SPIRAL_RADIUS_M.max(0.5 * haversine_m(src, dst)))
    }

    fn is_valid(&self) -> bool {
        self.n_points >= 1 && self.turns >= 1 && self.max_radius_m.is_none_or(|r| r.is_finite() && r > 0.0)
    }
}

/// Points on an Archimedean spiral around `center`.
///
/// Point `i` of `n` sits at angle `2π·turns·i/n` (counter-clockwise from due
/// east) and radius `max_radius·(i+1)/n`, so the last point lands on the
/// outer radius.
pub fn spiral_waypoints(center: &GeoPoint, n_points: usize, turns: u32, max_radius_m: f64) -> Vec<GeoPoint> {
    let n = n_points as f64;
    let sweep = std::f64::consts::TAU * f64::from(turns);
    (0..n_points)
        .map(|i| {
            let i = i as f64;
            let angle = sweep * i / n;
            let radius = max_radius_m * (i + 1.0) / n;
            center.offset(radius * angle.cos(), radius * angle.sin())
        })
        .collect()
}

fn pick_fastest(candidates: Vec<Route>, scenario: TrafficScenario) -> Option<Route> {
    let mut seen = HashSet::new();
    candidates
        .into_iter()
        .filter(|r| seen.insert(r.edge_ids.clone()))
        .min_by(|a, b| {
            a.duration(scenario)
                .total_cmp(&b.duration(scenario))
                .then_with(|| a.edge_ids.cmp(&b.edge_ids))
        })
}

/// Waypoint candidates in spiral order; waypoints that fail to snap or route
/// are skipped.
fn waypoint_routes(
    net: &RoadNetwork,
    src: &GeoPoint,
    dst: &GeoPoint,
    cfg: &SpiralConfig,
    scenario: TrafficScenario,
) -> Vec<Route> {
    let waypoints = spiral_waypoints(src, cfg.n_points, cfg.turns, cfg.radius_for(src, dst));
    waypoints
        .par_iter()
        .map(|wp| route_via_waypoint(net, src, wp, dst, scenario).ok())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn closure_avoiding_route(
    net: &RoadNetwork,
    src: &GeoPoint,
    dst: &GeoPoint,
    closures: &[RoadClosure],
    medium: TravelMedium,
    cfg: &SpiralConfig,
    scenario: TrafficScenario,
) -> Result<Route, RouteError> {
    let direct = fastest_route(net, src, dst, scenario)?;
    if medium != TravelMedium::Driving || !closures.iter().any(|c| c.active) {
        return Ok(direct);
    }
    let cfg = if cfg.is_valid() { *cfg } else { SpiralConfig::default() };
    let mut candidates = vec![direct];
    candidates.extend(waypoint_routes(net, src, dst, &cfg, scenario));
    candidates.retain(|r| !route_crosses_closures(r, closures));
    pick_fastest(candidates, scenario).ok_or(RouteError::NoValidRoute)
}

/// Exact minimum-time route that uses no closed edge and meets no closure
/// polygon.
pub fn constrained_oracle(
    net: &RoadNetwork,
    src: &GeoPoint,
    dst: &GeoPoint,
    closures: &[RoadClosure],
    scenario: TrafficScenario,
) -> Result<Route, RouteError> {
    let (s, d) = (net.snap(src)?, net.snap(dst)?);
    let active: Vec<&RoadClosure> = closures.iter().filter(|c| c.active).collect();

    let mut blocked = vec![false; net.edge_count()];
    for c in &active {
        for id in &c.edges {
            if let Some(e) = net.edge_idx(id) {
                blocked[e] = true;
            }
        }
        if let Some(ring) = &c.polygon {
            for (e, flag) in blocked.iter_mut().enumerate() {
                let (a, b) = net.edge_ends(e);
                if !*flag && geo::segment_intersects_polygon(&net.point(a), &net.point(b), ring) {
                    *flag = true;
                }
            }
        }
    }

    let path = net
        .search(s, d, scenario, |e| !blocked[e])
        .ok_or(RouteError::NoValidRoute)?;
    let route = net.build_route(s, &path);
    if route_crosses_closures(&route, closures) {
        // only reachable for an empty route whose single node is inside a zone
        return Err(RouteError::NoValidRoute);
    }
    Ok(route)
}

/// Distinct plausible routes between two points: the direct fastest route
/// plus spiral-waypoint detours no slower than `max_detour` times the
/// fastest. Used as the candidate set for exposure-based selection.
pub fn alternative_routes(
    net: &RoadNetwork,
    src: &GeoPoint,
    dst: &GeoPoint,
    cfg: &SpiralConfig,
    max_detour: f64,
    scenario: TrafficScenario,
) -> Result<Vec<Route>, RouteError> {
    let direct = fastest_route(net, src, dst, scenario)?;
    let limit = direct.duration(scenario) * max_detour;
    let mut seen = HashSet::new();
    seen.insert(direct.edge_ids.clone());
    let mut out = vec![direct];
    for r in waypoint_routes(net, src, dst, cfg, scenario) {
        if r.duration(scenario) <= limit && seen.insert(r.edge_ids.clone()) {
            out.push(r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{grid_network, GridSpec};

    #[test]
    fn single_point_is_due_east_at_full_radius() {
        let c = GeoPoint {
            lat: 39.74,
            lon: -104.99,
        };
        let pts = spiral_waypoints(&c, 1, 3, 500.0);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].lat - c.lat).abs() < 1e-12);
        assert!(pts[0].lon > c.lon);
        assert!((haversine_m(&c, &pts[0]) - 500.0).abs() < 0.01);
    }

    #[test]
    fn hundred_points_stay_inside_radius() {
        let c = GeoPoint {
            lat: 39.74,
            lon: -104.99,
        };
        let pts = spiral_waypoints(&c, 100, 3, 2000.0);
        assert_eq!(pts.len(), 100);
        let radii: Vec<f64> = pts.iter().map(|p| haversine_m(&c, p)).collect();
        // equirectangular offsets distort distance by well under a meter here
        assert!(radii.iter().all(|&r| r <= 2000.5));
        assert!(radii.windows(2).all(|w| w[1] + 1e-3 >= w[0]));
    }

    #[test]
    fn angular_step_is_constant() {
        let c = GeoPoint {
            lat: 39.74,
            lon: -104.99,
        };
        let pts = spiral_waypoints(&c, 100, 3, 2000.0);
        let scale = c.lat.to_radians().cos();
        let angles: Vec<f64> = pts
            .iter()
            .map(|p| ((p.lat - c.lat).atan2((p.lon - c.lon) * scale)).to_degrees())
            .collect();
        for w in angles.windows(2) {
            let step = (w[1] - w[0]).rem_euclid(360.0);
            assert!((step - 10.8).abs() < 1e-6, "step {step}");
        }
    }

    fn grid() -> RoadNetwork {
        grid_network(&GridSpec {
            rows: 8,
            cols: 8,
            ..GridSpec::default()
        })
    }

    #[test]
    fn non_driving_ignores_closures() {
        let net = grid();
        let src = net.node("n00_00").unwrap();
        let dst = net.node("n07_07").unwrap();
        let direct = fastest_route(&net, &src, &dst, TrafficScenario::Best).unwrap();
        let closures = vec![RoadClosure::edges("c", direct.edge_ids.clone())];
        for medium in [TravelMedium::Walking, TravelMedium::Bus, TravelMedium::Biking] {
            let r = closure_avoiding_route(
                &net,
                &src,
                &dst,
                &closures,
                medium,
                &SpiralConfig::default(),
                TrafficScenario::Best,
            )
            .unwrap();
            assert_eq!(r, direct);
        }
        let r = closure_avoiding_route(
            &net,
            &src,
            &dst,
            &[],
            TravelMedium::Driving,
            &SpiralConfig::default(),
            TrafficScenario::Best,
        )
        .unwrap();
        assert_eq!(r, direct);
    }

    #[test]
    fn detours_around_closed_corridor() {
        let net = grid();
        let src = net.node("n00_00").unwrap();
        let dst = net.node("n07_07").unwrap();
        let direct = fastest_route(&net, &src, &dst, TrafficScenario::Best).unwrap();
        let mid = direct.edge_ids.len() / 2;
        let closures = vec![RoadClosure::edges("c", direct.edge_ids[mid - 1..=mid].to_vec())];
        let r = closure_avoiding_route(
            &net,
            &src,
            &dst,
            &closures,
            TravelMedium::Driving,
            &SpiralConfig::default(),
            TrafficScenario::Best,
        )
        .unwrap();
        assert!(!route_crosses_closures(&r, &closures));
        let exact = constrained_oracle(&net, &src, &dst, &closures, TrafficScenario::Best).unwrap();
        assert!(r.duration(TrafficScenario::Best) >= exact.duration(TrafficScenario::Best));
        assert!(r.duration(TrafficScenario::Best) >= direct.duration(TrafficScenario::Best));
    }

    #[test]
    fn oracle_without_closures_is_fastest() {
        let net = grid();
        let src = net.node("n01_02").unwrap();
        let dst = net.node("n06_05").unwrap();
        assert_eq!(
            constrained_oracle(&net, &src, &dst, &[], TrafficScenario::Pessimistic).unwrap(),
            fastest_route(&net, &src, &dst, TrafficScenario::Pessimistic).unwrap()
        );
    }

    #[test]
    fn oracle_fails_when_source_is_cut_off() {
        let net = grid();
        let src = net.node("n03_03").unwrap();
        let dst = net.node("n06_05").unwrap();
        let outgoing: Vec<String> = net
            .edges()
            .iter()
            .filter(|e| e.from == "n03_03")
            .map(|e| e.id.clone())
            .collect();
        let closures = vec![RoadClosure::edges("c", outgoing)];
        assert_eq!(
            constrained_oracle(&net, &src, &dst, &closures, TrafficScenario::Best),
            Err(RouteError::NoValidRoute)
        );
        assert_eq!(
            closure_avoiding_route(
                &net,
                &src,
                &dst,
                &closures,
                TravelMedium::Driving,
                &SpiralConfig::default(),
                TrafficScenario::Best
            ),
            Err(RouteError::NoValidRoute)
        );
    }

    #[test]
    fn alternatives_are_distinct_and_bounded() {
        let net = grid();
        let src = net.node("n00_00").unwrap();
        let dst = net.node("n05_06").unwrap();
        let alts = alternative_routes(
            &net,
            &src,
            &dst,
            &SpiralConfig {
                n_points: 24,
                ..Default::default()
            },
            1.5,
            TrafficScenario::Best,
        )
        .unwrap();
        assert!(alts.len() > 1);
        let best = alts[0].duration(TrafficScenario::Best);
        assert!(alts.iter().all(|r| r.duration(TrafficScenario::Best) <= best * 1.5));
        let ids: HashSet<_> = alts.iter().map(|r| r.edge_ids.clone()).collect();
        assert_eq!(ids.len(), alts.len());
    }
}
