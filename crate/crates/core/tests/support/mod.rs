//! Independent reference implementations used as test oracles. Nothing here
//! calls into the routing or sampling code under test.

#![allow(dead_code)]

use std::collections::HashMap;

use tripwise_core::geo::GeoPoint;
use tripwise_core::roadnet::{Edge, RoadClosure, RoadNetwork, TrafficScenario};

const R: f64 = 6_371_008.8;

/// Great-circle distance via the atan2 (Vincenty, spherical) form.
pub fn great_circle_m(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dl = (b.lon - a.lon).to_radians();
    let y = ((p2.cos() * dl.sin()).powi(2) + (p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos()).powi(2)).sqrt();
    let x = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    R * y.atan2(x)
}

pub fn scenario_time(e: &Edge, s: TrafficScenario) -> f64 {
    let m = match s {
        TrafficScenario::Optimistic => e.mult[0],
        TrafficScenario::Best => e.mult[1],
        TrafficScenario::Pessimistic => e.mult[2],
    };
    e.free_flow_s * m
}

/// Best simple path by exhaustive DFS: minimum left-to-right duration sum,
/// ties to the lexicographically smallest edge-id list.
pub fn enumerate_best(
    net: &RoadNetwork,
    src: &str,
    dst: &str,
    s: TrafficScenario,
    allowed: &dyn Fn(&Edge) -> bool,
) -> Option<(f64, Vec<String>)> {
    if src == dst {
        return Some((0.0, Vec::new()));
    }
    let mut adj: HashMap<&str, Vec<&Edge>> = HashMap::new();
    for e in net.edges() {
        if allowed(e) {
            adj.entry(e.from.as_str()).or_default().push(e);
        }
    }
    let mut best: Option<(f64, Vec<String>)> = None;
    let mut on_path = vec![src.to_string()];
    let mut ids = Vec::new();
    dfs(&adj, src, dst, s, 0.0, &mut on_path, &mut ids, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    adj: &HashMap<&str, Vec<&Edge>>,
    at: &str,
    dst: &str,
    s: TrafficScenario,
    cost: f64,
    on_path: &mut Vec<String>,
    ids: &mut Vec<String>,
    best: &mut Option<(f64, Vec<String>)>,
) {
    for e in adj.get(at).into_iter().flatten() {
        if on_path.iter().any(|n| n == &e.to) {
            continue;
        }
        let c = cost + scenario_time(e, s);
        ids.push(e.id.clone());
        if e.to == dst {
            let better = match best {
                None => true,
                Some((bc, bids)) => c < *bc || (c == *bc && ids < bids),
            };
            if better {
                *best = Some((c, ids.clone()));
            }
        } else {
            on_path.push(e.to.clone());
            dfs(adj, &e.to, dst, s, c, on_path, ids, best);
            on_path.pop();
        }
        ids.pop();
    }
}

/// Single-source shortest durations by Bellman-Ford relaxation.
pub fn bellman_ford(net: &RoadNetwork, src: &str, s: TrafficScenario) -> HashMap<String, f64> {
    let mut dist: HashMap<String, f64> = net.nodes().map(|(id, _)| (id.to_string(), f64::INFINITY)).collect();
    dist.insert(src.to_string(), 0.0);
    for _ in 0..net.node_count() {
        let mut changed = false;
        for e in net.edges() {
            let du = dist[&e.from];
            let nd = du + scenario_time(e, s);
            if nd < dist[&e.to] {
                dist.insert(e.to.clone(), nd);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

fn cross(o: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> f64 {
    (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon)
}

/// Winding-number containment (non-zero rule).
pub fn inside_ring(p: &GeoPoint, ring: &[GeoPoint]) -> bool {
    let mut wn = 0i32;
    for i in 0..ring.len() {
        let (a, b) = (&ring[i], &ring[(i + 1) % ring.len()]);
        if a.lat <= p.lat {
            if b.lat > p.lat && cross(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.lat <= p.lat && cross(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

fn proper_cross(p1: &GeoPoint, p2: &GeoPoint, q1: &GeoPoint, q2: &GeoPoint) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0 && !(d1 == 0.0 && d2 == 0.0)
}

pub fn segment_hits_ring(a: &GeoPoint, b: &GeoPoint, ring: &[GeoPoint]) -> bool {
    inside_ring(a, ring)
        || inside_ring(b, ring)
        || (0..ring.len()).any(|i| proper_cross(a, b, &ring[i], &ring[(i + 1) % ring.len()]))
}

/// Whether an edge may be used given the active closures.
pub fn edge_open(net: &RoadNetwork, e: &Edge, closures: &[RoadClosure]) -> bool {
    let a = net.node(&e.from).unwrap();
    let b = net.node(&e.to).unwrap();
    closures
        .iter()
        .filter(|c| c.active)
        .all(|c| !c.edges.contains(&e.id) && c.polygon.as_ref().is_none_or(|ring| !segment_hits_ring(&a, &b, ring)))
}

/// Whether a node path (edge ids) touches any active closure.
pub fn path_blocked(net: &RoadNetwork, ids: &[String], closures: &[RoadClosure]) -> bool {
    ids.iter().any(|id| !edge_open(net, net.edge(id).unwrap(), closures))
}

/// `k` points at equal arc-length fractions, located by binary search over
/// cumulative lengths.
pub fn arc_samples(geom: &[GeoPoint], k: usize) -> Vec<GeoPoint> {
    let mut cum = vec![0.0];
    for w in geom.windows(2) {
        cum.push(cum.last().unwrap() + great_circle_m(&w[0], &w[1]));
    }
    let total = *cum.last().unwrap();
    (0..k)
        .map(|j| {
            if total == 0.0 {
                return geom[0];
            }
            if j == k - 1 {
                return *geom.last().unwrap();
            }
            let target = total * j as f64 / (k - 1) as f64;
            let i = cum
                .partition_point(|&c| c <= target)
                .saturating_sub(1)
                .min(geom.len() - 2);
            let seg = cum[i + 1] - cum[i];
            let t = if seg > 0.0 { (target - cum[i]) / seg } else { 0.0 };
            GeoPoint {
                lat: geom[i].lat * (1.0 - t) + geom[i + 1].lat * t,
                lon: geom[i].lon * (1.0 - t) + geom[i + 1].lon * t,
            }
        })
        .collect()
}

/// Bilinear interpolation written as area weights over the four
/// surrounding nodes; outside points are clamped to the grid.
pub fn bilinear(origin: &GeoPoint, cell: f64, values: &[Vec<f64>], p: &GeoPoint) -> f64 {
    let rows = values.len();
    let cols = values[0].len();
    let y = ((p.lat - origin.lat) / cell).max(0.0).min((rows - 1) as f64);
    let x = ((p.lon - origin.lon) / cell).max(0.0).min((cols - 1) as f64);
    let r0 = (y as usize).min(rows.saturating_sub(2));
    let c0 = (x as usize).min(cols.saturating_sub(2));
    let r1 = (r0 + 1).min(rows - 1);
    let c1 = (c0 + 1).min(cols - 1);
    let (fy, fx) = (y - r0 as f64, x - c0 as f64);
    values[r0][c0] * (1.0 - fx) * (1.0 - fy)
        + values[r0][c1] * fx * (1.0 - fy)
        + values[r1][c0] * (1.0 - fx) * fy
        + values[r1][c1] * fx * fy
}
