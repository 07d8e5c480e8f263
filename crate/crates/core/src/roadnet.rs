//! Directed geospatial road graph, scenario travel times, snapping and the
//! baseline fastest-path search every other router builds on.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NetworkError, RouteError};
use crate::geo::{self, haversine_m, GeoPoint};

/// Default snap radius for route endpoints.
pub const DEFAULT_SNAP_RADIUS_M: f64 = 1000.0;

/// Multipliers applied when a network file omits `mult`.
pub const DEFAULT_MULTIPLIERS: [f64; 3] = [0.9, 1.0, 1.3];

/// Traffic regime used to scale free-flow edge times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficScenario {
    Optimistic,
    Best,
    Pessimistic,
}

impl TrafficScenario {
    pub const ALL: [TrafficScenario; 3] = [Self::Optimistic, Self::Best, Self::Pessimistic];

    fn index(self) -> usize {
        match self {
            Self::Optimistic => 0,
            Self::Best => 1,
            Self::Pessimistic => 2,
        }
    }
}

impl std::str::FromStr for TrafficScenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "optimistic" => Ok(Self::Optimistic),
            "best" => Ok(Self::Best),
            "pessimistic" => Ok(Self::Pessimistic),
            other => Err(format!("unknown traffic scenario `{other}`")),
        }
    }
}

/// Travel time in seconds under each traffic scenario.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DurationTriple {
    pub optimistic: f64,
    pub best: f64,
    pub pessimistic: f64,
}

impl DurationTriple {
    pub fn get(&self, scenario: TrafficScenario) -> f64 {
        match scenario {
            TrafficScenario::Optimistic => self.optimistic,
            TrafficScenario::Best => self.best,
            TrafficScenario::Pessimistic => self.pessimistic,
        }
    }

    fn set(&mut self, scenario: TrafficScenario, value: f64) {
        match scenario {
            TrafficScenario::Optimistic => self.optimistic = value,
            TrafficScenario::Best => self.best = value,
            TrafficScenario::Pessimistic => self.pessimistic = value,
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.optimistic <= self.best && self.best <= self.pessimistic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub free_flow_s: f64,
    /// Optimistic, best and pessimistic multipliers.
    #[serde(default = "default_mult")]
    pub mult: [f64; 3],
}

fn default_mult() -> [f64; 3] {
    DEFAULT_MULTIPLIERS
}

impl Edge {
    pub fn travel_time(&self, scenario: TrafficScenario) -> f64 {
        self.free_flow_s * self.mult[scenario.index()]
    }

    fn validate(&self) -> Result<(), NetworkError> {
        let bad = |reason: &str| NetworkError::InvalidEdge {
            edge: self.id.clone(),
            reason: reason.to_string(),
        };
        if !(self.length_m.is_finite() && self.length_m > 0.0) {
            return Err(bad("length_m must be positive"));
        }
        if !(self.free_flow_s.is_finite() && self.free_flow_s > 0.0) {
            return Err(bad("free_flow_s must be positive"));
        }
        let [o, b, p] = self.mult;
        if !(o.is_finite() && b.is_finite() && p.is_finite()) || o <= 0.0 {
            return Err(bad("multipliers must be finite and positive"));
        }
        if b < 1.0 || p < 1.0 {
            return Err(bad("best and pessimistic multipliers must be at least 1.0"));
        }
        if !(o <= b && b <= p) {
            return Err(bad("multipliers must satisfy optimistic <= best <= pessimistic"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

/// On-disk network layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<Edge>,
}

/// Immutable directed road graph.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    node_ids: Vec<String>,
    points: Vec<GeoPoint>,
    node_index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, usize>,
    // (from, to) dense indices per edge
    ends: Vec<(usize, usize)>,
    // outgoing edge indices, sorted by edge id
    out: Vec<Vec<usize>>,
    snap_radius_m: f64,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<NodeRecord>, edges: Vec<Edge>) -> Result<Self, NetworkError> {
        let mut sorted = nodes;
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        let mut node_ids = Vec::with_capacity(sorted.len());
        let mut points = Vec::with_capacity(sorted.len());
        let mut node_index = HashMap::with_capacity(sorted.len());
        for n in sorted {
            let p = GeoPoint { lat: n.lat, lon: n.lon };
            p.validate().map_err(|e| NetworkError::InvalidNode {
                node: n.id.clone(),
                reason: e.to_string(),
            })?;
            if node_index.insert(n.id.clone(), node_ids.len()).is_some() {
                return Err(NetworkError::InvalidNode {
                    node: n.id,
                    reason: "duplicate node id".into(),
                });
            }
            node_ids.push(n.id);
            points.push(p);
        }

        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut ends = Vec::with_capacity(edges.len());
        let mut out = vec![Vec::new(); node_ids.len()];
        for (i, e) in edges.iter().enumerate() {
            e.validate()?;
            let lookup = |id: &str| {
                node_index.get(id).copied().ok_or_else(|| NetworkError::InvalidEdge {
                    edge: e.id.clone(),
                    reason: format!("references missing node `{id}`"),
                })
            };
            let (from, to) = (lookup(&e.from)?, lookup(&e.to)?);
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(NetworkError::InvalidEdge {
                    edge: e.id.clone(),
                    reason: "duplicate edge id".into(),
                });
            }
            ends.push((from, to));
            out[from].push(i);
        }
        for list in &mut out {
            list.sort_by(|&a, &b| edges[a].id.cmp(&edges[b].id));
        }

        Ok(Self {
            node_ids,
            points,
            node_index,
            edges,
            edge_index,
            ends,
            out,
            snap_radius_m: DEFAULT_SNAP_RADIUS_M,
        })
    }

    pub fn from_file(file: NetworkFile) -> Result<Self, NetworkError> {
        Self::new(file.nodes, file.edges)
    }

    pub fn from_json_str(s: &str) -> Result<Self, NetworkError> {
        let file: NetworkFile = serde_json::from_str(s).map_err(NetworkError::from_json)?;
        Self::from_file(file)
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            nodes: self
                .node_ids
                .iter()
                .zip(&self.points)
                .map(|(id, p)| NodeRecord {
                    id: id.clone(),
                    lat: p.lat,
                    lon: p.lon,
                })
                .collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn with_snap_radius(mut self, radius_m: f64) -> Self {
        self.snap_radius_m = radius_m;
        self
    }

    pub fn snap_radius_m(&self) -> f64 {
        self.snap_radius_m
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edge_index.get(id).map(|&i| &self.edges[i])
    }

    pub fn node(&self, id: &str) -> Option<GeoPoint> {
        self.node_index.get(id).map(|&i| self.points[i])
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, GeoPoint)> {
        self.node_ids
            .iter()
            .map(String::as_str)
            .zip(self.points.iter().copied())
    }

    /// Endpoint coordinates of an edge.
    pub fn edge_segment(&self, id: &str) -> Option<(GeoPoint, GeoPoint)> {
        let &i = self.edge_index.get(id)?;
        let (a, b) = self.ends[i];
        Some((self.points[a], self.points[b]))
    }

    /// Returns a copy with the free-flow time of each listed edge scaled by
    /// its multiplier. Unknown edge ids are ignored.
    pub fn with_overrides(&self, overrides: &TrafficOverrides) -> Result<RoadNetwork, NetworkError> {
        let mut net = self.clone();
        for (id, &m) in &overrides.0 {
            if !(m.is_finite() && m > 0.0) {
                return Err(NetworkError::InvalidEdge {
                    edge: id.clone(),
                    reason: format!("override multiplier {m} must be positive"),
                });
            }
            if let Some(&i) = net.edge_index.get(id) {
                net.edges[i].free_flow_s *= m;
            }
        }
        Ok(net)
    }

    /// Nearest node by haversine distance, ties broken by node id.
    pub fn snap(&self, p: &GeoPoint) -> Result<usize, RouteError> {
        let mut best: Option<(usize, f64)> = None;
        for (i, q) in self.points.iter().enumerate() {
            let d = haversine_m(p, q);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, d)) if d <= self.snap_radius_m => Ok(i),
            _ => Err(RouteError::SnapFailure {
                point: p.to_string(),
                radius_m: self.snap_radius_m,
            }),
        }
    }

    pub fn snap_id(&self, p: &GeoPoint) -> Result<&str, RouteError> {
        self.snap(p).map(|i| self.node_ids[i].as_str())
    }

    /// Minimum-time edge sequence between two dense node indices, considering
    /// only edges accepted by `allowed`. Among equal-time paths the
    /// lexicographically smallest edge-id sequence wins.
    pub(crate) fn search(
        &self,
        src: usize,
        dst: usize,
        scenario: TrafficScenario,
        allowed: impl Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        if src == dst {
            return Some(Vec::new());
        }
        let n = self.node_ids.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &e in &self.out[u] {
                if !allowed(e) {
                    continue;
                }
                let v = self.ends[e].1;
                let nd = d + self.edges[e].travel_time(scenario);
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        if !dist[dst].is_finite() {
            return None;
        }

        let tight = |e: usize| {
            let (u, v) = self.ends[e];
            allowed(e) && dist[u].is_finite() && dist[u] + self.edges[e].travel_time(scenario) == dist[v]
        };

        // nodes that reach dst over tight edges
        let mut reaches = vec![false; n];
        reaches[dst] = true;
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in 0..self.edges.len() {
            if tight(e) {
                incoming[self.ends[e].1].push(e);
            }
        }
        let mut stack = vec![dst];
        while let Some(v) = stack.pop() {
            for &e in &incoming[v] {
                let u = self.ends[e].0;
                if !reaches[u] {
                    reaches[u] = true;
                    stack.push(u);
                }
            }
        }

        let mut path = Vec::new();
        let mut visited = vec![false; n];
        let mut u = src;
        visited[u] = true;
        while u != dst {
            let next = self.out[u].iter().copied().find(|&e| {
                let v = self.ends[e].1;
                tight(e) && reaches[v] && !visited[v]
            })?;
            path.push(next);
            u = self.ends[next].1;
            visited[u] = true;
        }
        Some(path)
    }

    /// Builds a [`Route`] from dense edge indices starting at node `start`.
    pub(crate) fn build_route(&self, start: usize, edges: &[usize]) -> Route {
        let mut geometry = vec![self.points[start]];
        let mut durations = DurationTriple::default();
        let mut length_m = 0.0;
        for &e in edges {
            geometry.push(self.points[self.ends[e].1]);
            length_m += self.edges[e].length_m;
        }
        for s in TrafficScenario::ALL {
            let total = edges.iter().fold(0.0, |acc, &e| acc + self.edges[e].travel_time(s));
            durations.set(s, total);
        }
        Route {
            edge_ids: edges.iter().map(|&e| self.edges[e].id.clone()).collect(),
            geometry,
            length_m,
            durations,
        }
    }

    pub(crate) fn edge_idx(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub(crate) fn node_name(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub(crate) fn point(&self, i: usize) -> GeoPoint {
        self.points[i]
    }

    pub(crate) fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }
}

#[derive(Debug, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An ordered path through the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub edge_ids: Vec<String>,
    /// Node coordinates along the path; a single point for an empty route.
    pub geometry: Vec<GeoPoint>,
    pub length_m: f64,
    pub durations: DurationTriple,
}

impl Route {
    pub fn duration(&self, scenario: TrafficScenario) -> f64 {
        self.durations.get(scenario)
    }

    /// Appends `next`, which must start where `self` ends.
    pub fn concat(mut self, next: Route) -> Route {
        self.edge_ids.extend(next.edge_ids);
        self.geometry.extend(next.geometry.into_iter().skip(1));
        self.length_m += next.length_m;
        self.durations.optimistic += next.durations.optimistic;
        self.durations.best += next.durations.best;
        self.durations.pessimistic += next.durations.pessimistic;
        self
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<RoadNetwork, NetworkError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RoadNetwork::from_json_str(&text)
}

pub fn fastest_route(
    net: &RoadNetwork,
    src: &GeoPoint,
    dst: &GeoPoint,
    scenario: TrafficScenario,
) -> Result<Route, RouteError> {
    let (s, d) = (net.snap(src)?, net.snap(dst)?);
    let path = net.search(s, d, scenario, |_| true).ok_or_else(|| RouteError::NoPath {
        from: net.node_name(s).to_string(),
        to: net.node_name(d).to_string(),
    })?;
    Ok(net.build_route(s, &path))
}

/// Fastest route forced through the node nearest `wp`.
pub fn route_via_waypoint(
    net: &RoadNetwork,
    src: &GeoPoint,
    wp: &GeoPoint,
    dst: &GeoPoint,
    scenario: TrafficScenario,
) -> Result<Route, RouteError> {
    let first = fastest_route(net, src, wp, scenario)?;
    let second = fastest_route(net, wp, dst, scenario)?;
    // re-sum over the whole walk so durations compare exactly with direct routes
    let edges: Vec<usize> = first
        .edge_ids
        .iter()
        .chain(&second.edge_ids)
        .map(|id| net.edge_idx(id).expect("route edges exist"))
        .collect();
    Ok(net.build_route(net.snap(src)?, &edges))
}

/// A reported closure: a set of closed edges and/or a closed area.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadClosure {
    pub id: String,
    pub edges: BTreeSet<String>,
    /// Open ring (closing vertex not repeated).
    pub polygon: Option<Vec<GeoPoint>>,
    pub active: bool,
}

#[derive(Serialize, Deserialize)]
struct ClosureRecord {
    id: String,
    #[serde(default)]
    edges: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polygon: Option<Vec<[f64; 2]>>,
    #[serde(default = "yes")]
    active: bool,
}

fn yes() -> bool {
    true
}

impl RoadClosure {
    pub fn edges<I, S>(id: impl Into<String>, edges: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            edges: edges.into_iter().map(Into::into).collect(),
            polygon: None,
            active: true,
        }
    }

    pub fn area(id: impl Into<String>, ring: Vec<GeoPoint>) -> Result<Self, NetworkError> {
        let c = Self {
            id: id.into(),
            edges: BTreeSet::new(),
            polygon: Some(ring),
            active: true,
        };
        c.validated()
    }

    /// Normalizes a closed ring and checks the closure invariants.
    pub fn validated(mut self) -> Result<Self, NetworkError> {
        let bad = |reason: &str| NetworkError::InvalidClosure {
            closure: self.id.clone(),
            reason: reason.into(),
        };
        if let Some(ring) = &mut self.polygon {
            if ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
        }
        match &self.polygon {
            Some(ring) => {
                if ring.len() < 3 {
                    return Err(bad("polygon needs at least 3 distinct vertices"));
                }
                if ring.iter().any(|p| p.validate().is_err()) {
                    return Err(bad("polygon vertex out of range"));
                }
                if !is_simple_ring(ring) {
                    return Err(bad("polygon ring self-intersects"));
                }
            }
            None if self.edges.is_empty() => return Err(bad("needs closed edges or a polygon")),
            None => {}
        }
        Ok(self)
    }

    fn touches_segment(&self, a: &GeoPoint, b: &GeoPoint) -> bool {
        self.polygon
            .as_deref()
            .is_some_and(|ring| geo::segment_intersects_polygon(a, b, ring))
    }
}

impl Serialize for RoadClosure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ClosureRecord {
            id: self.id.clone(),
            edges: self.edges.iter().cloned().collect(),
            polygon: self
                .polygon
                .as_ref()
                .map(|r| r.iter().map(|p| [p.lat, p.lon]).collect()),
            active: self.active,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RoadClosure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = ClosureRecord::deserialize(deserializer)?;
        RoadClosure {
            id: r.id,
            edges: r.edges.into_iter().collect(),
            polygon: r
                .polygon
                .map(|ring| ring.into_iter().map(|[lat, lon]| GeoPoint { lat, lon }).collect()),
            active: r.active,
        }
        .validated()
        .map_err(serde::de::Error::custom)
    }
}

fn is_simple_ring(ring: &[GeoPoint]) -> bool {
    let n = ring.len();
    for i in 0..n {
        for j in i + 1..n {
            // skip adjacent edges, including the wrap-around pair
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if geo::segments_intersect(&ring[i], &ring[(i + 1) % n], &ring[j], &ring[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

pub fn load_closures(path: impl AsRef<Path>) -> Result<Vec<RoadClosure>, NetworkError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(NetworkError::from_json)
}

/// True if the route uses a closed edge or any geometry segment meets an
/// active closure polygon. A single-point route is tested as a point.
pub fn route_crosses_closures(route: &Route, closures: &[RoadClosure]) -> bool {
    closures.iter().filter(|c| c.active).any(|c| {
        if route.edge_ids.iter().any(|e| c.edges.contains(e)) {
            return true;
        }
        match route.geometry.as_slice() {
            [] => false,
            [p] => c.touches_segment(p, p),
            pts => pts.windows(2).any(|w| c.touches_segment(&w[0], &w[1])),
        }
    })
}

/// Per-edge multipliers hot-loaded between scheduler ticks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrafficOverrides(pub BTreeMap<String, f64>);

impl TrafficOverrides {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(NetworkError::from_json)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
