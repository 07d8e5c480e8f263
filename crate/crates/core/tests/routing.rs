mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripwise_core::avoidance::{closure_avoiding_route, constrained_oracle, SpiralConfig, TravelMedium};
use tripwise_core::error::{NetworkError, RouteError};
use tripwise_core::fixtures::{grid_network, grid_node_id, random_network, GridSpec};
use tripwise_core::geo::GeoPoint;
use tripwise_core::roadnet::{
    fastest_route, load_closures, load_network, route_crosses_closures, route_via_waypoint, RoadClosure, RoadNetwork,
    TrafficScenario,
};

use support::{bellman_ford, edge_open, enumerate_best, path_blocked};

const BUNDLED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/denver_grid.json");

fn pt(net: &RoadNetwork, id: &str) -> GeoPoint {
    net.node(id).unwrap()
}

#[test]
fn bundled_grid_loads_with_expected_edge_count() {
    let net = load_network(BUNDLED).unwrap();
    assert_eq!(net.node_count(), 400);
    // 20 rows × 19 links × 2 directions, twice
    assert_eq!(net.edge_count(), 1520);
}

#[test]
fn bundled_grid_matches_generator() {
    let net = load_network(BUNDLED).unwrap();
    let generated = grid_network(&GridSpec::default());
    assert_eq!(net.to_file(), generated.to_file());
}

#[test]
fn three_node_line() {
    let text = r#"{"nodes": [
        {"id": "A", "lat": 39.70, "lon": -105.000},
        {"id": "B", "lat": 39.70, "lon": -104.995},
        {"id": "C", "lat": 39.70, "lon": -104.990}],
      "edges": [
        {"id": "ab", "from": "A", "to": "B", "length_m": 428, "free_flow_s": 10, "mult": [1, 1, 1]},
        {"id": "bc", "from": "B", "to": "C", "length_m": 428, "free_flow_s": 10, "mult": [1, 1, 1]}]}"#;
    let net = RoadNetwork::from_json_str(text).unwrap();
    let r = fastest_route(&net, &pt(&net, "A"), &pt(&net, "C"), TrafficScenario::Best).unwrap();
    assert_eq!(r.edge_ids, ["ab", "bc"]);
    assert_eq!(r.duration(TrafficScenario::Best), 20.0);
    assert_eq!(r.length_m, 856.0);
    let err = fastest_route(&net, &pt(&net, "C"), &pt(&net, "A"), TrafficScenario::Best).unwrap_err();
    assert!(matches!(err, RouteError::NoPath { .. }));
}

#[test]
fn load_network_reports_missing_file() {
    assert!(matches!(
        load_network("/nonexistent/net.json"),
        Err(NetworkError::Io { .. })
    ));
}

#[test]
fn random_graphs_match_enumeration_in_every_scenario() {
    for seed in 0..60 {
        let net = random_network(8, 0.35, seed);
        for s in TrafficScenario::ALL {
            let (src, dst) = ("v0", "v7");
            let oracle = enumerate_best(&net, src, dst, s, &|_| true);
            match fastest_route(&net, &pt(&net, src), &pt(&net, dst), s) {
                Ok(r) => {
                    let (cost, ids) = oracle.expect("router found a path the oracle did not");
                    assert_eq!(r.duration(s), cost, "seed {seed} {s:?}");
                    assert_eq!(r.edge_ids, ids, "seed {seed} {s:?}");
                }
                Err(RouteError::NoPath { .. }) => assert!(oracle.is_none(), "seed {seed}"),
                Err(e) => panic!("{e}"),
            }
        }
    }
}

#[test]
fn waypoint_routes_are_never_faster() {
    for seed in 0..40 {
        let net = random_network(9, 0.4, 100 + seed);
        let (src, dst) = (pt(&net, "v0"), pt(&net, "v8"));
        let Ok(direct) = fastest_route(&net, &src, &dst, TrafficScenario::Best) else {
            continue;
        };
        for wp in 1..8 {
            let via = format!("v{wp}");
            if let Ok(r) = route_via_waypoint(&net, &src, &pt(&net, &via), &dst, TrafficScenario::Best) {
                assert!(r.duration(TrafficScenario::Best) >= direct.duration(TrafficScenario::Best));
                assert!(r.geometry.contains(&pt(&net, &via)));
            }
        }
    }
}

#[test]
fn waypoint_on_source_is_plain_fastest() {
    let net = grid_network(&GridSpec::default());
    let (a, b) = (pt(&net, &grid_node_id(2, 2)), pt(&net, &grid_node_id(9, 14)));
    let direct = fastest_route(&net, &a, &b, TrafficScenario::Best).unwrap();
    let via = route_via_waypoint(&net, &a, &a, &b, TrafficScenario::Best).unwrap();
    assert_eq!(direct, via);
}

#[test]
fn grid_durations_match_bellman_ford() {
    let net = load_network(BUNDLED).unwrap();
    let home = grid_node_id(3, 4);
    for s in TrafficScenario::ALL {
        let dist = bellman_ford(&net, &home, s);
        for target in [grid_node_id(17, 15), grid_node_id(0, 19), grid_node_id(10, 10)] {
            let r = fastest_route(&net, &pt(&net, &home), &pt(&net, &target), s).unwrap();
            let want = dist[&target];
            assert!((r.duration(s) - want).abs() <= 1e-9 * want, "{s:?} {target}");
        }
    }
}

#[test]
fn closures_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("closures.json");
    std::fs::write(
        &path,
        r#"[{"id": "c1", "edges": ["e0001"]},
            {"id": "c2", "polygon": [[39.73, -105.0], [39.73, -104.99], [39.74, -104.99], [39.73, -105.0]], "active": false}]"#,
    )
    .unwrap();
    let list = load_closures(&path).unwrap();
    assert_eq!(list.len(), 2);
    assert!(list[0].active);
    assert!(!list[1].active);
    assert_eq!(list[1].polygon.as_ref().unwrap().len(), 3);
}

#[test]
fn polygon_around_route_midpoint_is_crossed() {
    let net = grid_network(&GridSpec::default());
    let (a, b) = (pt(&net, &grid_node_id(5, 0)), pt(&net, &grid_node_id(5, 10)));
    let r = fastest_route(&net, &a, &b, TrafficScenario::Best).unwrap();
    let mid = pt(&net, &grid_node_id(5, 5)).offset(200.0, 0.0);
    let square = vec![
        mid.offset(-50.0, -50.0),
        mid.offset(50.0, -50.0),
        mid.offset(50.0, 50.0),
        mid.offset(-50.0, 50.0),
    ];
    let c = RoadClosure::area("sq", square.clone()).unwrap();
    assert!(route_crosses_closures(&r, std::slice::from_ref(&c)));
    // the same square well off the route
    let away: Vec<GeoPoint> = square.iter().map(|p| p.offset(0.0, 1000.0)).collect();
    let far = RoadClosure::area("far", away).unwrap();
    assert!(!route_crosses_closures(&r, &[far]));
    assert!(!route_crosses_closures(&r, &[]));
}

fn random_closures(net: &RoadNetwork, rng: &mut ChaCha8Rng) -> Vec<RoadClosure> {
    let ids: Vec<String> = net.edges().iter().map(|e| e.id.clone()).collect();
    let mut out = Vec::new();
    if !ids.is_empty() {
        let k = rng.random_range(1..=3.min(ids.len()));
        let picked: Vec<String> = (0..k).map(|_| ids[rng.random_range(0..ids.len())].clone()).collect();
        out.push(RoadClosure::edges("edges", picked));
    }
    if rng.random_bool(0.5) {
        let (_, p) = net.nodes().nth(rng.random_range(0..net.node_count())).unwrap();
        let c = p.offset(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0));
        let s = rng.random_range(30.0..250.0);
        let ring = vec![c.offset(-s, -s), c.offset(s, -s), c.offset(0.0, s)];
        out.push(RoadClosure::area("tri", ring).unwrap());
    }
    out
}

#[test]
fn oracle_and_heuristic_against_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..80 {
        let net = random_network(8, 0.4, 500 + seed);
        let closures = random_closures(&net, &mut rng);
        let (src, dst) = (pt(&net, "v0"), pt(&net, "v7"));
        let s = TrafficScenario::Best;
        let truth = enumerate_best(&net, "v0", "v7", s, &|e| edge_open(&net, e, &closures));
        let oracle = constrained_oracle(&net, &src, &dst, &closures, s);
        match (&truth, &oracle) {
            (Some((c, _)), Ok(r)) => assert_eq!(r.duration(s), *c, "seed {seed}"),
            (None, Err(_)) => {}
            _ => panic!("seed {seed}: oracle {oracle:?} vs enumeration {truth:?}"),
        }
        let cfg = SpiralConfig {
            n_points: 40,
            ..SpiralConfig::default()
        };
        if let Ok(h) = closure_avoiding_route(&net, &src, &dst, &closures, TravelMedium::Driving, &cfg, s) {
            assert!(!path_blocked(&net, &h.edge_ids, &closures), "seed {seed}");
            let (c, _) = truth.as_ref().expect("heuristic found a route where none exists");
            assert!(h.duration(s) >= *c);
        }
    }
}

#[test]
fn non_driving_media_ignore_closures() {
    let net = grid_network(&GridSpec::default());
    let (a, b) = (pt(&net, &grid_node_id(2, 2)), pt(&net, &grid_node_id(2, 12)));
    let direct = fastest_route(&net, &a, &b, TrafficScenario::Best).unwrap();
    let closures = vec![RoadClosure::edges("c", direct.edge_ids.clone())];
    for m in [TravelMedium::Walking, TravelMedium::Biking, TravelMedium::Bus] {
        let r = closure_avoiding_route(
            &net,
            &a,
            &b,
            &closures,
            m,
            &SpiralConfig::default(),
            TrafficScenario::Best,
        )
        .unwrap();
        assert_eq!(r, direct);
    }
    let r = closure_avoiding_route(
        &net,
        &a,
        &b,
        &[],
        TravelMedium::Driving,
        &SpiralConfig::default(),
        TrafficScenario::Best,
    )
    .unwrap();
    assert_eq!(r, direct);
}

#[test]
fn corridor_closure_on_grid_is_avoided() {
    let net = grid_network(&GridSpec::default());
    let (a, b) = (pt(&net, &grid_node_id(4, 2)), pt(&net, &grid_node_id(4, 16)));
    let direct = fastest_route(&net, &a, &b, TrafficScenario::Best).unwrap();
    let mid = direct.edge_ids.len() / 2;
    let closures = vec![RoadClosure::edges("mid", direct.edge_ids[mid - 1..=mid].to_vec())];
    let s = TrafficScenario::Best;
    let h = closure_avoiding_route(
        &net,
        &a,
        &b,
        &closures,
        TravelMedium::Driving,
        &SpiralConfig::default(),
        s,
    )
    .unwrap();
    let o = constrained_oracle(&net, &a, &b, &closures, s).unwrap();
    assert!(!route_crosses_closures(&h, &closures));
    assert!(h.duration(s) >= o.duration(s));
    assert!(o.duration(s) >= direct.duration(s));
}

#[test]
fn source_cut_off_gives_no_valid_route() {
    let net = grid_network(&GridSpec::default());
    let corner = grid_node_id(0, 0);
    let out: Vec<String> = net
        .edges()
        .iter()
        .filter(|e| e.from == corner)
        .map(|e| e.id.clone())
        .collect();
    let closures = vec![RoadClosure::edges("box", out)];
    let (a, b) = (pt(&net, &corner), pt(&net, &grid_node_id(6, 6)));
    assert_eq!(
        constrained_oracle(&net, &a, &b, &closures, TrafficScenario::Best),
        Err(RouteError::NoValidRoute)
    );
    assert_eq!(
        closure_avoiding_route(
            &net,
            &a,
            &b,
            &closures,
            TravelMedium::Driving,
            &SpiralConfig::default(),
            TrafficScenario::Best
        ),
        Err(RouteError::NoValidRoute)
    );
}
