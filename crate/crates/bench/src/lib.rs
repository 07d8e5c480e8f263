//! Seeded inputs shared by the benchmarks.

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripwise_core::analytics::{FeedbackResponse, InfoKind, UsefulnessRatings};
use tripwise_core::fixtures::grid_node_id;
use tripwise_core::geo::GeoPoint;
use tripwise_core::roadnet::{fastest_route, RoadClosure, RoadNetwork, TrafficScenario};

/// Distinct node pairs on the default grid.
pub fn grid_pairs(net: &RoadNetwork, n: usize, seed: u64) -> Vec<(GeoPoint, GeoPoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = net
            .node(&grid_node_id(rng.random_range(0..20), rng.random_range(0..20)))
            .unwrap();
        let b = net
            .node(&grid_node_id(rng.random_range(0..20), rng.random_range(0..20)))
            .unwrap();
        if a != b {
            out.push((a, b));
        }
    }
    out
}

/// Closes the middle third of the direct route between `a` and `b`.
pub fn corridor_closure(net: &RoadNetwork, a: &GeoPoint, b: &GeoPoint) -> Vec<RoadClosure> {
    let direct = fastest_route(net, a, b, TrafficScenario::Best).expect("grid is connected");
    let n = direct.edge_ids.len();
    vec![RoadClosure::edges(
        "corridor",
        direct.edge_ids[n / 3..(2 * n / 3).max(n / 3 + 1)].to_vec(),
    )]
}

/// `n` feedback responses spread over `users` users with random ratings.
pub fn responses(n: usize, users: usize, seed: u64) -> Vec<FeedbackResponse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0: DateTime<Utc> = "2023-02-06T15:00:00Z".parse().unwrap();
    (0..n)
        .map(|i| {
            let ratings = std::array::from_fn(|_| rng.random_range(1..=5u8));
            FeedbackResponse {
                user_id: format!("u{}", i % users),
                trip_id: format!("t{i}"),
                taken: rng.random_bool(0.8),
                usefulness: UsefulnessRatings::from_array(ratings),
                influence: InfoKind::ALL.iter().copied().filter(|_| rng.random_bool(0.3)).collect(),
                note: None,
                submitted_at: t0 + Duration::minutes(rng.random_range(0..60 * 24 * 42)),
            }
        })
        .collect()
}
