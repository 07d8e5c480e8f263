//! Routing, exposure-aware route choice, departure scheduling, pre-trip
//! information and feedback analytics for a small navigation service.

pub mod analytics;
pub mod avoidance;
pub mod error;
pub mod exposure;
pub mod fixtures;
pub mod geo;
pub mod providers;
pub mod roadnet;
pub mod scheduler;
pub mod stats;

pub use avoidance::{closure_avoiding_route, constrained_oracle, spiral_waypoints, SpiralConfig, TravelMedium};
pub use error::{ExposureError, GeoError, NetworkError, ProviderError, RouteError, ScheduleError, StatsError};
pub use exposure::{route_avg_pm25, safest_route, PollutionField};
pub use geo::{haversine_m, BoundingBox, GeoPoint};
pub use roadnet::{
    fastest_route, load_closures, load_network, DurationTriple, Edge, RoadClosure, RoadNetwork, Route,
    TrafficOverrides, TrafficScenario,
};
pub use scheduler::{scheduler_tick, time_to_start, Schedule, SchedulerConfig, SchedulerEvent, Trip, TripStatus};
pub use stats::{anova_oneway, kendall_tau, pearson};
