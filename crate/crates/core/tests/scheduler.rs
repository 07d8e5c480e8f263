mod support;

use std::collections::HashMap;

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, Utc, Weekday};
use tripwise_core::avoidance::TravelMedium;
use tripwise_core::fixtures::grid_node_id;
use tripwise_core::geo::GeoPoint;
use tripwise_core::roadnet::{load_network, Edge, NodeRecord, RoadNetwork, TrafficOverrides, TrafficScenario};
use tripwise_core::scheduler::{
    expand_schedule, scheduler_tick, time_to_start, trip_durations, DepartureBranch, DurationTriple, EventKind,
    PlaceCategory, Schedule, SchedulerConfig, SchedulerEvent, Trip, TripStatus,
};

const A: GeoPoint = GeoPoint {
    lat: 39.70,
    lon: -105.0,
};
const B: GeoPoint = GeoPoint {
    lat: 39.70,
    lon: -104.99,
};

fn line(free_flow_s: f64, mult: [f64; 3]) -> RoadNetwork {
    RoadNetwork::new(
        vec![
            NodeRecord {
                id: "a".into(),
                lat: A.lat,
                lon: A.lon,
            },
            NodeRecord {
                id: "b".into(),
                lat: B.lat,
                lon: B.lon,
            },
        ],
        vec![Edge {
            id: "ab".into(),
            from: "a".into(),
            to: "b".into(),
            length_m: 856.0,
            free_flow_s,
            mult,
        }],
    )
    .unwrap()
}

fn schedule(lead: u32) -> Schedule {
    Schedule {
        id: "s1".into(),
        user_id: "u1".into(),
        name: "Work".into(),
        category: PlaceCategory::Work,
        origin: A,
        destination: B,
        medium: TravelMedium::Driving,
        days: vec![Weekday::Mon],
        arrival_time: NaiveTime::from_hms_opt(8, 0, 0).unwrap(),
        reminder_lead_min: lead,
        timezone: "America/Denver".into(),
    }
}

fn monday() -> NaiveDate {
    "2023-02-06".parse().unwrap()
}

struct Clock {
    trips: Vec<Trip>,
    schedules: HashMap<String, Schedule>,
    log: Vec<SchedulerEvent>,
}

impl Clock {
    fn new(s: Schedule) -> Self {
        let trips = expand_schedule(&s, monday(), monday()).unwrap();
        Self {
            trips,
            schedules: HashMap::from([(s.id.clone(), s)]),
            log: Vec::new(),
        }
    }

    fn run(&mut self, net: &RoadNetwork, from: DateTime<Utc>, to: DateTime<Utc>, step: Duration) {
        let mut now = from;
        while now <= to {
            let ev = scheduler_tick(&mut self.trips, &self.schedules, net, now, &SchedulerConfig::default());
            self.log.extend(ev);
            now += step;
        }
    }

    fn times(&self, kind: &str) -> Vec<DateTime<Utc>> {
        self.log
            .iter()
            .filter(|e| e.kind.name() == kind)
            .map(|e| e.at)
            .collect()
    }
}

fn arrival() -> DateTime<Utc> {
    "2023-02-06T15:00:00Z".parse().unwrap()
}

#[test]
fn reminder_fires_once_at_departure_minus_lead() {
    // best 20 min, pessimistic 25 min: everything happens inside the soon window
    let net = line(1200.0, [0.9, 1.0, 1.25]);
    for lead in [10, 15, 30] {
        let mut c = Clock::new(schedule(lead));
        c.run(
            &net,
            arrival() - Duration::hours(6),
            arrival() + Duration::minutes(30),
            Duration::minutes(1),
        );
        let due = c.times("reminder_due");
        assert_eq!(
            due,
            [arrival() - Duration::minutes(20 + i64::from(lead))],
            "lead {lead}"
        );
    }
}

#[test]
fn far_branch_reminder_uses_pessimistic() {
    // best 60 min, pessimistic 75 min: reminder lands before the soon window
    let net = line(3600.0, [0.9, 1.0, 1.25]);
    let mut c = Clock::new(schedule(10));
    c.run(&net, arrival() - Duration::hours(6), arrival(), Duration::minutes(1));
    assert_eq!(c.times("reminder_due"), [arrival() - Duration::minutes(85)]);
    match &c.log[0].kind {
        EventKind::ReminderDue { departure, late, .. } => {
            assert_eq!(*departure, Some(arrival() - Duration::minutes(75)));
            assert!(!late);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn feedback_due_fifteen_minutes_after_arrival() {
    let net = line(1200.0, [0.9, 1.0, 1.25]);
    let mut c = Clock::new(schedule(15));
    c.run(
        &net,
        arrival() - Duration::hours(2),
        arrival() + Duration::hours(2),
        Duration::minutes(1),
    );
    assert_eq!(c.times("feedback_due"), [arrival() + Duration::minutes(15)]);
    assert_eq!(c.trips[0].status, TripStatus::AwaitingFeedback);
    assert_eq!(c.log.len(), 2);
}

#[test]
fn branch_switches_at_threshold() {
    let d = DurationTriple {
        optimistic: 900.0,
        best: 1200.0,
        pessimistic: 1800.0,
    };
    let cfg = SchedulerConfig::default();
    let at = |mins: i64| time_to_start(&d, arrival(), arrival() - Duration::minutes(mins), &cfg).unwrap();
    assert_eq!(at(60).branch, DepartureBranch::Soon);
    assert_eq!(at(60).at, arrival() - Duration::minutes(20));
    let just_over = time_to_start(
        &d,
        arrival(),
        arrival() - Duration::minutes(60) - Duration::seconds(1),
        &cfg,
    )
    .unwrap();
    assert_eq!(just_over.branch, DepartureBranch::Far);
    assert_eq!(just_over.at, arrival() - Duration::minutes(30));
    assert_eq!(at(300).at, arrival() - Duration::minutes(30));
    let late = at(10);
    assert!(late.late);
    assert_eq!(late.at, arrival() - Duration::minutes(10));
}

fn traffic_replay(factor: f64) -> Vec<SchedulerEvent> {
    let net = line(1200.0, [0.9, 1.0, 1.25]);
    let mut c = Clock::new(schedule(15));
    let fire = arrival() - Duration::minutes(35);
    c.run(&net, fire - Duration::minutes(5), fire, Duration::minutes(1));
    assert_eq!(c.trips[0].status, TripStatus::Reminded);
    let mut o = TrafficOverrides::default();
    o.0.insert("ab".into(), factor);
    let slower = net.with_overrides(&o).unwrap();
    c.log.clear();
    c.run(
        &slower,
        fire + Duration::minutes(1),
        fire + Duration::minutes(10),
        Duration::minutes(1),
    );
    c.log
}

#[test]
fn traffic_change_fires_only_beyond_five_minutes() {
    // 20 min × 1.35 = 27 min: departure 7 min earlier
    let ev = traffic_replay(1.35);
    assert_eq!(ev.len(), 1);
    match &ev[0].kind {
        EventKind::TrafficChange { previous, current, .. } => {
            assert_eq!(*previous - *current, Duration::minutes(7));
        }
        other => panic!("{other:?}"),
    }
    // 20 × 1.2 = 24 min: 4 min shift, silent
    assert!(traffic_replay(1.2).is_empty());
    // exactly 5 min is not "more than" 5
    assert!(traffic_replay(1.25).is_empty());
}

#[test]
fn ticks_are_idempotent() {
    let net = line(1200.0, [0.9, 1.0, 1.25]);
    let mut c = Clock::new(schedule(10));
    let now = arrival() - Duration::minutes(25);
    c.run(&net, now, now, Duration::minutes(1));
    let before = c.trips.clone();
    c.run(&net, now, now, Duration::minutes(1));
    assert_eq!(c.times("reminder_due").len(), 1);
    assert_eq!(c.trips, before);
}

#[test]
fn unroutable_trip_still_gets_a_reminder() {
    let net = line(1200.0, [0.9, 1.0, 1.25]);
    let mut s = schedule(15);
    s.origin = B;
    s.destination = A;
    let mut c = Clock::new(s);
    c.run(
        &net,
        arrival() - Duration::hours(1),
        arrival() + Duration::minutes(15),
        Duration::minutes(1),
    );
    assert_eq!(c.times("reminder_due"), [arrival() - Duration::minutes(15)]);
    assert!(matches!(
        c.log[0].kind,
        EventKind::ReminderDue {
            departure: None,
            durations: None,
            ..
        }
    ));
    assert_eq!(c.times("feedback_due").len(), 1);
}

#[test]
fn grid_home_to_work_durations_match_bellman_ford() {
    let net = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/denver_grid.json")).unwrap();
    let mut s = schedule(15);
    s.origin = net.node(&grid_node_id(2, 3)).unwrap();
    s.destination = net.node(&grid_node_id(16, 14)).unwrap();
    let d = trip_durations(&net, &s).unwrap();
    assert!(d.optimistic <= d.best && d.best <= d.pessimistic);
    for (scenario, got) in [
        (TrafficScenario::Optimistic, d.optimistic),
        (TrafficScenario::Best, d.best),
        (TrafficScenario::Pessimistic, d.pessimistic),
    ] {
        let want = support::bellman_ford(&net, &grid_node_id(2, 3), scenario)[&grid_node_id(16, 14)];
        assert!((got - want).abs() <= 1e-9 * want);
    }
}

#[test]
fn every_day_for_six_weeks() {
    let mut s = schedule(10);
    s.days = vec![
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];
    let trips = expand_schedule(&s, monday(), monday() + Duration::days(41)).unwrap();
    assert_eq!(trips.len(), 42);
    assert!(trips.iter().all(|t| t.status == TripStatus::Pending));
}
