//! Recurring schedules, trip expansion, departure-time calculation and the
//! periodic tick that turns trip state into reminder, traffic-change and
//! feedback events.

use std::collections::HashMap;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, TimeZone, Utc, Weekday};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::avoidance::TravelMedium;
use crate::error::ScheduleError;
use crate::geo::GeoPoint;
use crate::roadnet::{fastest_route, RoadNetwork, TrafficScenario};

pub use crate::roadnet::DurationTriple;

pub const ALLOWED_LEADS_MIN: [u32; 3] = [10, 15, 30];
pub const DEFAULT_TIMEZONE: &str = "America/Denver";
pub const MAX_WINDOW_DAYS: i64 = 56;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceCategory {
    Home,
    Work,
    Shopping,
    Gym,
    Medical,
    School,
    Visits,
    Outdoors,
    CoffeeBar,
    Other,
}

impl PlaceCategory {
    pub const ALL: [PlaceCategory; 10] = [
        Self::Home,
        Self::Work,
        Self::Shopping,
        Self::Gym,
        Self::Medical,
        Self::School,
        Self::Visits,
        Self::Outdoors,
        Self::CoffeeBar,
        Self::Other,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Home => "home",
            Self::Work => "work",
            Self::Shopping => "shopping",
            Self::Gym => "gym",
            Self::Medical => "medical",
            Self::School => "school",
            Self::Visits => "visits",
            Self::Outdoors => "outdoors",
            Self::CoffeeBar => "coffee_bar",
            Self::Other => "other",
        }
    }
}

fn default_zone() -> String {
    DEFAULT_TIMEZONE.to_string()
}

/// A recurring trip a user takes to one destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub id: String,
    pub user_id: String,
    pub name: String,
    pub category: PlaceCategory,
    pub origin: GeoPoint,
    pub destination: GeoPoint,
    pub medium: TravelMedium,
    pub days: Vec<Weekday>,
    /// Local wall-clock arrival time.
    pub arrival_time: NaiveTime,
    pub reminder_lead_min: u32,
    #[serde(default = "default_zone")]
    pub timezone: String,
}

impl Schedule {
    /// Checks invariants and sorts/deduplicates `days`.
    pub fn validate(&mut self) -> Result<(), ScheduleError> {
        if self.days.is_empty() {
            return Err(ScheduleError::NoDays);
        }
        self.days.sort_by_key(|d| d.num_days_from_monday());
        self.days.dedup();
        if !ALLOWED_LEADS_MIN.contains(&self.reminder_lead_min) {
            return Err(ScheduleError::InvalidLead(self.reminder_lead_min));
        }
        self.zone()?;
        Ok(())
    }

    pub fn zone(&self) -> Result<Tz, ScheduleError> {
        self.timezone
            .parse()
            .map_err(|_| ScheduleError::UnknownZone(self.timezone.clone()))
    }

    pub fn reminder_lead(&self) -> Duration {
        Duration::minutes(i64::from(self.reminder_lead_min))
    }

    /// UTC instant of the local arrival time on `date`. Arrival times that
    /// fall in a DST gap move forward one hour.
    pub fn arrival_on(&self, date: NaiveDate) -> Result<DateTime<Utc>, ScheduleError> {
        let tz = self.zone()?;
        let local = date.and_time(self.arrival_time);
        let resolved = tz
            .from_local_datetime(&local)
            .earliest()
            .or_else(|| tz.from_local_datetime(&(local + Duration::hours(1))).earliest())
            .expect("a one-hour shift always leaves a DST gap");
        Ok(resolved.with_timezone(&Utc))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripStatus {
    Pending,
    Reminded,
    AwaitingFeedback,
    Closed,
}

impl TripStatus {
    pub fn is_open(self) -> bool {
        matches!(self, Self::Pending | Self::Reminded)
    }
}

/// One dated occurrence of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub id: String,
    pub schedule_id: String,
    pub user_id: String,
    pub date: NaiveDate,
    pub planned_arrival: DateTime<Utc>,
    /// Set by the first successful tick.
    pub computed_departure: Option<DateTime<Utc>>,
    pub status: TripStatus,
    /// Unclamped departure sent with the reminder or last traffic change.
    #[serde(default)]
    pub announced_departure: Option<DateTime<Utc>>,
    #[serde(default)]
    pub announced_branch: Option<DepartureBranch>,
}

impl Trip {
    pub fn trip_id(schedule_id: &str, date: NaiveDate) -> String {
        format!("{schedule_id}@{date}")
    }

    /// Moves the status forward; moving backward is an error and staying
    /// put is a no-op.
    pub fn advance(&mut self, to: TripStatus) -> Result<(), ScheduleError> {
        if to < self.status {
            return Err(ScheduleError::BackwardTransition { from: self.status, to });
        }
        self.status = to;
        Ok(())
    }
}

/// Pending trips for every scheduled weekday in `[start, end]`.
pub fn expand_schedule(s: &Schedule, start: NaiveDate, end: NaiveDate) -> Result<Vec<Trip>, ScheduleError> {
    if end < start {
        return Err(ScheduleError::InvertedWindow);
    }
    let days = (end - start).num_days() + 1;
    if days > MAX_WINDOW_DAYS {
        return Err(ScheduleError::WindowTooLong(days));
    }
    start
        .iter_days()
        .take(days as usize)
        .filter(|d| s.days.contains(&d.weekday()))
        .map(|date| {
            Ok(Trip {
                id: Trip::trip_id(&s.id, date),
                schedule_id: s.id.clone(),
                user_id: s.user_id.clone(),
                date,
                planned_arrival: s.arrival_on(date)?,
                computed_departure: None,
                status: TripStatus::Pending,
                announced_departure: None,
                announced_branch: None,
            })
        })
        .collect()
}

/// Fastest-route duration under each scenario. The three paths may differ.
pub fn trip_durations(net: &RoadNetwork, s: &Schedule) -> Result<DurationTriple, ScheduleError> {
    let mut d = DurationTriple::default();
    for scenario in TrafficScenario::ALL {
        let r = fastest_route(net, &s.origin, &s.destination, scenario)?;
        match scenario {
            TrafficScenario::Optimistic => d.optimistic = r.duration(scenario),
            TrafficScenario::Best => d.best = r.duration(scenario),
            TrafficScenario::Pessimistic => d.pessimistic = r.duration(scenario),
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// Arrivals at most this far away use current (best-scenario) traffic.
    pub soon_threshold_min: i64,
    /// Minimum departure shift reported as a traffic change.
    pub change_threshold_min: i64,
    /// Delay after planned arrival before asking for feedback.
    pub feedback_delay_min: i64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            soon_threshold_min: 60,
            change_threshold_min: 5,
            feedback_delay_min: 15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepartureBranch {
    /// Arrival is close: use current traffic.
    Soon,
    /// Arrival is far off: plan for the worst case.
    Far,
}

impl DepartureBranch {
    fn scenario(self) -> TrafficScenario {
        match self {
            Self::Soon => TrafficScenario::Best,
            Self::Far => TrafficScenario::Pessimistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Departure {
    /// When to leave, never earlier than `now`.
    pub at: DateTime<Utc>,
    /// Departure before clamping to `now`.
    pub ideal: DateTime<Utc>,
    pub branch: DepartureBranch,
    /// The trip cannot be made on time any more.
    pub late: bool,
}

pub fn seconds(s: f64) -> Duration {
    Duration::milliseconds((s * 1000.0).round() as i64)
}

pub fn time_to_start(
    d: &DurationTriple,
    planned_arrival: DateTime<Utc>,
    now: DateTime<Utc>,
    cfg: &SchedulerConfig,
) -> Result<Departure, ScheduleError> {
    if now >= planned_arrival {
        return Err(ScheduleError::ArrivalPassed);
    }
    let branch = if planned_arrival - now <= Duration::minutes(cfg.soon_threshold_min) {
        DepartureBranch::Soon
    } else {
        DepartureBranch::Far
    };
    let ideal = planned_arrival - seconds(d.get(branch.scenario()));
    Ok(Departure {
        at: ideal.max(now),
        ideal,
        branch,
        late: ideal < now,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    ReminderDue {
        departure: Option<DateTime<Utc>>,
        durations: Option<DurationTriple>,
        late: bool,
    },
    TrafficChange {
        previous: DateTime<Utc>,
        current: DateTime<Utc>,
        durations: DurationTriple,
    },
    FeedbackDue,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ReminderDue { .. } => "reminder_due",
            Self::TrafficChange { .. } => "traffic_change",
            Self::FeedbackDue => "feedback_due",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerEvent {
    pub trip_id: String,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Advances every open trip to `now`, mutating status and returning new
/// events. Routing failures for a trip degrade to a reminder without
/// durations, timed as if the trip took no time.
pub fn scheduler_tick(
    trips: &mut [Trip],
    schedules: &HashMap<String, Schedule>,
    net: &RoadNetwork,
    now: DateTime<Utc>,
    cfg: &SchedulerConfig,
) -> Vec<SchedulerEvent> {
    let mut events = Vec::new();
    let mut cache: HashMap<&str, Option<DurationTriple>> = HashMap::new();
    for trip in trips.iter_mut() {
        if !trip.status.is_open() {
            continue;
        }
        let emit = |kind| SchedulerEvent {
            trip_id: trip.id.clone(),
            at: now,
            kind,
        };
        if now >= trip.planned_arrival + Duration::minutes(cfg.feedback_delay_min) {
            events.push(emit(EventKind::FeedbackDue));
            trip.status = TripStatus::AwaitingFeedback;
            continue;
        }
        if now >= trip.planned_arrival {
            continue;
        }
        let Some(schedule) = schedules.get(&trip.schedule_id) else {
            continue;
        };
        let durations = *cache
            .entry(schedule.id.as_str())
            .or_insert_with(|| trip_durations(net, schedule).ok());

        let Some(durations) = durations else {
            if trip.status == TripStatus::Pending && now >= trip.planned_arrival - schedule.reminder_lead() {
                events.push(emit(EventKind::ReminderDue {
                    departure: None,
                    durations: None,
                    late: false,
                }));
                trip.status = TripStatus::Reminded;
            }
            continue;
        };
        let dep = time_to_start(&durations, trip.planned_arrival, now, cfg).expect("now precedes planned arrival");
        trip.computed_departure = Some(dep.at);

        match trip.status {
            TripStatus::Pending if now >= dep.at - schedule.reminder_lead() => {
                events.push(emit(EventKind::ReminderDue {
                    departure: Some(dep.at),
                    durations: Some(durations),
                    late: dep.late,
                }));
                trip.status = TripStatus::Reminded;
                trip.announced_departure = Some(dep.ideal);
                trip.announced_branch = Some(dep.branch);
            }
            TripStatus::Reminded => {
                let (Some(previous), Some(branch)) = (trip.announced_departure, trip.announced_branch) else {
                    // reminded without durations; start tracking now
                    trip.announced_departure = Some(dep.ideal);
                    trip.announced_branch = Some(dep.branch);
                    continue;
                };
                // compare within the announced branch so only traffic moves it
                let current = trip.planned_arrival - seconds(durations.get(branch.scenario()));
                if (current - previous).abs() > Duration::minutes(cfg.change_threshold_min) {
                    events.push(emit(EventKind::TrafficChange {
                        previous,
                        current,
                        durations,
                    }));
                    trip.announced_departure = Some(current);
                }
            }
            _ => {}
        }
    }
    events
}
