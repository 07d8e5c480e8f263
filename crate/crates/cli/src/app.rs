//! Service state: store, road network, pollution field, clock, and the
//! scheduler tick that drives trips forward.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::SystemTime;

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;
use tripwise_core::exposure::{PollutionField, DEFAULT_BACKGROUND};
use tripwise_core::geo::BoundingBox;
use tripwise_core::providers::{compose_reminder, Providers};
use tripwise_core::roadnet::{load_network, RoadNetwork, TrafficOverrides};
use tripwise_core::scheduler::{expand_schedule, scheduler_tick, EventKind, Schedule, Trip, TripStatus};

use crate::config::Config;
use crate::store::{EventRecord, Op, Store, StoreError};

/// Wall clock, or a manually advanced one for demos and tests.
#[derive(Debug)]
pub enum Clock {
    System,
    Manual(Mutex<DateTime<Utc>>),
}

impl Clock {
    pub fn manual(at: DateTime<Utc>) -> Self {
        Self::Manual(Mutex::new(at))
    }

    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Self::System => Utc::now(),
            Self::Manual(t) => *t.lock().unwrap(),
        }
    }

    /// Moves a manual clock; `None` for the system clock.
    pub fn set(&self, at: DateTime<Utc>) -> Option<DateTime<Utc>> {
        match self {
            Self::System => None,
            Self::Manual(t) => {
                *t.lock().unwrap() = at;
                Some(at)
            }
        }
    }
}

pub struct AppState {
    pub cfg: Config,
    pub store: tokio::sync::RwLock<Store>,
    pub clock: Clock,
    pub field: Arc<PollutionField>,
    base_net: Arc<RoadNetwork>,
    net: RwLock<Arc<RoadNetwork>>,
    overrides_seen: Mutex<Option<SystemTime>>,
    tick_lock: tokio::sync::Mutex<()>,
}

pub type Shared = Arc<AppState>;

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Network(#[from] tripwise_core::error::NetworkError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("road network has no nodes")]
    EmptyNetwork,
}

/// Flat background field covering the network with a margin.
fn background_field(net: &RoadNetwork) -> Result<PollutionField, StartError> {
    let pts: Vec<_> = net.nodes().map(|(_, p)| p).collect();
    let bbox = BoundingBox::from_points(&pts)
        .ok_or(StartError::EmptyNetwork)?
        .expanded(2000.0);
    Ok(PollutionField::uniform(&bbox, 2, 2, DEFAULT_BACKGROUND).expect("2x2 field is valid"))
}

impl AppState {
    /// Loads every configured resource and opens the data directory.
    pub fn open(cfg: Config) -> Result<Shared, StartError> {
        let net = load_network(&cfg.network)?.with_snap_radius(cfg.snap_radius_m);
        let field = match &cfg.field {
            Some(p) => PollutionField::load(p)?,
            None => background_field(&net)?,
        };
        let store = Store::open(&cfg.data_dir, cfg.snapshot_every)?;
        let clock = match cfg.manual_clock {
            Some(t) => Clock::manual(t),
            None => Clock::System,
        };
        Ok(Self::assemble(cfg, net, field, store, clock))
    }

    /// Builds state from parts already in memory.
    pub fn assemble(cfg: Config, net: RoadNetwork, field: PollutionField, store: Store, clock: Clock) -> Shared {
        let net = Arc::new(net);
        Arc::new(Self {
            cfg,
            store: tokio::sync::RwLock::new(store),
            clock,
            field: Arc::new(field),
            net: RwLock::new(net.clone()),
            base_net: net,
            overrides_seen: Mutex::new(None),
            tick_lock: tokio::sync::Mutex::new(()),
        })
    }

    /// The network with the latest traffic overrides applied.
    pub fn network(&self) -> Arc<RoadNetwork> {
        self.net.read().unwrap().clone()
    }

    pub fn providers(&self) -> Providers {
        match &self.cfg.providers_dir {
            Some(dir) => Providers::load_dir(dir),
            None => Providers::empty(),
        }
    }

    /// Re-reads the overrides file when its modification time changes. A
    /// file that fails to load leaves the previous network in place.
    fn refresh_overrides(&self) {
        let Some(path) = &self.cfg.traffic_overrides else {
            return;
        };
        let stamp = std::fs::metadata(path).and_then(|m| m.modified()).ok();
        let mut seen = self.overrides_seen.lock().unwrap();
        if *seen == stamp {
            return;
        }
        let next = match stamp {
            None => Ok(self.base_net.clone()),
            Some(_) => TrafficOverrides::load(path)
                .and_then(|o| self.base_net.with_overrides(&o))
                .map(Arc::new),
        };
        match next {
            Ok(net) => {
                *self.net.write().unwrap() = net;
                *seen = stamp;
                tracing::info!(path = %path.display(), "traffic overrides reloaded");
            }
            Err(e) => tracing::warn!(path = %path.display(), error = %e, "traffic overrides rejected"),
        }
    }

    /// Installs an overrides table directly, bypassing the file.
    pub fn set_overrides(&self, o: &TrafficOverrides) -> Result<(), tripwise_core::error::NetworkError> {
        let net = self.base_net.with_overrides(o)?;
        *self.net.write().unwrap() = Arc::new(net);
        Ok(())
    }
}

/// Trips for `s` between yesterday and the horizon that have not arrived
/// yet and are not already stored.
pub fn upcoming_trips(
    s: &Schedule,
    now: DateTime<Utc>,
    horizon_days: i64,
    existing: &impl Fn(&str) -> bool,
) -> Vec<Trip> {
    let start = (now - Duration::days(1)).date_naive();
    let end = (now + Duration::days(horizon_days)).date_naive();
    expand_schedule(s, start, end)
        .map(|ts| {
            ts.into_iter()
                .filter(|t| t.planned_arrival > now && !existing(&t.id))
                .collect()
        })
        .unwrap_or_default()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TickReport {
    pub at: Option<DateTime<Utc>>,
    /// Another tick was already running.
    pub skipped: bool,
    pub new_trips: usize,
    pub events: Vec<String>,
}

/// One scheduler pass at the clock's current time.
pub async fn run_tick(state: &AppState) -> Result<TickReport, StoreError> {
    let Ok(_guard) = state.tick_lock.try_lock() else {
        return Ok(TickReport {
            skipped: true,
            ..TickReport::default()
        });
    };
    state.refresh_overrides();
    let now = state.clock.now();
    let net = state.network();
    let mut store = state.store.write().await;

    // keep the rolling window of trips filled
    let data = store.data();
    let mut fresh = Vec::new();
    for s in data.schedules.values() {
        fresh.extend(upcoming_trips(s, now, state.cfg.horizon_days, &|id| {
            data.trips.contains_key(id)
        }));
    }
    let new_trips = fresh.len();
    if !fresh.is_empty() {
        store.commit(Op::PutTrips { trips: fresh })?;
    }

    let data = store.data();
    let schedules: HashMap<String, Schedule> = data.schedules.clone().into_iter().collect();
    let before: Vec<Trip> = data.trips.values().filter(|t| t.status.is_open()).cloned().collect();
    let mut trips = before.clone();
    let events = scheduler_tick(&mut trips, &schedules, &net, now, &state.cfg.scheduler);

    let first_seq = data.events.keys().next_back().map_or(1, |k| k + 1);
    let providers = events
        .iter()
        .any(|e| matches!(e.kind, EventKind::ReminderDue { .. }))
        .then(|| state.providers());
    let mut records = Vec::with_capacity(events.len());
    for (next_seq, ev) in (first_seq..).zip(events) {
        let trip = trips
            .iter()
            .find(|t| t.id == ev.trip_id)
            .expect("events come from these trips");
        let reminder = match (&ev.kind, &providers, schedules.get(&trip.schedule_id)) {
            (EventKind::ReminderDue { .. }, Some(p), Some(s)) => Some(compose_reminder(
                trip,
                s,
                p,
                &state.field,
                &net,
                now,
                &state.cfg.reminder,
            )),
            _ => None,
        };
        records.push(EventRecord {
            id: format!("ev-{next_seq}"),
            seq: next_seq,
            trip_id: trip.id.clone(),
            user_id: trip.user_id.clone(),
            created_at: ev.at,
            kind: ev.kind,
            reminder,
            delivered: false,
        });
    }
    let changed: Vec<Trip> = trips
        .into_iter()
        .zip(&before)
        .filter(|(a, b)| a != *b)
        .map(|(a, _)| a)
        .collect();
    let ids = records.iter().map(|r| r.id.clone()).collect();
    if !changed.is_empty() || !records.is_empty() {
        store.commit(Op::Tick {
            trips: changed,
            events: records,
        })?;
    }
    Ok(TickReport {
        at: Some(now),
        skipped: false,
        new_trips,
        events: ids,
    })
}

/// Ticks on the configured interval until the task is dropped.
pub async fn scheduler_loop(state: Shared) {
    let mut every = tokio::time::interval(std::time::Duration::from_secs(state.cfg.tick_interval_s));
    every.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    loop {
        every.tick().await;
        match run_tick(&state).await {
            Ok(r) if !r.events.is_empty() => tracing::info!(events = r.events.len(), "tick"),
            Ok(_) => {}
            Err(e) => tracing::error!(error = %e, "tick failed"),
        }
    }
}

/// Ids of pending trips of `schedule_id`; these go when it is edited or
/// removed, while trips already under way stay as history.
pub fn pending_trip_ids(store: &Store, schedule_id: &str) -> Vec<String> {
    store
        .data()
        .trips
        .values()
        .filter(|t| t.schedule_id == schedule_id && t.status == TripStatus::Pending)
        .map(|t| t.id.clone())
        .collect()
}

/// Writes the exports and returns the directory.
pub async fn export(state: &AppState, out: Option<&Path>) -> Result<PathBuf, StoreError> {
    let dir = out.map_or_else(|| state.cfg.data_dir.join("export"), Path::to_path_buf);
    state.store.read().await.export(&dir)?;
    Ok(dir)
}
