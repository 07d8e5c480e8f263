//! Seeded synthetic cohort: users, schedules, the trips they expand to,
//! post-trip feedback and daily wellbeing diaries.
//!
//! Rater archetypes:
//! - silent: schedules trips but never answers
//! - constant: answers every question with the same value
//! - normal: noisy ratings around per-item means, nudged up for
//!   construction information when the trip passes near the site
//!
//! Wellbeing ratings are built so their sample correlation with the day's
//! feedback count lands on a configured target before rounding to 1–5.

use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveTime, Weekday};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use tripwise_core::analytics::{
    distance_profile, FeedbackResponse, Feeling, InfoKind, UsefulnessRatings, WellbeingRecord,
};
use tripwise_core::avoidance::TravelMedium;
use tripwise_core::fixtures::{construction_center, highway_point};
use tripwise_core::geo::{haversine_m, midpoint};
use tripwise_core::scheduler::{expand_schedule, PlaceCategory, Schedule, Trip, TripStatus, DEFAULT_TIMEZONE};

use crate::store::{write_exports, StoreError, User};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub users: usize,
    pub weeks: u32,
    pub seed: u64,
    pub start: NaiveDate,
    /// Fractions of the cohort in each non-normal archetype.
    pub silent_fraction: f64,
    pub constant_fraction: f64,
    /// Share of all responses the constant raters should produce.
    pub constant_share: f64,
    /// Per-user answer rate range for normal raters.
    pub response_rate: (f64, f64),
    /// Mean straight-line trip length.
    pub mean_distance_m: f64,
    /// Probability a user fills in the diary on a given day.
    pub diary_rate: f64,
    /// Target correlation between daily feedback count and each feeling,
    /// in [`Feeling::ALL`] order.
    pub feeling_targets: [f64; 5],
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            users: 41,
            weeks: 6,
            seed: 7,
            start: NaiveDate::from_ymd_opt(2023, 2, 6).unwrap(),
            silent_fraction: 4.0 / 41.0,
            constant_fraction: 3.0 / 41.0,
            constant_share: 0.16,
            response_rate: (0.22, 0.46),
            mean_distance_m: 7700.0,
            diary_rate: 0.7,
            feeling_targets: [0.164, -0.224, -0.180, 0.308, -0.006],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Silent,
    Constant,
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub users: Vec<User>,
    pub archetypes: Vec<Archetype>,
    pub schedules: Vec<Schedule>,
    pub trips: Vec<Trip>,
    pub feedback: Vec<FeedbackResponse>,
    pub wellbeing: Vec<WellbeingRecord>,
}

impl Cohort {
    pub fn constant_raters(&self) -> Vec<&str> {
        self.users
            .iter()
            .zip(&self.archetypes)
            .filter(|(_, a)| **a == Archetype::Constant)
            .map(|(u, _)| u.id.as_str())
            .collect()
    }

    pub fn write(&self, out: &Path) -> Result<(), StoreError> {
        write_exports(
            out,
            &self.users,
            &self.schedules,
            &self.trips,
            &self.feedback,
            &self.wellbeing,
        )
    }
}

const WEEKDAYS: [Weekday; 5] = [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri];
const ALL_DAYS: [Weekday; 7] = [
    Weekday::Mon,
    Weekday::Tue,
    Weekday::Wed,
    Weekday::Thu,
    Weekday::Fri,
    Weekday::Sat,
    Weekday::Sun,
];

/// (category, pick weight, distance multiplier, arrival hour range)
const PLACES: [(PlaceCategory, f64, f64, (u32, u32)); 10] = [
    (PlaceCategory::Home, 0.20, 1.15, (16, 20)),
    (PlaceCategory::Work, 0.24, 1.35, (7, 10)),
    (PlaceCategory::Shopping, 0.12, 0.55, (10, 19)),
    (PlaceCategory::Gym, 0.08, 0.6, (6, 19)),
    (PlaceCategory::Medical, 0.05, 0.9, (9, 16)),
    (PlaceCategory::School, 0.08, 0.8, (7, 9)),
    (PlaceCategory::Visits, 0.08, 1.1, (11, 20)),
    (PlaceCategory::Outdoors, 0.05, 1.2, (8, 17)),
    (PlaceCategory::CoffeeBar, 0.05, 0.45, (7, 11)),
    (PlaceCategory::Other, 0.05, 1.0, (9, 18)),
];

/// Mean usefulness per item before user and response noise.
const ITEM_MEANS: [f64; 6] = [3.3, 3.1, 3.5, 3.8, 3.4, 4.0];

fn weighted_place(rng: &mut impl Rng) -> usize {
    let total: f64 = PLACES.iter().map(|p| p.1).sum();
    let mut x = rng.random_range(0.0..total);
    for (i, p) in PLACES.iter().enumerate() {
        if x < p.1 {
            return i;
        }
        x -= p.1;
    }
    PLACES.len() - 1
}

fn pick_days(rng: &mut impl Rng, category: PlaceCategory) -> Vec<Weekday> {
    let (pool, n): (&[Weekday], usize) = match category {
        PlaceCategory::Work | PlaceCategory::School => (&WEEKDAYS, rng.random_range(1..=4)),
        PlaceCategory::Home => (&ALL_DAYS, rng.random_range(1..=2)),
        _ => (&ALL_DAYS, rng.random_range(1..=2)),
    };
    let mut days: Vec<Weekday> = pool.choose_multiple(rng, n).copied().collect();
    days.sort_by_key(|d| d.num_days_from_monday());
    days
}

fn clamp_rating(x: f64) -> u8 {
    x.round().clamp(1.0, 5.0) as u8
}

/// Runs the generator. Equal configs give equal cohorts.
pub fn simulate(cfg: &SimConfig) -> Cohort {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.users;
    let n_silent = (cfg.silent_fraction * n as f64).round() as usize;
    let n_constant = ((cfg.constant_fraction * n as f64).round() as usize).min(n - n_silent.min(n));
    let mut archetypes: Vec<Archetype> = (0..n)
        .map(|i| match i {
            i if i < n_silent => Archetype::Silent,
            i if i < n_silent + n_constant => Archetype::Constant,
            _ => Archetype::Normal,
        })
        .collect();
    archetypes.shuffle(&mut rng);

    let epoch = cfg.start.and_hms_opt(0, 0, 0).unwrap().and_utc();
    let end = cfg.start + Duration::days(i64::from(cfg.weeks) * 7 - 1);
    let site = construction_center();
    let highway = highway_point();
    let sigma = 0.55f64;
    let dist = LogNormal::new(cfg.mean_distance_m.ln() - sigma * sigma / 2.0, sigma).unwrap();

    let mut users = Vec::with_capacity(n);
    let mut schedules = Vec::new();
    let mut next_schedule = 1;
    for (i, kind) in archetypes.iter().enumerate() {
        let id = format!("u-{:03}", i + 1);
        users.push(User {
            id: id.clone(),
            phone: format!("+1720555{:04}", i + 1),
            name: format!("Participant {}", i + 1),
            created_at: epoch,
        });
        // homes cluster around the construction zone
        let home = site.offset(rng.random_range(-3500.0..3500.0), rng.random_range(-3500.0..3500.0));
        let count = match kind {
            Archetype::Constant => rng.random_range(4..=6),
            _ => rng.random_range(2..=5) + usize::from(rng.random_bool(0.3)),
        };
        for _ in 0..count {
            let (category, _, mult, hours) = PLACES[weighted_place(&mut rng)];
            let d = (dist.sample(&mut rng) * mult).clamp(300.0, 40_000.0);
            let bearing = rng.random_range(0.0..std::f64::consts::TAU);
            let away = home.offset(d * bearing.sin(), d * bearing.cos());
            let (origin, destination) = if category == PlaceCategory::Home {
                (away, home)
            } else {
                (home, away)
            };
            let medium = if rng.random_bool(0.85) {
                TravelMedium::Driving
            } else {
                *[TravelMedium::Bus, TravelMedium::Biking, TravelMedium::Walking]
                    .choose(&mut rng)
                    .unwrap()
            };
            schedules.push(Schedule {
                id: format!("sch-{next_schedule}"),
                user_id: id.clone(),
                name: format!("{} {}", category.as_str(), next_schedule),
                category,
                origin,
                destination,
                medium,
                days: pick_days(&mut rng, category),
                arrival_time: NaiveTime::from_hms_opt(
                    rng.random_range(hours.0..=hours.1),
                    15 * rng.random_range(0..4),
                    0,
                )
                .unwrap(),
                reminder_lead_min: *[10, 15, 30].choose(&mut rng).unwrap(),
                timezone: DEFAULT_TIMEZONE.into(),
            });
            next_schedule += 1;
        }
    }

    let mut trips: Vec<Trip> = Vec::new();
    if cfg.weeks > 0 {
        for s in &schedules {
            trips.extend(expand_schedule(s, cfg.start, end).expect("simulated schedules are valid"));
        }
    }
    let schedule_of = |t: &Trip| &schedules[t.schedule_id[4..].parse::<usize>().unwrap() - 1];

    // answers: normal raters first so the constant raters can be sized
    // against their total
    let mut answered: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut normal_total = 0usize;
    for (u, kind) in archetypes.iter().enumerate() {
        if *kind != Archetype::Normal {
            continue;
        }
        let own: Vec<usize> = (0..trips.len()).filter(|&t| trips[t].user_id == users[u].id).collect();
        let rate = rng.random_range(cfg.response_rate.0..=cfg.response_rate.1);
        let k = ((own.len() as f64 * rate).round() as usize).max(5).min(own.len());
        let picked: Vec<usize> = own.choose_multiple(&mut rng, k).copied().collect();
        normal_total += picked.len();
        answered.push((u, picked));
    }
    if n_constant > 0 {
        let want = cfg.constant_share / (1.0 - cfg.constant_share) * normal_total as f64;
        let per_user = (want / n_constant as f64).round() as usize;
        for (u, kind) in archetypes.iter().enumerate() {
            if *kind == Archetype::Constant {
                let own: Vec<usize> = (0..trips.len()).filter(|&t| trips[t].user_id == users[u].id).collect();
                let picked = own
                    .choose_multiple(&mut rng, per_user.min(own.len()))
                    .copied()
                    .collect();
                answered.push((u, picked));
            }
        }
    }
    answered.sort_by_key(|(u, _)| *u);

    let noise = Normal::new(0.0, 0.9).unwrap();
    let user_bias = Normal::new(0.0, 0.45).unwrap();
    let delay: Exp<f64> = Exp::new(1.0 / 45.0).unwrap();
    let mut feedback = Vec::new();
    for (u, mut picked) in answered {
        picked.sort_unstable();
        let constant = archetypes[u] == Archetype::Constant;
        let level = rng.random_range(3..=5u8);
        let bias = user_bias.sample(&mut rng);
        for t in picked {
            let trip = &mut trips[t];
            let s = schedule_of(trip);
            let ratings = if constant {
                UsefulnessRatings::uniform(level)
            } else {
                let near = distance_profile(&s.origin, &s.destination, &site, &highway);
                let mid_to_site = near.construction_center.to_midpoint;
                let mid_to_highway = haversine_m(&midpoint(&s.origin, &s.destination), &highway);
                let mut means = ITEM_MEANS;
                means[0] += 1.2 * (-mid_to_site / 4000.0).exp();
                means[4] += 0.6 * (-mid_to_highway / 4000.0).exp();
                UsefulnessRatings::from_array(std::array::from_fn(|k| {
                    clamp_rating(means[k] + bias + noise.sample(&mut rng))
                }))
            };
            let influence = InfoKind::ALL
                .into_iter()
                .filter(|k| {
                    let lift = f64::from(ratings.get(*k)) - 3.0;
                    let p = 1.0 / (1.0 + (-(-1.6 + 0.9 * lift)).exp());
                    rng.random_bool(p)
                })
                .collect();
            let minutes = 15.0 + delay.sample(&mut rng).min(600.0);
            feedback.push(FeedbackResponse {
                user_id: trip.user_id.clone(),
                trip_id: trip.id.clone(),
                taken: rng.random_bool(0.85),
                usefulness: ratings,
                influence,
                note: None,
                submitted_at: trip.planned_arrival + Duration::seconds((minutes * 60.0).round() as i64),
            });
            trip.status = TripStatus::Closed;
        }
    }
    for t in &mut trips {
        if t.status == TripStatus::Pending {
            t.status = TripStatus::AwaitingFeedback;
        }
    }
    feedback.sort_by(|a, b| (a.submitted_at, &a.trip_id).cmp(&(b.submitted_at, &b.trip_id)));

    let wellbeing = diaries(&mut rng, cfg, &users, &archetypes, &feedback);
    Cohort {
        users,
        archetypes,
        schedules,
        trips,
        feedback,
        wellbeing,
    }
}

/// Unit-variance, zero-mean version of `v`, or `None` when `v` is flat.
fn standardize(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    (sd > 1e-12).then(|| v.iter().map(|x| (x - m) / sd).collect())
}

fn diaries(
    rng: &mut ChaCha8Rng,
    cfg: &SimConfig,
    users: &[User],
    archetypes: &[Archetype],
    feedback: &[FeedbackResponse],
) -> Vec<WellbeingRecord> {
    let zone: chrono_tz::Tz = DEFAULT_TIMEZONE.parse().unwrap();
    let counts = tripwise_core::analytics::daily_feedback_counts(feedback, zone);
    let days = i64::from(cfg.weeks) * 7;
    let mut keys = Vec::new();
    for (u, kind) in users.iter().zip(archetypes) {
        if *kind == Archetype::Silent {
            continue;
        }
        for d in 0..days {
            if rng.random_bool(cfg.diary_rate) {
                keys.push((u.id.clone(), cfg.start + Duration::days(d)));
            }
        }
    }
    if keys.is_empty() {
        return Vec::new();
    }
    let x: Vec<f64> = keys
        .iter()
        .map(|k| counts.get(k).copied().unwrap_or(0) as f64)
        .collect();
    let xs = standardize(&x);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let centers = [3.2, 2.3, 2.2, 3.1, 2.1];
    let mut columns: Vec<Vec<u8>> = Vec::new();
    for (f, &rho) in cfg.feeling_targets.iter().enumerate() {
        let mut e: Vec<f64> = (0..keys.len()).map(|_| unit.sample(rng)).collect();
        let z: Vec<f64> = match (&xs, standardize(&e)) {
            (Some(xs), Some(es)) => {
                // drop the part of the noise that lines up with the counts
                let n = xs.len() as f64;
                let proj = xs.iter().zip(&es).map(|(a, b)| a * b).sum::<f64>() / n;
                for (ei, (a, b)) in e.iter_mut().zip(xs.iter().zip(&es)) {
                    *ei = b - proj * a;
                }
                let e = standardize(&e).unwrap_or_else(|| vec![0.0; xs.len()]);
                xs.iter()
                    .zip(&e)
                    .map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b)
                    .collect()
            }
            _ => e,
        };
        columns.push(z.iter().map(|v| clamp_rating(centers[f] + 0.95 * v)).collect());
    }
    keys.into_iter()
        .enumerate()
        .map(|(i, (user_id, date))| WellbeingRecord {
            user_id,
            date,
            happy: columns[Feeling::Happy as usize][i],
            distressed: columns[Feeling::Distressed as usize][i],
            irritable: columns[Feeling::Irritable as usize][i],
            alert_awake: columns[Feeling::AlertAwake as usize][i],
            lonely: columns[Feeling::Lonely as usize][i],
        })
        .collect()
}
