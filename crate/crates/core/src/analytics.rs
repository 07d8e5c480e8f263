//! Evaluation analytics over exported study data: response filtering,
//! usefulness/influence statistics, distance metrics, scheduling behaviour
//! and the feedback-vs-wellbeing correlation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Datelike, NaiveDate, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::geo::{haversine_m, midpoint, GeoPoint};
use crate::scheduler::{PlaceCategory, Schedule};
use crate::stats::{pearson, pop_std};

/// Information types a traveller can report as having influenced a trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoKind {
    Construction,
    Incidents,
    RoadConditions,
    Weather,
    AirQuality,
}

impl InfoKind {
    pub const ALL: [InfoKind; 5] = [
        Self::Construction,
        Self::Incidents,
        Self::RoadConditions,
        Self::Weather,
        Self::AirQuality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Construction => "construction",
            Self::Incidents => "incidents",
            Self::RoadConditions => "road_conditions",
            Self::Weather => "weather",
            Self::AirQuality => "air_quality",
        }
    }
}

/// 1–5 usefulness ratings for the five information types and the reminder
/// itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsefulnessRatings {
    pub construction: u8,
    pub incidents: u8,
    pub road_conditions: u8,
    pub weather: u8,
    pub air_quality: u8,
    pub reminder: u8,
}

pub const USEFULNESS_ITEMS: [&str; 6] = [
    "construction",
    "incidents",
    "road_conditions",
    "weather",
    "air_quality",
    "reminder",
];

impl UsefulnessRatings {
    pub fn uniform(v: u8) -> Self {
        Self::from_array([v; 6])
    }

    pub fn from_array(a: [u8; 6]) -> Self {
        Self {
            construction: a[0],
            incidents: a[1],
            road_conditions: a[2],
            weather: a[3],
            air_quality: a[4],
            reminder: a[5],
        }
    }

    /// Ratings in [`USEFULNESS_ITEMS`] order.
    pub fn as_array(&self) -> [u8; 6] {
        [
            self.construction,
            self.incidents,
            self.road_conditions,
            self.weather,
            self.air_quality,
            self.reminder,
        ]
    }

    pub fn get(&self, kind: InfoKind) -> u8 {
        self.as_array()[kind as usize]
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        match self.as_array().into_iter().find(|r| !(1..=5).contains(r)) {
            Some(bad) => Err(StatsError::RatingOutOfRange(bad)),
            None => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        self.as_array().iter().map(|&r| f64::from(r)).sum::<f64>() / 6.0
    }
}

/// Post-trip answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub user_id: String,
    pub trip_id: String,
    pub taken: bool,
    pub usefulness: UsefulnessRatings,
    #[serde(default)]
    pub influence: BTreeSet<InfoKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub submitted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feeling {
    Happy,
    Distressed,
    Irritable,
    AlertAwake,
    Lonely,
}

impl Feeling {
    pub const ALL: [Feeling; 5] = [
        Self::Happy,
        Self::Distressed,
        Self::Irritable,
        Self::AlertAwake,
        Self::Lonely,
    ];
}

/// Daily diary ratings (1–5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellbeingRecord {
    pub user_id: String,
    pub date: NaiveDate,
    pub happy: u8,
    pub distressed: u8,
    pub irritable: u8,
    pub alert_awake: u8,
    pub lonely: u8,
}

impl WellbeingRecord {
    pub fn rating(&self, f: Feeling) -> u8 {
        match f {
            Feeling::Happy => self.happy,
            Feeling::Distressed => self.distressed,
            Feeling::Irritable => self.irritable,
            Feeling::AlertAwake => self.alert_awake,
            Feeling::Lonely => self.lonely,
        }
    }
}

/// How a user's consistency score is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserScore {
    /// Population std of the per-response standard deviations.
    #[default]
    StdOfResponseStds,
    /// Population std of every rating the user gave, pooled.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedUser {
    pub user_id: String,
    pub score: f64,
    pub responses: usize,
    /// Excluded only because a single response always scores 0.
    pub single_response: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<FeedbackResponse>,
    pub excluded_users: Vec<ExcludedUser>,
    pub excluded_responses: usize,
    pub user_scores: BTreeMap<String, f64>,
}

impl FilterOutcome {
    pub fn excluded_fraction(&self) -> f64 {
        let total = self.kept.len() + self.excluded_responses;
        if total == 0 {
            0.0
        } else {
            self.excluded_responses as f64 / total as f64
        }
    }
}

pub const DEFAULT_FILTER_THRESHOLD: f64 = 0.05;

/// Drops every response of users whose ratings barely vary.
pub fn filter_low_variance(responses: &[FeedbackResponse], threshold: f64, mode: UserScore) -> FilterOutcome {
    let mut by_user: BTreeMap<&str, Vec<&FeedbackResponse>> = BTreeMap::new();
    for r in responses {
        by_user.entry(r.user_id.as_str()).or_default().push(r);
    }
    let mut user_scores = BTreeMap::new();
    let mut excluded_users = Vec::new();
    for (user, rs) in &by_user {
        let score = match mode {
            UserScore::StdOfResponseStds => {
                let stds: Vec<f64> = rs.iter().map(|r| response_std(&r.usefulness)).collect();
                pop_std(&stds)
            }
            UserScore::Pooled => {
                let all: Vec<f64> = rs.iter().flat_map(|r| r.usefulness.as_array()).map(f64::from).collect();
                pop_std(&all)
            }
        };
        user_scores.insert(user.to_string(), score);
        if score < threshold {
            excluded_users.push(ExcludedUser {
                user_id: user.to_string(),
                score,
                responses: rs.len(),
                single_response: rs.len() == 1,
            });
        }
    }
    let dropped: BTreeSet<&str> = excluded_users.iter().map(|u| u.user_id.as_str()).collect();
    let kept: Vec<FeedbackResponse> = responses
        .iter()
        .filter(|r| !dropped.contains(r.user_id.as_str()))
        .cloned()
        .collect();
    FilterOutcome {
        excluded_responses: responses.len() - kept.len(),
        kept,
        excluded_users,
        user_scores,
    }
}

/// Population std of one response's six ratings.
pub fn response_std(u: &UsefulnessRatings) -> f64 {
    let v: Vec<f64> = u.as_array().iter().map(|&r| f64::from(r)).collect();
    pop_std(&v)
}

/// Pairwise correlation table; `None` marks an undefined coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.columns.iter().position(|c| c == a)?;
        let j = self.columns.iter().position(|c| c == b)?;
        self.values[i][j]
    }
}

pub fn correlation_matrix(columns: Vec<(String, Vec<f64>)>) -> CorrelationMatrix {
    let values = columns
        .iter()
        .map(|(_, a)| columns.iter().map(|(_, b)| pearson(a, b).ok()).collect())
        .collect();
    CorrelationMatrix {
        columns: columns.into_iter().map(|(n, _)| n).collect(),
        values,
    }
}

/// Per-response usefulness ratings, influence indicators and the
/// combined-influence flag as named numeric columns.
pub fn feedback_columns(responses: &[FeedbackResponse]) -> Vec<(String, Vec<f64>)> {
    let mut cols = Vec::new();
    for (i, name) in USEFULNESS_ITEMS.iter().enumerate() {
        cols.push((
            format!("usefulness.{name}"),
            responses
                .iter()
                .map(|r| f64::from(r.usefulness.as_array()[i]))
                .collect(),
        ));
    }
    for kind in InfoKind::ALL {
        cols.push((
            format!("influence.{}", kind.as_str()),
            responses
                .iter()
                .map(|r| if r.influence.contains(&kind) { 1.0 } else { 0.0 })
                .collect(),
        ));
    }
    cols.push((
        "influence.combined".to_string(),
        responses
            .iter()
            .map(|r| if r.influence.is_empty() { 0.0 } else { 1.0 })
            .collect(),
    ));
    cols
}

pub fn usefulness_influence_matrix(responses: &[FeedbackResponse]) -> CorrelationMatrix {
    correlation_matrix(feedback_columns(responses))
}

/// Distances from one reference point to a trip's endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDistances {
    pub to_source: f64,
    pub to_destination: f64,
    pub to_source_plus_destination: f64,
    pub to_midpoint: f64,
}

impl ReferenceDistances {
    fn measure(reference: &GeoPoint, src: &GeoPoint, dst: &GeoPoint) -> Self {
        let to_source = haversine_m(reference, src);
        let to_destination = haversine_m(reference, dst);
        Self {
            to_source,
            to_destination,
            to_source_plus_destination: to_source + to_destination,
            to_midpoint: haversine_m(reference, &midpoint(src, dst)),
        }
    }
}

/// The eight trip-to-disruption distances, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub construction_center: ReferenceDistances,
    pub highway_point: ReferenceDistances,
}

pub const DISTANCE_METRICS: [&str; 8] = [
    "construction_center.to_source",
    "construction_center.to_destination",
    "construction_center.to_source_plus_destination",
    "construction_center.to_midpoint",
    "highway_point.to_source",
    "highway_point.to_destination",
    "highway_point.to_source_plus_destination",
    "highway_point.to_midpoint",
];

impl DistanceProfile {
    /// Values in [`DISTANCE_METRICS`] order.
    pub fn as_array(&self) -> [f64; 8] {
        let (c, h) = (&self.construction_center, &self.highway_point);
        [
            c.to_source,
            c.to_destination,
            c.to_source_plus_destination,
            c.to_midpoint,
            h.to_source,
            h.to_destination,
            h.to_source_plus_destination,
            h.to_midpoint,
        ]
    }
}

pub fn distance_profile(
    src: &GeoPoint,
    dst: &GeoPoint,
    construction_center: &GeoPoint,
    highway_point: &GeoPoint,
) -> DistanceProfile {
    DistanceProfile {
        construction_center: ReferenceDistances::measure(construction_center, src, dst),
        highway_point: ReferenceDistances::measure(highway_point, src, dst),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStats {
    pub categories: Vec<String>,
    /// `[category][weekday]`, Monday first. Each schedule counts once per
    /// scheduled day.
    pub by_weekday: Vec<[u64; 7]>,
    /// `[category][hour of arrival]`, weighted like `by_weekday`.
    pub by_hour: Vec<[u64; 24]>,
    pub total_schedules: usize,
    pub stated_users: usize,
    pub active_users: usize,
    pub avg_per_stated_user: Option<f64>,
    pub avg_per_active_user: Option<f64>,
}

/// Heatmap matrices for when and where people schedule trips.
/// `stated_users` is the enrolled population; active users are those with
/// at least one schedule.
pub fn schedule_stats(schedules: &[Schedule], stated_users: usize) -> ScheduleStats {
    let mut by_weekday = vec![[0u64; 7]; PlaceCategory::ALL.len()];
    let mut by_hour = vec![[0u64; 24]; PlaceCategory::ALL.len()];
    let mut users = BTreeSet::new();
    for s in schedules {
        let c = s.category.index();
        users.insert(s.user_id.as_str());
        for d in &s.days {
            by_weekday[c][d.num_days_from_monday() as usize] += 1;
            by_hour[c][s.arrival_time.hour() as usize] += 1;
        }
    }
    let per = |n: usize| (n > 0).then(|| schedules.len() as f64 / n as f64);
    ScheduleStats {
        categories: PlaceCategory::ALL.iter().map(|c| c.as_str().to_string()).collect(),
        by_weekday,
        by_hour,
        total_schedules: schedules.len(),
        stated_users,
        active_users: users.len(),
        avg_per_stated_user: per(stated_users),
        avg_per_active_user: per(users.len()),
    }
}

/// Number of feedback responses per user per local calendar day.
pub fn daily_feedback_counts(responses: &[FeedbackResponse], zone: Tz) -> HashMap<(String, NaiveDate), usize> {
    let mut counts = HashMap::new();
    for r in responses {
        let day = r.submitted_at.with_timezone(&zone).date_naive();
        *counts.entry((r.user_id.clone(), day)).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeelingsCorrelation {
    pub rows: usize,
    pub happy: Option<f64>,
    pub distressed: Option<f64>,
    pub irritable: Option<f64>,
    pub alert_awake: Option<f64>,
    pub lonely: Option<f64>,
}

impl FeelingsCorrelation {
    pub fn get(&self, f: Feeling) -> Option<f64> {
        match f {
            Feeling::Happy => self.happy,
            Feeling::Distressed => self.distressed,
            Feeling::Irritable => self.irritable,
            Feeling::AlertAwake => self.alert_awake,
            Feeling::Lonely => self.lonely,
        }
    }
}

/// Pearson correlation between the day's feedback count and each feeling,
/// over every diary record. Days without feedback count as zero.
pub fn feelings_correlation(
    counts: &HashMap<(String, NaiveDate), usize>,
    wellbeing: &[WellbeingRecord],
) -> Result<FeelingsCorrelation, StatsError> {
    if wellbeing.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: wellbeing.len(),
        });
    }
    let x: Vec<f64> = wellbeing
        .iter()
        .map(|w| counts.get(&(w.user_id.clone(), w.date)).copied().unwrap_or(0) as f64)
        .collect();
    let coef = |f: Feeling| {
        let y: Vec<f64> = wellbeing.iter().map(|w| f64::from(w.rating(f))).collect();
        pearson(&x, &y).ok()
    };
    Ok(FeelingsCorrelation {
        rows: wellbeing.len(),
        happy: coef(Feeling::Happy),
        distressed: coef(Feeling::Distressed),
        irritable: coef(Feeling::Irritable),
        alert_awake: coef(Feeling::AlertAwake),
        lonely: coef(Feeling::Lonely),
    })
}

/// Count of weekdays in `[start, end]`; handy for checking expansions.
pub fn weekday_count(start: NaiveDate, end: NaiveDate, day: chrono::Weekday) -> usize {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| d.weekday() == day)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{NaiveTime, Weekday};

    use crate::avoidance::TravelMedium;

    fn resp(user: &str, ratings: [u8; 6]) -> FeedbackResponse {
        FeedbackResponse {
            user_id: user.into(),
            trip_id: format!("{user}-trip"),
            taken: true,
            usefulness: UsefulnessRatings::from_array(ratings),
            influence: BTreeSet::new(),
            note: None,
            submitted_at: "2023-02-06T16:00:00Z".parse().unwrap(),
        }
    }

    #[test]
    fn constant_rater_is_excluded() {
        let rs = vec![
            resp("flat", [3; 6]),
            resp("flat", [4; 6]),
            resp("varied", [1, 2, 3, 4, 5, 5]),
            resp("varied", [3, 3, 3, 3, 3, 5]),
        ];
        let out = filter_low_variance(&rs, DEFAULT_FILTER_THRESHOLD, UserScore::default());
        assert_eq!(out.excluded_users.len(), 1);
        assert_eq!(out.excluded_users[0].user_id, "flat");
        assert_eq!(out.user_scores["flat"], 0.0);
        assert_eq!(out.kept.len(), 2);
        assert_eq!(out.excluded_responses, 2);
    }

    #[test]
    fn single_response_users_are_flagged() {
        let out = filter_low_variance(&[resp("once", [1, 5, 1, 5, 1, 5])], 0.05, UserScore::default());
        assert!(out.excluded_users[0].single_response);
    }

    #[test]
    fn pooled_mode_keeps_level_shifters() {
        // constant within a response but different across responses
        let rs = vec![resp("shift", [1; 6]), resp("shift", [5; 6])];
        let a = filter_low_variance(&rs, 0.05, UserScore::StdOfResponseStds);
        let b = filter_low_variance(&rs, 0.05, UserScore::Pooled);
        assert_eq!(a.excluded_users.len(), 1);
        assert!(b.excluded_users.is_empty());
    }

    #[test]
    fn ratings_validation() {
        assert!(UsefulnessRatings::from_array([1, 2, 3, 4, 5, 1]).validate().is_ok());
        assert_eq!(
            UsefulnessRatings::from_array([1, 2, 3, 4, 6, 1]).validate(),
            Err(StatsError::RatingOutOfRange(6))
        );
        assert_eq!(UsefulnessRatings::uniform(3).get(InfoKind::Weather), 3);
    }

    #[test]
    fn matrix_marks_constant_columns_undefined() {
        let mut rs = vec![
            resp("u", [1, 2, 3, 4, 5, 3]),
            resp("u", [2, 3, 4, 5, 1, 3]),
            resp("u", [5, 1, 2, 3, 4, 3]),
        ];
        rs[0].influence.insert(InfoKind::Weather);
        let m = usefulness_influence_matrix(&rs);
        assert_eq!(m.columns.len(), 12);
        assert_eq!(m.get("usefulness.reminder", "usefulness.weather"), None);
        assert_eq!(m.get("usefulness.reminder", "usefulness.reminder"), None);
        assert!((m.get("usefulness.weather", "usefulness.weather").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.get("influence.construction", "usefulness.weather"), None);
        assert_eq!(
            m.get("influence.weather", "usefulness.weather"),
            m.get("influence.combined", "usefulness.weather")
        );
    }

    #[test]
    fn distance_profile_identities() {
        let src = GeoPoint {
            lat: 39.76,
            lon: -104.98,
        };
        let dst = GeoPoint {
            lat: 39.70,
            lon: -104.90,
        };
        let p = distance_profile(&src, &dst, &src, &dst);
        assert_eq!(p.construction_center.to_source, 0.0);
        assert_eq!(p.highway_point.to_destination, 0.0);

        let hw = GeoPoint {
            lat: 39.78,
            lon: -104.95,
        };
        let p = distance_profile(&src, &src, &hw, &hw);
        let c = p.construction_center;
        assert_eq!(c.to_source, c.to_destination);
        assert_eq!(c.to_source, c.to_midpoint);
        assert_eq!(c.to_source_plus_destination, 2.0 * c.to_source);
    }

    fn sched(cat: PlaceCategory, days: Vec<Weekday>, hour: u32, user: &str) -> Schedule {
        Schedule {
            id: format!("{user}-{hour}"),
            user_id: user.into(),
            name: "x".into(),
            category: cat,
            origin: GeoPoint { lat: 39.7, lon: -105.0 },
            destination: GeoPoint {
                lat: 39.71,
                lon: -105.0,
            },
            medium: TravelMedium::Driving,
            days,
            arrival_time: NaiveTime::from_hms_opt(hour, 0, 0).unwrap(),
            reminder_lead_min: 10,
            timezone: "America/Denver".into(),
        }
    }

    #[test]
    fn single_schedule_heatmap() {
        let st = schedule_stats(&[sched(PlaceCategory::Work, vec![Weekday::Mon], 8, "u")], 1);
        let work = PlaceCategory::Work.index();
        assert_eq!(st.by_weekday[work][0], 1);
        assert_eq!(st.by_hour[work][8], 1);
        assert_eq!(st.by_weekday.iter().flatten().sum::<u64>(), 1);
        assert_eq!(st.by_hour.iter().flatten().sum::<u64>(), 1);
    }

    #[test]
    fn weekend_only_schedules() {
        let st = schedule_stats(
            &[
                sched(PlaceCategory::Shopping, vec![Weekday::Sat, Weekday::Sun], 12, "a"),
                sched(PlaceCategory::Outdoors, vec![Weekday::Sun], 10, "b"),
            ],
            2,
        );
        for row in &st.by_weekday {
            assert!(row[..5].iter().all(|&v| v == 0));
        }
        assert_eq!(st.by_weekday.iter().flatten().sum::<u64>(), 3);
    }

    #[test]
    fn averages_over_stated_and_active_users() {
        let mut schedules = Vec::new();
        for i in 0..93 {
            schedules.push(sched(
                PlaceCategory::Home,
                vec![Weekday::Mon],
                (i % 24) as u32,
                &format!("u{}", i % 23),
            ));
        }
        let st = schedule_stats(&schedules, 23);
        assert!((st.avg_per_active_user.unwrap() - 93.0 / 23.0).abs() < 1e-12);
        assert!((st.avg_per_stated_user.unwrap() - 4.043478260869565).abs() < 1e-12);
        let st = schedule_stats(&schedules, 0);
        assert_eq!(st.avg_per_stated_user, None);
    }

    #[test]
    fn feelings_follow_feedback_counts() {
        let d0: NaiveDate = "2023-02-06".parse().unwrap();
        let mut counts = HashMap::new();
        let mut records = Vec::new();
        for i in 0..5u8 {
            let date = d0 + chrono::Duration::days(i64::from(i));
            counts.insert(("u".to_string(), date), i as usize);
            records.push(WellbeingRecord {
                user_id: "u".into(),
                date,
                happy: i,
                distressed: 5 - i,
                irritable: 3,
                alert_awake: 1 + (i % 2),
                lonely: 2,
            });
        }
        let c = feelings_correlation(&counts, &records).unwrap();
        assert_eq!(c.happy, Some(1.0));
        assert_eq!(c.distressed, Some(-1.0));
        assert_eq!(c.irritable, None);
        assert!(feelings_correlation(&counts, &records[..1]).is_err());
    }
}
