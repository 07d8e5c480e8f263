//! Full evaluation report over an export directory.
//!
//! Each section is computed independently; a section that cannot be
//! computed is recorded as `insufficient_data` with the reason and the run
//! carries on.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tripwise_core::analytics::{
    daily_feedback_counts, distance_profile, feelings_correlation, filter_low_variance, schedule_stats,
    usefulness_influence_matrix, CorrelationMatrix, ExcludedUser, FeedbackResponse, Feeling, FeelingsCorrelation,
    InfoKind, ScheduleStats, UserScore, WellbeingRecord, DEFAULT_FILTER_THRESHOLD, DISTANCE_METRICS, USEFULNESS_ITEMS,
};
use tripwise_core::fixtures::{construction_center, highway_point};
use tripwise_core::geo::{haversine_m, GeoPoint};
use tripwise_core::scheduler::{PlaceCategory, Schedule, Trip, DEFAULT_TIMEZONE};
use tripwise_core::stats::{anova_oneway, kendall_tau_test, mean, pop_std, AnovaResult};

use crate::store::{read_ndjson, StoreError, User, EXPORT_FILES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub filter_threshold: f64,
    pub user_score: UserScore,
    pub construction_center: GeoPoint,
    pub highway_point: GeoPoint,
    /// Zone used to assign feedback to diary days.
    pub timezone: String,
    /// Width of the trip-distance histogram bins.
    pub distance_bin_m: f64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            filter_threshold: DEFAULT_FILTER_THRESHOLD,
            user_score: UserScore::default(),
            construction_center: construction_center(),
            highway_point: highway_point(),
            timezone: DEFAULT_TIMEZONE.into(),
            distance_bin_m: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub users: Vec<User>,
    pub schedules: Vec<Schedule>,
    pub trips: Vec<Trip>,
    pub feedback: Vec<FeedbackResponse>,
    pub wellbeing: Vec<WellbeingRecord>,
}

impl Dataset {
    /// Reads the export files; missing files count as empty.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        Ok(Self {
            users: read_ndjson(&dir.join(EXPORT_FILES[0]))?,
            schedules: read_ndjson(&dir.join(EXPORT_FILES[1]))?,
            trips: read_ndjson(&dir.join(EXPORT_FILES[2]))?,
            feedback: read_ndjson(&dir.join(EXPORT_FILES[3]))?,
            wellbeing: read_ndjson(&dir.join(EXPORT_FILES[4]))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "result", rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    InsufficientData { reason: String },
}

impl<T> Outcome<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Self::Ok(v) => Some(v),
            Self::InsufficientData { .. } => None,
        }
    }

    fn from_result<E: std::fmt::Display>(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Self::Ok(v),
            Err(e) => Self::InsufficientData { reason: e.to_string() },
        }
    }
}

fn insufficient<T>(reason: impl Into<String>) -> Outcome<T> {
    Outcome::InsufficientData { reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub schedules: usize,
    pub trips: usize,
    pub feedback: usize,
    pub wellbeing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteringSection {
    pub threshold: f64,
    pub user_score: UserScore,
    pub responses_before: usize,
    pub responses_kept: usize,
    pub excluded_responses: usize,
    pub excluded_fraction: f64,
    pub contributing_users: usize,
    pub excluded_users: Vec<ExcludedUser>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSection {
    pub responses: usize,
    pub usefulness_mean: BTreeMap<String, f64>,
    /// Counts of ratings 1..=5 per item.
    pub usefulness_counts: BTreeMap<String, [usize; 5]>,
    /// Share of responses marking each information type as influential.
    pub influence_rate: BTreeMap<String, f64>,
    pub taken_rate: f64,
    pub matrix: CorrelationMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaGroup {
    pub label: String,
    pub n: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTest {
    pub groups: Vec<AnovaGroup>,
    pub result: AnovaResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaSection {
    /// Ratings grouped by information item.
    pub by_item: Outcome<AnovaTest>,
    /// Mean usefulness per response grouped by destination category.
    pub by_category: Outcome<AnovaTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KendallCell {
    pub tau: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSection {
    pub responses: usize,
    pub metrics: Vec<String>,
    /// Six items followed by `combined` (mean of the six).
    pub items: Vec<String>,
    /// `[metric][item]`
    pub table: Vec<Vec<KendallCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub stated_users: usize,
    pub active_users: usize,
    pub schedules: usize,
    pub trips: usize,
    pub feedbacks: usize,
    pub schedules_per_stated_user: Option<f64>,
    pub schedules_per_active_user: Option<f64>,
    pub trips_per_active_user: Option<f64>,
    pub feedbacks_per_active_user: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSection {
    pub cohort: CohortRow,
    pub stats: ScheduleStats,
    /// Schedules per category, highest first.
    pub places: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripDistanceSection {
    pub schedules: usize,
    pub mean_m: f64,
    pub median_m: f64,
    pub std_m: f64,
    pub bin_m: f64,
    /// Schedule counts per bin `[k·bin, (k+1)·bin)`.
    pub histogram: Vec<usize>,
    pub mean_by_category_m: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeelingsSection {
    pub correlation: FeelingsCorrelation,
    pub days_with_feedback: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dataset: DatasetSummary,
    pub filtering: Outcome<FilteringSection>,
    pub correlations: Outcome<CorrelationSection>,
    pub anova: Outcome<AnovaSection>,
    pub distance_usefulness: Outcome<DistanceSection>,
    pub schedules: Outcome<ScheduleSection>,
    pub trip_distances: Outcome<TripDistanceSection>,
    pub feelings: Outcome<FeelingsSection>,
}

pub const SECTIONS: [&str; 7] = [
    "filtering",
    "correlations",
    "anova",
    "distance_usefulness",
    "schedules",
    "trip_distances",
    "feelings",
];

pub fn analyze(data: &Dataset, cfg: &AnalyzeConfig) -> Report {
    let filtered = filter_low_variance(&data.feedback, cfg.filter_threshold, cfg.user_score);
    let kept = &filtered.kept;

    let filtering = if data.feedback.is_empty() {
        insufficient("no feedback responses")
    } else {
        Outcome::Ok(FilteringSection {
            threshold: cfg.filter_threshold,
            user_score: cfg.user_score,
            responses_before: data.feedback.len(),
            responses_kept: kept.len(),
            excluded_responses: filtered.excluded_responses,
            excluded_fraction: filtered.excluded_fraction(),
            contributing_users: filtered.user_scores.len(),
            excluded_users: filtered.excluded_users.clone(),
        })
    };

    let schedules_by_id: HashMap<&str, &Schedule> = data.schedules.iter().map(|s| (s.id.as_str(), s)).collect();
    let trips_by_id: HashMap<&str, &Trip> = data.trips.iter().map(|t| (t.id.as_str(), t)).collect();
    let schedule_of = |r: &FeedbackResponse| {
        trips_by_id
            .get(r.trip_id.as_str())
            .and_then(|t| schedules_by_id.get(t.schedule_id.as_str()).copied())
    };

    Report {
        dataset: DatasetSummary {
            users: data.users.len(),
            schedules: data.schedules.len(),
            trips: data.trips.len(),
            feedback: data.feedback.len(),
            wellbeing: data.wellbeing.len(),
        },
        filtering,
        correlations: correlations(kept),
        anova: anova(kept, &schedule_of),
        distance_usefulness: distance_usefulness(kept, &schedule_of, cfg),
        schedules: schedules(data),
        trip_distances: trip_distances(&data.schedules, cfg.distance_bin_m),
        feelings: feelings(data, cfg),
    }
}

fn correlations(kept: &[FeedbackResponse]) -> Outcome<CorrelationSection> {
    if kept.len() < 2 {
        return insufficient(format!("{} responses after filtering", kept.len()));
    }
    let n = kept.len() as f64;
    let mut usefulness_mean = BTreeMap::new();
    let mut usefulness_counts = BTreeMap::new();
    for (i, item) in USEFULNESS_ITEMS.iter().enumerate() {
        let mut counts = [0usize; 5];
        for r in kept {
            counts[usize::from(r.usefulness.as_array()[i]) - 1] += 1;
        }
        let sum: f64 = kept.iter().map(|r| f64::from(r.usefulness.as_array()[i])).sum();
        usefulness_mean.insert(item.to_string(), sum / n);
        usefulness_counts.insert(item.to_string(), counts);
    }
    let mut influence_rate = BTreeMap::new();
    for k in InfoKind::ALL {
        let c = kept.iter().filter(|r| r.influence.contains(&k)).count();
        influence_rate.insert(k.as_str().to_string(), c as f64 / n);
    }
    let combined = kept.iter().filter(|r| !r.influence.is_empty()).count();
    influence_rate.insert("combined".into(), combined as f64 / n);
    Outcome::Ok(CorrelationSection {
        responses: kept.len(),
        usefulness_mean,
        usefulness_counts,
        influence_rate,
        taken_rate: kept.iter().filter(|r| r.taken).count() as f64 / n,
        matrix: usefulness_influence_matrix(kept),
    })
}

fn anova_test(labelled: Vec<(String, Vec<f64>)>) -> Outcome<AnovaTest> {
    let labelled: Vec<(String, Vec<f64>)> = labelled.into_iter().filter(|(_, g)| g.len() >= 2).collect();
    let groups: Vec<Vec<f64>> = labelled.iter().map(|(_, g)| g.clone()).collect();
    Outcome::from_result(anova_oneway(&groups).map(|result| {
        AnovaTest {
            groups: labelled
                .iter()
                .map(|(label, g)| AnovaGroup {
                    label: label.clone(),
                    n: g.len(),
                    mean: mean(g),
                })
                .collect(),
            result,
        }
    }))
}

fn anova<'a>(
    kept: &[FeedbackResponse],
    schedule_of: &impl Fn(&FeedbackResponse) -> Option<&'a Schedule>,
) -> Outcome<AnovaSection> {
    if kept.len() < 2 {
        return insufficient(format!("{} responses after filtering", kept.len()));
    }
    let by_item = USEFULNESS_ITEMS
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let g = kept.iter().map(|r| f64::from(r.usefulness.as_array()[i])).collect();
            (item.to_string(), g)
        })
        .collect();
    let mut by_cat: BTreeMap<PlaceCategory, Vec<f64>> = BTreeMap::new();
    for r in kept {
        if let Some(s) = schedule_of(r) {
            by_cat.entry(s.category).or_default().push(r.usefulness.mean());
        }
    }
    let by_category = by_cat.into_iter().map(|(c, g)| (c.as_str().to_string(), g)).collect();
    Outcome::Ok(AnovaSection {
        by_item: anova_test(by_item),
        by_category: anova_test(by_category),
    })
}

fn distance_usefulness<'a>(
    kept: &[FeedbackResponse],
    schedule_of: &impl Fn(&FeedbackResponse) -> Option<&'a Schedule>,
    cfg: &AnalyzeConfig,
) -> Outcome<DistanceSection> {
    let joined: Vec<(&FeedbackResponse, [f64; 8])> = kept
        .iter()
        .filter_map(|r| {
            let s = schedule_of(r)?;
            let p = distance_profile(&s.origin, &s.destination, &cfg.construction_center, &cfg.highway_point);
            Some((r, p.as_array()))
        })
        .collect();
    if joined.len() < 2 {
        return insufficient(format!("{} responses joined to a schedule", joined.len()));
    }
    let mut items: Vec<String> = USEFULNESS_ITEMS.iter().map(|s| s.to_string()).collect();
    items.push("combined".into());
    let ratings: Vec<Vec<f64>> = (0..7)
        .map(|i| {
            joined
                .iter()
                .map(|(r, _)| {
                    if i < 6 {
                        f64::from(r.usefulness.as_array()[i])
                    } else {
                        r.usefulness.mean()
                    }
                })
                .collect()
        })
        .collect();
    let table = (0..8)
        .map(|m| {
            let d: Vec<f64> = joined.iter().map(|(_, p)| p[m]).collect();
            ratings
                .iter()
                .map(|y| match kendall_tau_test(&d, y) {
                    Ok(k) => KendallCell {
                        tau: Some(k.tau),
                        p_value: Some(k.p_value),
                    },
                    Err(_) => KendallCell {
                        tau: None,
                        p_value: None,
                    },
                })
                .collect()
        })
        .collect();
    Outcome::Ok(DistanceSection {
        responses: joined.len(),
        metrics: DISTANCE_METRICS.iter().map(|s| s.to_string()).collect(),
        items,
        table,
    })
}

fn schedules(data: &Dataset) -> Outcome<ScheduleSection> {
    if data.schedules.is_empty() {
        return insufficient("no schedules");
    }
    let stated = if data.users.is_empty() {
        data.schedules
            .iter()
            .map(|s| s.user_id.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .len()
    } else {
        data.users.len()
    };
    let stats = schedule_stats(&data.schedules, stated);
    let per_active = |n: usize| (stats.active_users > 0).then(|| n as f64 / stats.active_users as f64);
    let cohort = CohortRow {
        stated_users: stated,
        active_users: stats.active_users,
        schedules: data.schedules.len(),
        trips: data.trips.len(),
        feedbacks: data.feedback.len(),
        schedules_per_stated_user: stats.avg_per_stated_user,
        schedules_per_active_user: stats.avg_per_active_user,
        trips_per_active_user: per_active(data.trips.len()),
        feedbacks_per_active_user: per_active(data.feedback.len()),
    };
    let mut places: Vec<(String, usize)> = PlaceCategory::ALL
        .iter()
        .map(|c| {
            (
                c.as_str().to_string(),
                data.schedules.iter().filter(|s| s.category == *c).count(),
            )
        })
        .collect();
    places.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Outcome::Ok(ScheduleSection { cohort, stats, places })
}

fn trip_distances(schedules: &[Schedule], bin_m: f64) -> Outcome<TripDistanceSection> {
    if schedules.is_empty() {
        return insufficient("no schedules");
    }
    let d: Vec<f64> = schedules
        .iter()
        .map(|s| haversine_m(&s.origin, &s.destination))
        .collect();
    let mut sorted = d.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    let bins = (sorted[sorted.len() - 1] / bin_m).floor() as usize + 1;
    let mut histogram = vec![0usize; bins];
    for x in &d {
        histogram[(x / bin_m).floor() as usize] += 1;
    }
    let mut by_cat: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (s, x) in schedules.iter().zip(&d) {
        by_cat.entry(s.category.as_str().to_string()).or_default().push(*x);
    }
    Outcome::Ok(TripDistanceSection {
        schedules: d.len(),
        mean_m: mean(&d),
        median_m: median,
        std_m: pop_std(&d),
        bin_m,
        histogram,
        mean_by_category_m: by_cat.into_iter().map(|(k, v)| (k, mean(&v))).collect(),
    })
}

fn feelings(data: &Dataset, cfg: &AnalyzeConfig) -> Outcome<FeelingsSection> {
    let zone: chrono_tz::Tz = match cfg.timezone.parse() {
        Ok(z) => z,
        Err(_) => return insufficient(format!("unknown time zone `{}`", cfg.timezone)),
    };
    if data.feedback.is_empty() {
        return insufficient("no feedback responses");
    }
    let counts = daily_feedback_counts(&data.feedback, zone);
    Outcome::from_result(
        feelings_correlation(&counts, &data.wellbeing).map(|correlation| FeelingsSection {
            correlation,
            days_with_feedback: counts.len(),
        }),
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3}"))
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text digest of the report.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let d = &self.dataset;
        let _ = writeln!(
            out,
            "dataset: {} users, {} schedules, {} trips, {} feedback, {} diary days",
            d.users, d.schedules, d.trips, d.feedback, d.wellbeing
        );
        let skip = |out: &mut String, name: &str, reason: &str| {
            let _ = writeln!(out, "\n[{name}] insufficient data: {reason}");
        };
        match &self.filtering {
            Outcome::Ok(f) => {
                let _ = writeln!(
                    out,
                    "\n[filtering] excluded {} of {} responses ({:.1}%) from {} users",
                    f.excluded_responses,
                    f.responses_before,
                    100.0 * f.excluded_fraction,
                    f.excluded_users.len()
                );
                for u in &f.excluded_users {
                    let _ = writeln!(out, "  {} score {:.4} ({} responses)", u.user_id, u.score, u.responses);
                }
            }
            Outcome::InsufficientData { reason } => skip(&mut out, "filtering", reason),
        }
        match &self.correlations {
            Outcome::Ok(c) => {
                let _ = writeln!(out, "\n[correlations] {} responses", c.responses);
                for (item, m) in &c.usefulness_mean {
                    let infl = c
                        .influence_rate
                        .get(item)
                        .map_or(String::new(), |r| format!(", influenced {:.0}%", 100.0 * r));
                    let _ = writeln!(out, "  {item}: mean usefulness {m:.2}{infl}");
                }
                for kind in ["weather", "air_quality"] {
                    let _ = writeln!(
                        out,
                        "  r(usefulness.{kind}, influence.combined) = {}",
                        fmt_opt(c.matrix.get(&format!("usefulness.{kind}"), "influence.combined"))
                    );
                }
            }
            Outcome::InsufficientData { reason } => skip(&mut out, "correlations", reason),
        }
        match &self.anova {
            Outcome::Ok(a) => {
                for (name, t) in [("by item", &a.by_item), ("by category", &a.by_category)] {
                    match t {
                        Outcome::Ok(t) => {
                            let _ = writeln!(
                                out,
                                "\n[anova {name}] F = {:.3}, p = {:.3e}",
                                t.result.f, t.result.p_value
                            );
                        }
                        Outcome::InsufficientData { reason } => skip(&mut out, &format!("anova {name}"), reason),
                    }
                }
            }
            Outcome::InsufficientData { reason } => skip(&mut out, "anova", reason),
        }
        match &self.distance_usefulness {
            Outcome::Ok(t) => {
                let _ = writeln!(out, "\n[distance vs usefulness] Kendall tau, {} responses", t.responses);
                let width: Vec<usize> = t.items.iter().map(|i| i.len().max(7)).collect();
                let head: Vec<String> = t.items.iter().zip(&width).map(|(i, w)| format!("{i:>w$}")).collect();
                let _ = writeln!(out, "  {:<47} {}", "", head.join(" "));
                for (m, row) in t.metrics.iter().zip(&t.table) {
                    let cells: Vec<String> = row
                        .iter()
                        .zip(&width)
                        .map(|(c, w)| format!("{:>w$}", fmt_opt(c.tau)))
                        .collect();
                    let _ = writeln!(out, "  {m:<47} {}", cells.join(" "));
                }
            }
            Outcome::InsufficientData { reason } => skip(&mut out, "distance vs usefulness", reason),
        }
        match &self.schedules {
            Outcome::Ok(s) => {
                let c = &s.cohort;
                let _ = writeln!(
                    out,
                    "\n[schedules] {} schedules, {} trips, {} feedbacks; {} stated / {} active users",
                    c.schedules, c.trips, c.feedbacks, c.stated_users, c.active_users
                );
                let _ = writeln!(
                    out,
                    "  schedules per user: {} (stated), {} (active)",
                    fmt_opt(c.schedules_per_stated_user),
                    fmt_opt(c.schedules_per_active_user)
                );
                let top: Vec<String> = s.places.iter().take(3).map(|(p, n)| format!("{p} {n}")).collect();
                let _ = writeln!(out, "  most scheduled: {}", top.join(", "));
            }
            Outcome::InsufficientData { reason } => skip(&mut out, "schedules", reason),
        }
        match &self.trip_distances {
            Outcome::Ok(t) => {
                let _ = writeln!(
                    out,
                    "\n[trip distances] mean {:.0} m, median {:.0} m, std {:.0} m",
                    t.mean_m, t.median_m, t.std_m
                );
            }
            Outcome::InsufficientData { reason } => skip(&mut out, "trip distances", reason),
        }
        match &self.feelings {
            Outcome::Ok(f) => {
                let _ = writeln!(out, "\n[feelings] {} diary days", f.correlation.rows);
                for feeling in Feeling::ALL {
                    let _ = writeln!(out, "  {feeling:?}: {}", fmt_opt(f.correlation.get(feeling)));
                }
            }
            Outcome::InsufficientData { reason } => skip(&mut out, "feelings", reason),
        }
        out
    }

    /// Writes `report.json` at `path` and the text digest next to it.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_json())?;
        std::fs::write(path.with_extension("txt"), self.summary())
    }
}
