//! File-backed information sources and the pre-trip reminder composer.
//!
//! Each source is a JSON file carrying an `as_of` timestamp. A source that is
//! missing, malformed or older than the freshness window shows up as
//! [`Section::Unavailable`] in the reminder; composition itself never fails.

use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::ProviderError;
use crate::exposure::{route_avg_pm25, PollutionField};
use crate::geo::{BoundingBox, GeoPoint};
use crate::roadnet::{fastest_route, RoadNetwork, TrafficScenario};
use crate::scheduler::{Schedule, Trip};

pub const DEFAULT_CORRIDOR_BUFFER_M: f64 = 2000.0;
pub const MAX_MAP_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureBands {
    /// Below this is "very cold".
    pub very_cold_below: f64,
    /// Below this (and not very cold) is "cold".
    pub cold_below: f64,
    /// At or above this is "hot".
    pub hot_from: f64,
}

impl Default for TemperatureBands {
    fn default() -> Self {
        Self {
            very_cold_below: -5.0,
            cold_below: 10.0,
            hot_from: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemperatureTag {
    #[serde(rename = "Very Cold")]
    VeryCold,
    Cold,
    Warm,
    Hot,
}

pub fn temperature_tag(celsius: f64, bands: &TemperatureBands) -> TemperatureTag {
    if celsius < bands.very_cold_below {
        TemperatureTag::VeryCold
    } else if celsius < bands.cold_below {
        TemperatureTag::Cold
    } else if celsius < bands.hot_from {
        TemperatureTag::Warm
    } else {
        TemperatureTag::Hot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UvBand {
    Low,
    Moderate,
    High,
    VeryHigh,
    Extreme,
}

impl UvBand {
    pub fn message(self) -> &'static str {
        match self {
            Self::Low => "Low UV. No protection needed; you can safely stay outside.",
            Self::Moderate => "Moderate UV. Seek shade around midday, wear sunglasses and use sunscreen.",
            Self::High => "High UV. Cover up, wear a hat and sunscreen, and limit midday sun.",
            Self::VeryHigh => "Very high UV. Avoid being outside at midday; shirt, sunscreen and hat are a must.",
            Self::Extreme => "Extreme UV. Stay indoors around midday if you can; full protection is essential.",
        }
    }
}

/// WHO UV-index band for `uv`.
pub fn uv_band(uv: f64) -> UvBand {
    if uv < 3.0 {
        UvBand::Low
    } else if uv < 6.0 {
        UvBand::Moderate
    } else if uv < 8.0 {
        UvBand::High
    } else if uv < 11.0 {
        UvBand::VeryHigh
    } else {
        UvBand::Extreme
    }
}

pub fn uv_message(uv: f64) -> &'static str {
    uv_band(uv).message()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadCondition {
    Dry,
    Wet,
    Slippery,
    Snowy,
    Icy,
}

pub fn road_condition_tag(raw: &str) -> Result<RoadCondition, ProviderError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "dry" => Ok(RoadCondition::Dry),
        "wet" => Ok(RoadCondition::Wet),
        "slippery" => Ok(RoadCondition::Slippery),
        "snowy" => Ok(RoadCondition::Snowy),
        "icy" => Ok(RoadCondition::Icy),
        _ => Err(ProviderError::UnknownTag(raw.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSample {
    pub temperature_c: f64,
    pub uv_index: f64,
    pub wind_speed_ms: f64,
    pub wind_direction_deg: f64,
    pub visibility_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadIncident {
    pub id: String,
    pub location: GeoPoint,
    pub kind: String,
    pub description: String,
    pub reported_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionEvent {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<Vec<GeoPoint>>,
    pub description: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

/// Something with a spatial footprint that can be tested against a trip
/// corridor.
pub trait Located {
    fn footprint(&self) -> Option<BoundingBox>;
}

impl Located for GeoPoint {
    fn footprint(&self) -> Option<BoundingBox> {
        BoundingBox::from_points([self])
    }
}

impl Located for RoadIncident {
    fn footprint(&self) -> Option<BoundingBox> {
        BoundingBox::from_points([&self.location])
    }
}

impl Located for ConstructionEvent {
    fn footprint(&self) -> Option<BoundingBox> {
        BoundingBox::from_points(self.location.iter().chain(self.polygon.iter().flatten()))
    }
}

/// Bounding box of `src` and `dst` grown by `buffer_m` on every side.
pub fn corridor(src: &GeoPoint, dst: &GeoPoint, buffer_m: f64) -> BoundingBox {
    BoundingBox::from_points([src, dst]).unwrap().expanded(buffer_m)
}

/// Items whose footprint touches the trip corridor (boundary included).
pub fn corridor_filter<T: Located + Clone>(items: &[T], src: &GeoPoint, dst: &GeoPoint, buffer_m: f64) -> Vec<T> {
    let zone = corridor(src, dst, buffer_m);
    items
        .iter()
        .filter(|it| it.footprint().is_some_and(|fp| fp.intersects(&zone)))
        .cloned()
        .collect()
}

/// A reminder field that may be missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Section<T> {
    Available { value: T },
    Unavailable { reason: String },
}

impl<T> Section<T> {
    pub fn is_available(&self) -> bool {
        matches!(self, Self::Available { .. })
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Self::Available { value } => Some(value),
            Self::Unavailable { .. } => None,
        }
    }

    fn from_result(r: Result<T, ProviderError>) -> Self {
        match r {
            Ok(value) => Self::Available { value },
            Err(e) => Self::Unavailable { reason: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Stamped<T> {
    as_of: DateTime<Utc>,
    #[serde(flatten)]
    data: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncidentList {
    pub incidents: Vec<RoadIncident>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionList {
    pub events: Vec<ConstructionEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
}

/// One source file's contents, or why it could not be read.
#[derive(Debug, Clone)]
pub struct Source<T> {
    inner: Result<(DateTime<Utc>, T), ProviderError>,
}

impl<T> Source<T> {
    pub fn missing(name: &str) -> Self {
        Self {
            inner: Err(ProviderError::Missing(name.to_string())),
        }
    }

    pub fn fresh(as_of: DateTime<Utc>, value: T) -> Self {
        Self {
            inner: Ok((as_of, value)),
        }
    }

    fn read(&self, now: DateTime<Utc>, window: Duration) -> Result<&T, ProviderError> {
        let (as_of, v) = self.inner.as_ref().map_err(Clone::clone)?;
        if now - *as_of > window {
            return Err(ProviderError::Stale(as_of.to_rfc3339()));
        }
        Ok(v)
    }
}

impl<T: for<'de> Deserialize<'de>> Source<T> {
    fn load(dir: &Path, name: &str) -> Self {
        let path = dir.join(name);
        let inner = match std::fs::read_to_string(&path) {
            Err(_) => Err(ProviderError::Missing(name.to_string())),
            Ok(text) => serde_json::from_str::<Stamped<T>>(&text)
                .map(|s| (s.as_of, s.data))
                .map_err(|e| ProviderError::Malformed {
                    file: name.to_string(),
                    message: e.to_string(),
                }),
        };
        Self { inner }
    }
}

/// A read-only snapshot of every information source.
#[derive(Debug, Clone)]
pub struct Providers {
    pub weather: Source<WeatherSample>,
    pub incidents: Source<IncidentList>,
    pub construction: Source<ConstructionList>,
    pub conditions: Source<ConditionReport>,
}

impl Providers {
    /// Reads `weather.json`, `incidents.json`, `construction.json` and
    /// `conditions.json` from `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            weather: Source::load(dir, "weather.json"),
            incidents: Source::load(dir, "incidents.json"),
            construction: Source::load(dir, "construction.json"),
            conditions: Source::load(dir, "conditions.json"),
        }
    }

    pub fn empty() -> Self {
        Self {
            weather: Source::missing("weather.json"),
            incidents: Source::missing("incidents.json"),
            construction: Source::missing("construction.json"),
            conditions: Source::missing("conditions.json"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReminderConfig {
    pub temperature: TemperatureBands,
    pub corridor_buffer_m: f64,
    /// Maximum age of a source before it is reported unavailable.
    pub freshness_min: i64,
}

impl Default for ReminderConfig {
    fn default() -> Self {
        Self {
            temperature: TemperatureBands::default(),
            corridor_buffer_m: DEFAULT_CORRIDOR_BUFFER_M,
            freshness_min: 6 * 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureInfo {
    pub celsius: f64,
    pub tag: TemperatureTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvInfo {
    pub index: f64,
    pub band: UvBand,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindVisibility {
    pub wind_speed_ms: f64,
    pub wind_direction_deg: f64,
    pub visibility_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disruptions {
    pub incidents: Section<Vec<RoadIncident>>,
    pub construction: Section<Vec<ConstructionEvent>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirQuality {
    pub destination_pm25: f64,
    /// Mean over the best-scenario fastest route, when one exists.
    pub route_mean_pm25: Option<f64>,
}

/// PM2.5 matrix over the trip corridor; row 0 is the southern edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGrid {
    pub bbox: BoundingBox,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Vec<f64>>,
}

/// Everything sent to a traveller before a trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reminder {
    pub trip_id: String,
    pub schedule_name: String,
    pub planned_arrival: DateTime<Utc>,
    pub departure: Option<DateTime<Utc>>,
    pub road_conditions: Section<RoadCondition>,
    pub temperature: Section<TemperatureInfo>,
    pub uv: Section<UvInfo>,
    pub wind_visibility: Section<WindVisibility>,
    pub disruptions: Disruptions,
    pub air_quality: AirQuality,
    pub map_grid: MapGrid,
}

fn weather_part<T>(weather: &Result<&WeatherSample, ProviderError>, f: impl FnOnce(&WeatherSample) -> T) -> Section<T> {
    Section::from_result(weather.clone().map(f))
}

fn checked_weather(w: &WeatherSample) -> Result<&WeatherSample, ProviderError> {
    let fields = [
        w.temperature_c,
        w.uv_index,
        w.wind_speed_ms,
        w.wind_direction_deg,
        w.visibility_m,
    ];
    let message = if fields.iter().any(|v| !v.is_finite()) {
        "non-finite value"
    } else if w.uv_index < 0.0 {
        "negative uv_index"
    } else if w.visibility_m < 0.0 {
        "negative visibility_m"
    } else {
        return Ok(w);
    };
    Err(ProviderError::Malformed {
        file: "weather.json".into(),
        message: message.into(),
    })
}

pub fn compose_reminder(
    trip: &Trip,
    schedule: &Schedule,
    providers: &Providers,
    field: &PollutionField,
    net: &RoadNetwork,
    now: DateTime<Utc>,
    cfg: &ReminderConfig,
) -> Reminder {
    let window = Duration::minutes(cfg.freshness_min);
    let (src, dst) = (&schedule.origin, &schedule.destination);
    let weather = providers.weather.read(now, window).and_then(checked_weather);
    let temperature = weather_part(&weather, |w| TemperatureInfo {
        celsius: w.temperature_c,
        tag: temperature_tag(w.temperature_c, &cfg.temperature),
    });
    let uv = weather_part(&weather, |w| UvInfo {
        index: w.uv_index,
        band: uv_band(w.uv_index),
        message: uv_message(w.uv_index).to_string(),
    });
    let wind_visibility = weather_part(&weather, |w| WindVisibility {
        wind_speed_ms: w.wind_speed_ms,
        wind_direction_deg: w.wind_direction_deg,
        visibility_m: w.visibility_m,
    });

    let road_conditions = Section::from_result(
        providers
            .conditions
            .read(now, window)
            .and_then(|c| road_condition_tag(&c.condition)),
    );
    let incidents = Section::from_result(providers.incidents.read(now, window).map(|l| {
        let seen: Vec<RoadIncident> = l.incidents.iter().filter(|i| i.reported_at <= now).cloned().collect();
        corridor_filter(&seen, src, dst, cfg.corridor_buffer_m)
    }));
    let construction = Section::from_result(providers.construction.read(now, window).map(|l| {
        let valid: Vec<ConstructionEvent> = l.events.iter().filter(|e| e.start <= e.end).cloned().collect();
        corridor_filter(&valid, src, dst, cfg.corridor_buffer_m)
    }));

    let route_mean_pm25 = fastest_route(net, src, dst, TrafficScenario::Best)
        .ok()
        .and_then(|r| route_avg_pm25(&r, field).ok())
        .map(|s| s.mean);
    let bbox = corridor(src, dst, cfg.corridor_buffer_m);

    Reminder {
        trip_id: trip.id.clone(),
        schedule_name: schedule.name.clone(),
        planned_arrival: trip.planned_arrival,
        departure: trip.computed_departure,
        road_conditions,
        temperature,
        uv,
        wind_visibility,
        disruptions: Disruptions {
            incidents,
            construction,
        },
        air_quality: AirQuality {
            destination_pm25: field.value_at(dst),
            route_mean_pm25,
        },
        map_grid: MapGrid {
            bbox,
            rows: MAX_MAP_CELLS,
            cols: MAX_MAP_CELLS,
            values: field.resample(&bbox, MAX_MAP_CELLS, MAX_MAP_CELLS),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_bands() {
        let b = TemperatureBands::default();
        assert_eq!(temperature_tag(-10.0, &b), TemperatureTag::VeryCold);
        assert_eq!(temperature_tag(-5.0, &b), TemperatureTag::Cold);
        assert_eq!(temperature_tag(20.0, &b), TemperatureTag::Warm);
        assert_eq!(temperature_tag(10.0, &b), TemperatureTag::Warm);
        assert_eq!(temperature_tag(30.0, &b), TemperatureTag::Hot);
        assert_eq!(
            serde_json::to_string(&TemperatureTag::VeryCold).unwrap(),
            "\"Very Cold\""
        );
    }

    #[test]
    fn uv_bands() {
        assert_eq!(uv_band(0.0), UvBand::Low);
        assert_eq!(uv_band(2.9), UvBand::Low);
        assert_eq!(uv_band(3.0), UvBand::Moderate);
        assert_eq!(uv_band(7.0), UvBand::High);
        assert_eq!(uv_band(10.0), UvBand::VeryHigh);
        assert_eq!(uv_band(11.0), UvBand::Extreme);
        assert_eq!(uv_message(7.0), UvBand::High.message());
        assert_ne!(uv_message(0.0), uv_message(11.0));
    }

    #[test]
    fn condition_tags() {
        assert_eq!(road_condition_tag("snowy"), Ok(RoadCondition::Snowy));
        assert_eq!(road_condition_tag(" Dry "), Ok(RoadCondition::Dry));
        assert_eq!(
            road_condition_tag("lava"),
            Err(ProviderError::UnknownTag("lava".into()))
        );
    }

    #[test]
    fn corridor_cases() {
        let src = GeoPoint {
            lat: 39.70,
            lon: -105.00,
        };
        let dst = GeoPoint {
            lat: 39.75,
            lon: -104.95,
        };
        let zone = corridor(&src, &dst, 2000.0);
        let far = src.offset(50_000.0, 0.0);
        let edge = GeoPoint {
            lat: zone.north,
            lon: zone.east,
        };
        let kept = corridor_filter(&[src, far, edge], &src, &dst, 2000.0);
        assert_eq!(kept, vec![src, edge]);
    }

    #[test]
    fn construction_polygon_overlapping_corridor() {
        let src = GeoPoint {
            lat: 39.70,
            lon: -105.00,
        };
        let dst = GeoPoint {
            lat: 39.71,
            lon: -104.99,
        };
        let t = "2023-01-01T00:00:00Z".parse().unwrap();
        // a long strip whose vertices are all outside the corridor
        let strip = ConstructionEvent {
            id: "c70".into(),
            location: None,
            polygon: Some(vec![
                GeoPoint {
                    lat: 39.705,
                    lon: -105.2,
                },
                GeoPoint {
                    lat: 39.705,
                    lon: -104.8,
                },
                GeoPoint {
                    lat: 39.706,
                    lon: -104.8,
                },
                GeoPoint {
                    lat: 39.706,
                    lon: -105.2,
                },
            ]),
            description: "lane closures".into(),
            start: t,
            end: t,
        };
        assert_eq!(corridor_filter(&[strip], &src, &dst, 500.0).len(), 1);
    }
}
