//! HTTP+JSON API.

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use chrono::{DateTime, Duration, NaiveTime, Utc, Weekday};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeSet;
use tripwise_core::analytics::{FeedbackResponse, InfoKind, UsefulnessRatings, WellbeingRecord};
use tripwise_core::avoidance::{alternative_routes, closure_avoiding_route, TravelMedium};
use tripwise_core::error::RouteError;
use tripwise_core::exposure::{route_avg_pm25, safest_route, ExposureSummary};
use tripwise_core::geo::GeoPoint;
use tripwise_core::roadnet::{fastest_route, RoadClosure, Route, TrafficScenario};
use tripwise_core::scheduler::{PlaceCategory, Schedule, TripStatus, DEFAULT_TIMEZONE};

use crate::analyze::{analyze, AnalyzeConfig, Dataset};
use crate::app::{pending_trip_ids, run_tick, upcoming_trips, Shared};
use crate::store::{FeedbackRecord, Op, StoreError, User};

/// Longest detour, as a multiple of the fastest time, offered as a
/// lower-exposure alternative.
pub const SAFEST_MAX_DETOUR: f64 = 1.5;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        tracing::error!(error = %e, "store failure");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage failure")
    }
}

impl From<RouteError> for ApiError {
    fn from(e: RouteError) -> Self {
        let status = match e {
            RouteError::SnapFailure { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            RouteError::NoPath { .. } | RouteError::NoValidRoute => StatusCode::NOT_FOUND,
        };
        Self::new(status, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/users", post(create_user))
        .route("/sessions", post(create_session).delete(end_session))
        .route("/users/{id}", get(get_user))
        .route("/users/{id}/schedules", get(list_schedules).post(create_schedule))
        .route(
            "/users/{id}/schedules/{sid}",
            patch(update_schedule).delete(delete_schedule).get(get_schedule),
        )
        .route("/users/{id}/trips", get(list_trips))
        .route("/users/{id}/events", get(list_events))
        .route("/events/{id}/ack", post(ack_event))
        .route("/trips/{id}/feedback", post(submit_feedback))
        .route("/route", post(route_any))
        .route("/route/fastest", post(route_fastest))
        .route("/route/safest", post(route_safest))
        .route("/route/avoid-closures", post(route_avoid))
        .route("/admin/closures", get(list_closures).post(set_closures))
        .route("/admin/tick", post(admin_tick))
        .route("/admin/clock", get(get_clock).post(set_clock))
        .route("/admin/wellbeing", post(add_wellbeing))
        .route("/admin/export", post(admin_export))
        .route("/analytics/report", get(report))
        .with_state(state)
}

async fn health(State(st): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "now": st.clock.now() }))
}

// ---- users and sessions ----

/// `+` then 2–15 digits, no leading zero.
pub fn is_e164(phone: &str) -> bool {
    let Some(digits) = phone.strip_prefix('+') else {
        return false;
    };
    (2..=15).contains(&digits.len()) && digits.bytes().all(|b| b.is_ascii_digit()) && !digits.starts_with('0')
}

#[derive(Deserialize)]
struct NewUser {
    phone: String,
    #[serde(default)]
    name: String,
}

#[derive(Serialize)]
struct Session {
    user: User,
    token: String,
}

async fn create_user(State(st): State<Shared>, Json(body): Json<NewUser>) -> ApiResult<(StatusCode, Json<Session>)> {
    let phone = body.phone.trim().to_string();
    if !is_e164(&phone) {
        return Err(ApiError::bad(format!("`{phone}` is not an E.164 phone number")));
    }
    let mut store = st.store.write().await;
    if store.data().users.values().any(|u| u.phone == phone) {
        return Err(ApiError::conflict("phone number already registered"));
    }
    let user = User {
        id: format!("u-{}", store.peek_seq()),
        phone,
        name: body.name.trim().to_string(),
        created_at: st.clock.now(),
    };
    store.commit(Op::PutUser { user: user.clone() })?;
    let token = uuid::Uuid::new_v4().simple().to_string();
    store.commit(Op::PutToken {
        token: token.clone(),
        user_id: user.id.clone(),
    })?;
    Ok((StatusCode::CREATED, Json(Session { user, token })))
}

#[derive(Deserialize)]
struct Login {
    phone: String,
}

/// Issues a fresh token for a registered phone number.
async fn create_session(State(st): State<Shared>, Json(body): Json<Login>) -> ApiResult<(StatusCode, Json<Session>)> {
    let mut store = st.store.write().await;
    let user = store
        .data()
        .users
        .values()
        .find(|u| u.phone == body.phone.trim())
        .cloned()
        .ok_or_else(|| ApiError::not_found("user"))?;
    let token = uuid::Uuid::new_v4().simple().to_string();
    store.commit(Op::PutToken {
        token: token.clone(),
        user_id: user.id.clone(),
    })?;
    Ok((StatusCode::CREATED, Json(Session { user, token })))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(axum::http::header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

async fn end_session(State(st): State<Shared>, headers: HeaderMap) -> ApiResult<StatusCode> {
    let token = bearer(&headers).ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing token"))?;
    let mut store = st.store.write().await;
    if !store.data().tokens.contains_key(token) {
        return Err(ApiError::new(StatusCode::UNAUTHORIZED, "unknown token"));
    }
    store.commit(Op::DropToken { token: token.into() })?;
    Ok(StatusCode::NO_CONTENT)
}

/// Resolves the caller from the bearer token.
async fn caller(st: &Shared, headers: &HeaderMap) -> ApiResult<String> {
    let token = bearer(headers).ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing token"))?;
    st.store
        .read()
        .await
        .data()
        .tokens
        .get(token)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown token"))
}

/// The caller must be `user_id`.
async fn authorize(st: &Shared, headers: &HeaderMap, user_id: &str) -> ApiResult<()> {
    let who = caller(st, headers).await?;
    if who != user_id {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "token belongs to another user"));
    }
    Ok(())
}

fn authorize_admin(st: &Shared, headers: &HeaderMap) -> ApiResult<()> {
    match &st.cfg.admin_token {
        Some(t) if bearer(headers) != Some(t.as_str()) => {
            Err(ApiError::new(StatusCode::UNAUTHORIZED, "admin token required"))
        }
        _ => Ok(()),
    }
}

async fn get_user(State(st): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Json<User>> {
    authorize(&st, &headers, &id).await?;
    let store = st.store.read().await;
    store
        .data()
        .users
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("user"))
}

// ---- schedules and trips ----

fn parse_time(s: &str) -> ApiResult<NaiveTime> {
    NaiveTime::parse_from_str(s, "%H:%M")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M:%S"))
        .map_err(|_| ApiError::bad(format!("arrival_time `{s}` is not HH:MM")))
}

#[derive(Debug, Deserialize)]
struct ScheduleBody {
    name: Option<String>,
    category: Option<PlaceCategory>,
    origin: Option<GeoPoint>,
    destination: Option<GeoPoint>,
    medium: Option<TravelMedium>,
    days: Option<Vec<Weekday>>,
    arrival_time: Option<String>,
    reminder_lead_min: Option<u32>,
    timezone: Option<String>,
}

impl ScheduleBody {
    /// Applies the present fields onto `s`, collecting every problem.
    fn merge_into(self, s: &mut Schedule) -> ApiResult<()> {
        let mut errs = Vec::new();
        if let Some(v) = self.name {
            s.name = v;
        }
        if let Some(v) = self.category {
            s.category = v;
        }
        for (label, p, slot) in [
            ("origin", self.origin, &mut s.origin),
            ("destination", self.destination, &mut s.destination),
        ] {
            if let Some(p) = p {
                match p.validate() {
                    Ok(()) => *slot = p,
                    Err(e) => errs.push(format!("{label}: {e}")),
                }
            }
        }
        if let Some(v) = self.medium {
            s.medium = v;
        }
        if let Some(v) = self.days {
            s.days = v;
        }
        if let Some(v) = self.arrival_time {
            match parse_time(&v) {
                Ok(t) => s.arrival_time = t,
                Err(e) => errs.push(e.message),
            }
        }
        if let Some(v) = self.reminder_lead_min {
            s.reminder_lead_min = v;
        }
        if let Some(v) = self.timezone {
            s.timezone = v;
        }
        if s.name.trim().is_empty() {
            errs.push("name must not be empty".into());
        }
        if let Err(e) = s.validate() {
            errs.push(e.to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ApiError::bad(errs.join("; ")))
        }
    }
}

async fn list_schedules(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<Schedule>>> {
    authorize(&st, &headers, &id).await?;
    let store = st.store.read().await;
    Ok(Json(
        store
            .data()
            .schedules
            .values()
            .filter(|s| s.user_id == id)
            .cloned()
            .collect(),
    ))
}

async fn get_schedule(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path((id, sid)): Path<(String, String)>,
) -> ApiResult<Json<Schedule>> {
    authorize(&st, &headers, &id).await?;
    let store = st.store.read().await;
    match store.data().schedules.get(&sid) {
        Some(s) if s.user_id == id => Ok(Json(s.clone())),
        _ => Err(ApiError::not_found("schedule")),
    }
}

async fn create_schedule(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Json(body): Json<ScheduleBody>,
) -> ApiResult<(StatusCode, Json<Schedule>)> {
    authorize(&st, &headers, &id).await?;
    let missing: Vec<&str> = [
        ("name", body.name.is_none()),
        ("category", body.category.is_none()),
        ("origin", body.origin.is_none()),
        ("destination", body.destination.is_none()),
        ("days", body.days.is_none()),
        ("arrival_time", body.arrival_time.is_none()),
    ]
    .into_iter()
    .filter_map(|(k, m)| m.then_some(k))
    .collect();
    if !missing.is_empty() {
        return Err(ApiError::bad(format!("missing fields: {}", missing.join(", "))));
    }
    let mut store = st.store.write().await;
    let mut s = Schedule {
        id: format!("sch-{}", store.peek_seq()),
        user_id: id,
        name: String::new(),
        category: PlaceCategory::Other,
        origin: GeoPoint { lat: 0.0, lon: 0.0 },
        destination: GeoPoint { lat: 0.0, lon: 0.0 },
        medium: TravelMedium::Driving,
        days: Vec::new(),
        arrival_time: NaiveTime::MIN,
        reminder_lead_min: 15,
        timezone: DEFAULT_TIMEZONE.into(),
    };
    body.merge_into(&mut s)?;
    let data = store.data();
    let trips = upcoming_trips(&s, st.clock.now(), st.cfg.horizon_days, &|t| data.trips.contains_key(t));
    store.commit(Op::PutSchedule {
        schedule: s.clone(),
        trips,
        drop_trips: Vec::new(),
    })?;
    Ok((StatusCode::CREATED, Json(s)))
}

async fn update_schedule(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path((id, sid)): Path<(String, String)>,
    Json(body): Json<ScheduleBody>,
) -> ApiResult<Json<Schedule>> {
    authorize(&st, &headers, &id).await?;
    let mut store = st.store.write().await;
    let mut s = match store.data().schedules.get(&sid) {
        Some(s) if s.user_id == id => s.clone(),
        _ => return Err(ApiError::not_found("schedule")),
    };
    body.merge_into(&mut s)?;
    // pending trips are re-derived from the edited schedule
    let drop_trips = pending_trip_ids(&store, &sid);
    let data = store.data();
    let trips = upcoming_trips(&s, st.clock.now(), st.cfg.horizon_days, &|t| {
        data.trips.contains_key(t) && !drop_trips.iter().any(|d| d == t)
    });
    store.commit(Op::PutSchedule {
        schedule: s.clone(),
        trips,
        drop_trips,
    })?;
    Ok(Json(s))
}

async fn delete_schedule(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path((id, sid)): Path<(String, String)>,
) -> ApiResult<StatusCode> {
    authorize(&st, &headers, &id).await?;
    let mut store = st.store.write().await;
    match store.data().schedules.get(&sid) {
        Some(s) if s.user_id == id => {}
        _ => return Err(ApiError::not_found("schedule")),
    }
    let trips = pending_trip_ids(&store, &sid);
    store.commit(Op::DropSchedule { id: sid, trips })?;
    Ok(StatusCode::NO_CONTENT)
}

async fn list_trips(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<tripwise_core::scheduler::Trip>>> {
    authorize(&st, &headers, &id).await?;
    let store = st.store.read().await;
    let mut trips: Vec<_> = store
        .data()
        .trips
        .values()
        .filter(|t| t.user_id == id)
        .cloned()
        .collect();
    trips.sort_by(|a, b| (a.planned_arrival, &a.id).cmp(&(b.planned_arrival, &b.id)));
    Ok(Json(trips))
}

// ---- events ----

#[derive(Deserialize)]
struct Since {
    #[serde(default)]
    since: u64,
}

/// Unacknowledged events after `since`, oldest first. Polling does not
/// consume events; acknowledging does.
async fn list_events(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<Since>,
) -> ApiResult<Json<Vec<crate::store::EventRecord>>> {
    authorize(&st, &headers, &id).await?;
    let store = st.store.read().await;
    Ok(Json(
        store
            .data()
            .events
            .range(q.since + 1..)
            .map(|(_, e)| e)
            .filter(|e| e.user_id == id && !e.delivered)
            .cloned()
            .collect(),
    ))
}

async fn ack_event(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let who = caller(&st, &headers).await?;
    let seq: u64 = id
        .strip_prefix("ev-")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| ApiError::not_found("event"))?;
    let mut store = st.store.write().await;
    let ev = match store.data().events.get(&seq) {
        Some(e) if e.user_id == who => e.clone(),
        _ => return Err(ApiError::not_found("event")),
    };
    if !ev.delivered {
        store.commit(Op::MarkDelivered { seq })?;
    }
    Ok(Json(json!({ "id": ev.id, "delivered": true })))
}

// ---- feedback ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackBody {
    taken: bool,
    usefulness: UsefulnessRatings,
    #[serde(default)]
    influence: BTreeSet<InfoKind>,
    #[serde(default)]
    note: Option<String>,
    /// Older single-question form, kept alongside when sent.
    #[serde(default)]
    overall_rating: Option<u8>,
}

async fn submit_feedback(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(trip_id): Path<String>,
    Json(body): Json<FeedbackBody>,
) -> ApiResult<(StatusCode, Json<FeedbackRecord>)> {
    let who = caller(&st, &headers).await?;
    body.usefulness.validate().map_err(|e| ApiError::bad(e.to_string()))?;
    if let Some(r) = body.overall_rating.filter(|r| !(1..=5).contains(r)) {
        return Err(ApiError::bad(format!("overall_rating {r} is outside 1..=5")));
    }
    let mut store = st.store.write().await;
    let mut trip = match store.data().trips.get(&trip_id) {
        Some(t) if t.user_id == who => t.clone(),
        _ => return Err(ApiError::not_found("trip")),
    };
    if store.data().feedback.contains_key(&trip_id) {
        return Err(ApiError::conflict("feedback already submitted for this trip"));
    }
    if trip.status != TripStatus::AwaitingFeedback {
        return Err(ApiError::conflict(format!(
            "trip is {:?}, not awaiting feedback",
            trip.status
        )));
    }
    trip.advance(TripStatus::Closed).expect("forward transition");
    let record = FeedbackRecord {
        response: FeedbackResponse {
            user_id: who,
            trip_id,
            taken: body.taken,
            usefulness: body.usefulness,
            influence: body.influence,
            note: body.note.filter(|n| !n.trim().is_empty()),
            submitted_at: st.clock.now(),
        },
        overall_rating: body.overall_rating,
    };
    store.commit(Op::PutFeedback {
        feedback: record.clone(),
        trip,
    })?;
    Ok((StatusCode::CREATED, Json(record)))
}

// ---- routing ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Preference {
    Fastest,
    Safest,
    #[serde(alias = "avoid-closures", alias = "avoid")]
    AvoidClosures,
}

/// A point as `{"lat":..,"lon":..}` or `"lat,lon"`.
fn point<'de, D: serde::Deserializer<'de>>(d: D) -> Result<GeoPoint, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        Obj(GeoPoint),
        Text(String),
    }
    match Either::deserialize(d)? {
        Either::Obj(p) => Ok(p),
        Either::Text(s) => s.parse().map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Deserialize)]
struct RouteBody {
    #[serde(deserialize_with = "point")]
    src: GeoPoint,
    #[serde(deserialize_with = "point")]
    dst: GeoPoint,
    #[serde(default = "driving")]
    medium: TravelMedium,
    #[serde(default)]
    preference: Option<Preference>,
    #[serde(default = "best")]
    scenario: TrafficScenario,
    /// Overrides the stored closures for this request.
    #[serde(default)]
    closures: Option<Vec<RoadClosure>>,
}

fn driving() -> TravelMedium {
    TravelMedium::Driving
}

fn best() -> TrafficScenario {
    TrafficScenario::Best
}

#[derive(Serialize)]
struct RouteReply {
    preference: &'static str,
    route: Route,
    exposure: Option<ExposureSummary>,
    candidates: usize,
}

async fn plan(st: &Shared, pref: Preference, body: RouteBody) -> ApiResult<Json<RouteReply>> {
    for (label, p) in [("src", &body.src), ("dst", &body.dst)] {
        p.validate().map_err(|e| ApiError::bad(format!("{label}: {e}")))?;
    }
    let net = st.network();
    let exposure = |r: &Route| route_avg_pm25(r, &st.field).ok();
    let reply = match pref {
        Preference::Fastest => {
            let route = fastest_route(&net, &body.src, &body.dst, body.scenario)?;
            RouteReply {
                preference: "fastest",
                exposure: exposure(&route),
                route,
                candidates: 1,
            }
        }
        Preference::AvoidClosures => {
            let closures = match body.closures {
                Some(c) => c
                    .into_iter()
                    .map(|c| c.validated())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ApiError::bad(e.to_string()))?,
                None => st.store.read().await.data().closures.clone(),
            };
            let route = closure_avoiding_route(
                &net,
                &body.src,
                &body.dst,
                &closures,
                body.medium,
                &st.cfg.spiral,
                body.scenario,
            )?;
            RouteReply {
                preference: "avoid_closures",
                exposure: exposure(&route),
                route,
                candidates: 1,
            }
        }
        Preference::Safest => {
            let cands = alternative_routes(
                &net,
                &body.src,
                &body.dst,
                &st.cfg.spiral,
                SAFEST_MAX_DETOUR,
                body.scenario,
            )?;
            let (route, summary) = safest_route(&cands, &st.field)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            RouteReply {
                preference: "safest",
                route,
                exposure: Some(summary),
                candidates: cands.len(),
            }
        }
    };
    Ok(Json(reply))
}

async fn route_any(State(st): State<Shared>, Json(body): Json<RouteBody>) -> ApiResult<Json<RouteReply>> {
    let pref = body.preference.unwrap_or(Preference::Fastest);
    plan(&st, pref, body).await
}

async fn route_fastest(State(st): State<Shared>, Json(body): Json<RouteBody>) -> ApiResult<Json<RouteReply>> {
    plan(&st, Preference::Fastest, body).await
}

async fn route_safest(State(st): State<Shared>, Json(body): Json<RouteBody>) -> ApiResult<Json<RouteReply>> {
    plan(&st, Preference::Safest, body).await
}

async fn route_avoid(State(st): State<Shared>, Json(body): Json<RouteBody>) -> ApiResult<Json<RouteReply>> {
    plan(&st, Preference::AvoidClosures, body).await
}

// ---- admin ----

async fn list_closures(State(st): State<Shared>, headers: HeaderMap) -> ApiResult<Json<Vec<RoadClosure>>> {
    authorize_admin(&st, &headers)?;
    Ok(Json(st.store.read().await.data().closures.clone()))
}

/// Replaces the closure list. Accepts a bare list or `{"closures": [...]}`.
async fn set_closures(
    State(st): State<Shared>,
    headers: HeaderMap,
    Json(body): Json<serde_json::Value>,
) -> ApiResult<Json<Vec<RoadClosure>>> {
    authorize_admin(&st, &headers)?;
    let list = body.get("closures").cloned().unwrap_or(body);
    let closures: Vec<RoadClosure> = serde_json::from_value(list).map_err(|e| ApiError::bad(e.to_string()))?;
    let closures = closures
        .into_iter()
        .map(|c| c.validated())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ApiError::bad(e.to_string()))?;
    let mut store = st.store.write().await;
    store.commit(Op::SetClosures {
        closures: closures.clone(),
    })?;
    Ok(Json(closures))
}

async fn admin_tick(State(st): State<Shared>, headers: HeaderMap) -> ApiResult<Json<crate::app::TickReport>> {
    authorize_admin(&st, &headers)?;
    Ok(Json(run_tick(&st).await?))
}

async fn get_clock(State(st): State<Shared>) -> Json<serde_json::Value> {
    let manual = matches!(st.clock, crate::app::Clock::Manual(_));
    Json(json!({ "now": st.clock.now(), "manual": manual }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClockBody {
    #[serde(default)]
    set: Option<DateTime<Utc>>,
    #[serde(default)]
    advance_min: Option<i64>,
}

/// Moves a manual clock forward (or to an instant). Time never goes back.
async fn set_clock(
    State(st): State<Shared>,
    headers: HeaderMap,
    Json(body): Json<ClockBody>,
) -> ApiResult<Json<serde_json::Value>> {
    authorize_admin(&st, &headers)?;
    let now = st.clock.now();
    let target = match (body.set, body.advance_min) {
        (Some(t), None) => t,
        (None, Some(m)) => now + Duration::minutes(m),
        _ => return Err(ApiError::bad("give exactly one of `set` or `advance_min`")),
    };
    if target < now {
        return Err(ApiError::bad("the clock cannot move backwards"));
    }
    let at = st
        .clock
        .set(target)
        .ok_or_else(|| ApiError::conflict("the service runs on the system clock"))?;
    Ok(Json(json!({ "now": at })))
}

async fn add_wellbeing(
    State(st): State<Shared>,
    headers: HeaderMap,
    Json(records): Json<Vec<WellbeingRecord>>,
) -> ApiResult<Json<serde_json::Value>> {
    authorize_admin(&st, &headers)?;
    for r in &records {
        if tripwise_core::analytics::Feeling::ALL
            .iter()
            .any(|f| !(1..=5).contains(&r.rating(*f)))
        {
            return Err(ApiError::bad(format!(
                "rating outside 1..=5 for {} on {}",
                r.user_id, r.date
            )));
        }
    }
    let n = records.len();
    st.store.write().await.commit(Op::AddWellbeing { records })?;
    Ok(Json(json!({ "added": n })))
}

async fn admin_export(State(st): State<Shared>, headers: HeaderMap) -> ApiResult<Json<serde_json::Value>> {
    authorize_admin(&st, &headers)?;
    let dir = crate::app::export(&st, None).await?;
    Ok(Json(json!({ "dir": dir })))
}

/// Runs the evaluation report over the live data.
async fn report(State(st): State<Shared>, headers: HeaderMap) -> ApiResult<Json<crate::analyze::Report>> {
    authorize_admin(&st, &headers)?;
    let store = st.store.read().await;
    let d = store.data();
    let mut feedback: Vec<FeedbackResponse> = d.feedback.values().map(|f| f.response.clone()).collect();
    feedback.sort_by(|a, b| (a.submitted_at, &a.trip_id).cmp(&(b.submitted_at, &b.trip_id)));
    let data = Dataset {
        users: d.users.values().cloned().collect(),
        schedules: d.schedules.values().cloned().collect(),
        trips: d.trips.values().cloned().collect(),
        feedback,
        wellbeing: d.wellbeing.clone(),
    };
    drop(store);
    Ok(Json(analyze(&data, &AnalyzeConfig::default())))
}
