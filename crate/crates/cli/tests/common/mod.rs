#![allow(dead_code)]

use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{DateTime, TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use tripwise::app::{AppState, Clock, Shared};
use tripwise::config::Config;
use tripwise::store::Store;
use tripwise_core::fixtures::{demo_field, grid_network, provider_fixtures, GridSpec, DENVER_ORIGIN};

/// Monday 2023-03-06, 05:00 in Denver.
pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 3, 6, 12, 0, 0).unwrap()
}

/// Service over the demo grid with a manual clock at `start` and provider
/// files stamped `providers_as_of`, persisted under `dir`.
pub fn state(dir: &Path, start: DateTime<Utc>, providers_as_of: DateTime<Utc>) -> Shared {
    let providers = dir.join("providers");
    std::fs::create_dir_all(&providers).unwrap();
    for (name, body) in provider_fixtures(providers_as_of) {
        std::fs::write(providers.join(name), body.to_string()).unwrap();
    }
    let cfg = Config {
        data_dir: dir.join("data"),
        providers_dir: Some(providers),
        manual_clock: Some(start),
        snapshot_every: 50,
        ..Config::default()
    };
    let store = Store::open(&cfg.data_dir, cfg.snapshot_every).unwrap();
    AppState::assemble(
        cfg,
        grid_network(&GridSpec::default()),
        demo_field(),
        store,
        Clock::manual(start),
    )
}

pub async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    token: Option<&str>,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, v)
}

/// Registers a user; returns `(id, token)`.
pub async fn register(app: &Router, phone: &str) -> (String, String) {
    let (s, v) = call(
        app,
        "POST",
        "/users",
        None,
        Some(serde_json::json!({"phone": phone, "name": "Test"})),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    (
        v["user"]["id"].as_str().unwrap().into(),
        v["token"].as_str().unwrap().into(),
    )
}

/// A weekday commute across the grid, arriving 08:30 Denver time.
pub fn commute() -> Value {
    let home = DENVER_ORIGIN.offset(600.0, 500.0);
    let work = DENVER_ORIGIN.offset(6200.0, 5800.0);
    serde_json::json!({
        "name": "Office",
        "category": "work",
        "origin": {"lat": home.lat, "lon": home.lon},
        "destination": {"lat": work.lat, "lon": work.lon},
        "medium": "driving",
        "days": ["Mon", "Tue", "Wed", "Thu", "Fri"],
        "arrival_time": "08:30",
        "reminder_lead_min": 15
    })
}
