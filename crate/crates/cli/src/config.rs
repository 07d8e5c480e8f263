//! Service configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tripwise_core::avoidance::SpiralConfig;
use tripwise_core::providers::ReminderConfig;
use tripwise_core::roadnet::DEFAULT_SNAP_RADIUS_M;
use tripwise_core::scheduler::SchedulerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: String,
    pub port: u16,
    pub data_dir: PathBuf,
    pub network: PathBuf,
    /// PM2.5 field file. A flat background field is used when absent.
    pub field: Option<PathBuf>,
    /// Directory holding the provider JSON files.
    pub providers_dir: Option<PathBuf>,
    /// Per-edge traffic factors, re-read on every tick.
    pub traffic_overrides: Option<PathBuf>,
    pub tick_interval_s: u64,
    /// Days of trips kept expanded ahead of the clock.
    pub horizon_days: i64,
    /// Journal operations between snapshots.
    pub snapshot_every: u64,
    pub snap_radius_m: f64,
    pub scheduler: SchedulerConfig,
    pub reminder: ReminderConfig,
    pub spiral: SpiralConfig,
    /// Starts a manually advanced clock at this instant instead of the
    /// system clock.
    pub manual_clock: Option<chrono::DateTime<chrono::Utc>>,
    /// Required as a bearer token on `/admin` routes when set.
    pub admin_token: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("data"),
            network: PathBuf::from("crates/core/fixtures/denver_grid.json"),
            field: None,
            providers_dir: None,
            traffic_overrides: None,
            tick_interval_s: 30,
            horizon_days: 7,
            snapshot_every: 500,
            snap_radius_m: DEFAULT_SNAP_RADIUS_M,
            scheduler: SchedulerConfig::default(),
            reminder: ReminderConfig::default(),
            spiral: SpiralConfig::default(),
            manual_clock: None,
            admin_token: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

impl Config {
    /// Reads and validates a config file. Relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: Config = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_dir);
        fix(&mut self.network);
        for p in [&mut self.field, &mut self.providers_dir, &mut self.traffic_overrides]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.bind.parse::<std::net::IpAddr>().is_err() {
            errs.push(format!("bind: `{}` is not an IP address", self.bind));
        }
        if !self.network.is_file() {
            errs.push(format!("network: {} does not exist", self.network.display()));
        }
        if let Some(f) = &self.field {
            if !f.is_file() {
                errs.push(format!("field: {} does not exist", f.display()));
            }
        }
        if let Some(d) = &self.providers_dir {
            if !d.is_dir() {
                errs.push(format!("providers_dir: {} is not a directory", d.display()));
            }
        }
        if self.tick_interval_s == 0 {
            errs.push("tick_interval_s must be positive".into());
        }
        if !(1..=56).contains(&self.horizon_days) {
            errs.push(format!("horizon_days must be within 1..=56, got {}", self.horizon_days));
        }
        if self.snapshot_every == 0 {
            errs.push("snapshot_every must be positive".into());
        }
        if !(self.snap_radius_m.is_finite() && self.snap_radius_m > 0.0) {
            errs.push(format!("snap_radius_m must be positive, got {}", self.snap_radius_m));
        }
        let s = &self.scheduler;
        if s.soon_threshold_min <= 0 {
            errs.push("scheduler.soon_threshold_min must be positive".into());
        }
        if s.change_threshold_min < 0 {
            errs.push("scheduler.change_threshold_min must not be negative".into());
        }
        if s.feedback_delay_min < 0 {
            errs.push("scheduler.feedback_delay_min must not be negative".into());
        }
        let r = &self.reminder;
        if !(r.corridor_buffer_m.is_finite() && r.corridor_buffer_m >= 0.0) {
            errs.push("reminder.corridor_buffer_m must be a non-negative number".into());
        }
        if r.freshness_min <= 0 {
            errs.push("reminder.freshness_min must be positive".into());
        }
        let t = &r.temperature;
        let bands = [t.very_cold_below, t.cold_below, t.hot_from];
        if !bands.iter().all(|b| b.is_finite()) || bands.windows(2).any(|w| w[0] > w[1]) {
            errs.push("reminder.temperature bands must be finite and ascending".into());
        }
        if self.spiral.n_points == 0 || self.spiral.turns == 0 {
            errs.push("spiral.n_points and spiral.turns must be positive".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}
