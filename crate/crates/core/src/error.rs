use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("coordinate is not finite: ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("coordinate out of range: ({0}, {1})")]
    OutOfRange(f64, f64),
    #[error("cannot parse `{0}` as lat,lon")]
    Parse(String),
}

/// Errors raised while loading or validating a road network or closure list.
#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid node `{node}`: {reason}")]
    InvalidNode { node: String, reason: String },
    #[error("invalid edge `{edge}`: {reason}")]
    InvalidEdge { edge: String, reason: String },
    #[error("invalid closure `{closure}`: {reason}")]
    InvalidClosure { closure: String, reason: String },
}

impl NetworkError {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        NetworkError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("no node within {radius_m} m of {point}")]
    SnapFailure { point: String, radius_m: f64 },
    #[error("no path from node `{from}` to node `{to}`")]
    NoPath { from: String, to: String },
    #[error("every candidate route crosses an active closure")]
    NoValidRoute,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExposureError {
    #[error("route has no geometry")]
    EmptyRoute,
    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("candidate list is empty")]
    NoCandidates,
    #[error("invalid pollution field: {0}")]
    InvalidField(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("schedule has no days")]
    NoDays,
    #[error("reminder lead must be 10, 15 or 30 minutes, got {0}")]
    InvalidLead(u32),
    #[error("unknown time zone `{0}`")]
    UnknownZone(String),
    #[error("window of {0} days exceeds the 56-day limit")]
    WindowTooLong(i64),
    #[error("window end precedes start")]
    InvertedWindow,
    #[error("planned arrival is not after now")]
    ArrivalPassed,
    #[error("status cannot move from {from:?} to {to:?}")]
    BackwardTransition {
        from: crate::scheduler::TripStatus,
        to: crate::scheduler::TripStatus,
    },
    #[error(transparent)]
    Route(#[from] RouteError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("unknown road condition tag `{0}`")]
    UnknownTag(String),
    #[error("source file missing: {0}")]
    Missing(String),
    #[error("malformed source file {file}: {message}")]
    Malformed { file: String, message: String },
    #[error("data is stale (as of {0})")]
    Stale(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("every pair is tied")]
    AllTies,
    #[error("at least two groups of two values are required")]
    TooFewGroups,
    #[error("rating {0} is outside 1..=5")]
    RatingOutOfRange(u8),
}
