//! JSON query service over engine snapshots.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use rbs3_core::engine::{ExplainError, QueryError, QueryRow};
use rbs3_core::tracking::{journey_rows, location_rows};
use rbs3_core::{Engine, FactId, Snapshot};
use serde_json::{json, Value};

use crate::formats::{fact_json, parse_arg, row_json, value_json};

#[derive(Debug, Clone, Copy, Default)]
pub struct Presentation {
    /// Subtracted once per corridor end from `find_journeys` durations.
    pub delay_correction_ms: i64,
    /// Keep bootstrap `dummyLoc` rows in location results.
    pub include_dummy: bool,
}

/// Query rows as JSON. Tracking queries get their presentation rows; any
/// other query returns raw bindings.
pub fn render_rows(query: &str, rows: &[QueryRow], p: Presentation) -> Vec<Value> {
    match query {
        "find_journeys" => journey_rows(rows, p.delay_correction_ms)
            .iter()
            .map(to_json)
            .collect(),
        "where_is" | "location_history" => location_rows(rows, p.include_dummy)
            .iter()
            .map(to_json)
            .collect(),
        _ => rows.iter().map(row_json).collect(),
    }
}

fn to_json<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("rows serialize")
}

/// The snapshot readers see. Replaced whole at cycle boundaries.
#[derive(Clone)]
pub struct SnapshotCell(Arc<RwLock<Snapshot>>);

impl SnapshotCell {
    pub fn new(s: Snapshot) -> Self {
        SnapshotCell(Arc::new(RwLock::new(s)))
    }

    pub fn publish(&self, s: Snapshot) {
        *self.0.write().expect("snapshot lock") = s;
    }

    pub fn current(&self) -> Snapshot {
        self.0.read().expect("snapshot lock").clone()
    }
}

/// Publishes at most one snapshot per interval.
pub struct Throttle {
    cell: SnapshotCell,
    every: Duration,
    last: Option<Instant>,
}

impl Throttle {
    pub fn new(cell: SnapshotCell, every: Duration) -> Self {
        Throttle {
            cell,
            every,
            last: None,
        }
    }

    pub fn offer(&mut self, engine: &Engine) {
        if self.last.is_none_or(|t| t.elapsed() >= self.every) {
            self.force(engine);
        }
    }

    pub fn force(&mut self, engine: &Engine) {
        self.cell.publish(engine.snapshot());
        self.last = Some(Instant::now());
    }
}

#[derive(Clone)]
struct AppState {
    cell: SnapshotCell,
    presentation: Presentation,
}

pub fn router(cell: SnapshotCell, presentation: Presentation) -> Router {
    Router::new()
        .route("/queries/{name}", get(query))
        .route("/facts", get(facts))
        .route("/explain/{id}", get(explain))
        .with_state(AppState { cell, presentation })
}

fn error(status: StatusCode, msg: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": msg.to_string() }))).into_response()
}

async fn query(
    State(st): State<AppState>,
    Path(name): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let snap = st.cell.current();
    let args: BTreeMap<_, _> = params
        .iter()
        .map(|(k, v)| (k.clone(), parse_arg(v)))
        .collect();
    match snap.run_query(&name, &args) {
        Ok(rows) => {
            let declared = snap.kb().query_params(&name).unwrap_or_default();
            let shown: serde_json::Map<String, Value> = args
                .iter()
                .filter(|(k, _)| declared.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), value_json(v)))
                .collect();
            Json(json!({
                "query": name,
                "params": shown,
                "results": render_rows(&name, &rows, st.presentation),
            }))
            .into_response()
        }
        Err(e @ QueryError::UnknownQuery(_)) => error(StatusCode::NOT_FOUND, e),
        Err(e @ QueryError::MissingParameter(_)) => error(StatusCode::BAD_REQUEST, e),
    }
}

async fn facts(
    State(st): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let snap = st.cell.current();
    let wanted = params.get("template");
    if let Some(t) = wanted {
        if snap.kb().schema().get(t).is_none() {
            return error(StatusCode::NOT_FOUND, format!("unknown template `{t}`"));
        }
    }
    let list: Vec<Value> = snap
        .facts()
        .iter()
        .filter(|(_, f)| wanted.is_none_or(|t| f.template_name() == t))
        .map(|(id, f)| fact_json(id, f))
        .collect();
    Json(json!({ "clock": snap.clock(), "facts": list })).into_response()
}

async fn explain(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    let Ok(n) = id.parse::<u64>() else {
        return error(StatusCode::BAD_REQUEST, format!("`{id}` is not a fact id"));
    };
    match st.cell.current().explain(FactId(n)) {
        Ok(d) => Json(d).into_response(),
        Err(e @ ExplainError::NotDerived(_)) => error(StatusCode::NOT_FOUND, e),
    }
}
