//! The location-tracking application: its knowledge base and result rows.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::Serialize;

use crate::engine::{Engine, KnowledgeBase, QueryRow};
use crate::ingest::{Registry, RegistryError};
use crate::lang::{parse_program, Construct};
use crate::value::SlotValue;

/// Bootstrap location of each person's first `is-currently-at` fact.
pub const DUMMY_LOCATION: &str = "dummyLoc";

pub const CYCLIC_RULE: &str = "drop_cyclic_journeys";

const TRACKING_KB: &str = include_str!("../kb/tracking.clp");

/// Source text of the tracking knowledge base.
pub fn build_tracking_kb() -> &'static str {
    TRACKING_KB
}

/// Parsed tracking constructs, optionally without the cyclic-journey rule.
pub fn tracking_constructs(cyclic_pruning: bool) -> Vec<Construct> {
    let mut constructs = parse_program(TRACKING_KB).expect("shipped knowledge base parses");
    if !cyclic_pruning {
        constructs.retain(|c| !matches!(c, Construct::Rule(r) if r.name == CYCLIC_RULE));
    }
    constructs
}

pub fn tracking_kb(cyclic_pruning: bool) -> KnowledgeBase {
    KnowledgeBase::load(&tracking_constructs(cyclic_pruning))
        .expect("shipped knowledge base is valid")
}

/// Engine over the tracking KB holding the registry's initial facts.
pub fn tracking_engine(registry: &Registry, cyclic_pruning: bool) -> Result<Engine, RegistryError> {
    let kb = Arc::new(tracking_kb(cyclic_pruning));
    let mut engine = Engine::new(kb.clone());
    for f in registry.initial_facts(&kb)? {
        engine.assert_fact(f)?;
    }
    Ok(engine)
}

/// One `find_journeys` result as presented to users.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JourneyRow {
    pub name: String,
    #[serde(rename = "endA")]
    pub end_a: String,
    #[serde(rename = "endB")]
    pub end_b: String,
    #[serde(rename = "tStart")]
    pub t_start: i64,
    #[serde(rename = "tFinish")]
    pub t_finish: i64,
    pub distance: f64,
    #[serde(rename = "tTaken")]
    pub t_taken: i64,
    pub velocity: f64,
    #[serde(rename = "corrected_tTaken")]
    pub corrected_t_taken: i64,
    #[serde(rename = "tStart_hms")]
    pub t_start_hms: String,
    #[serde(rename = "tFinish_hms")]
    pub t_finish_hms: String,
}

/// One `where_is` or `location_history` result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocationRow {
    pub name: String,
    pub location: String,
    #[serde(rename = "tStart")]
    pub t_start: i64,
    #[serde(rename = "tFinish")]
    pub t_finish: i64,
    #[serde(rename = "tStart_hms")]
    pub t_start_hms: String,
    #[serde(rename = "tFinish_hms")]
    pub t_finish_hms: String,
}

/// `HH:MM:SS` of an epoch-millisecond time, UTC.
pub fn hms(ms: i64) -> String {
    let s = ms.div_euclid(1000).rem_euclid(86_400);
    alloc::format!("{:02}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60)
}

pub fn corrected_t_taken(t_taken: i64, delay_correction_ms: i64) -> i64 {
    t_taken
        .saturating_sub(delay_correction_ms.saturating_mul(2))
        .max(0)
}

fn text(row: &QueryRow, var: &str) -> Option<String> {
    row.bindings.get(var)?.as_str().map(String::from)
}

fn int(row: &QueryRow, var: &str) -> Option<i64> {
    row.bindings.get(var)?.as_i64()
}

fn num(row: &QueryRow, var: &str) -> Option<f64> {
    row.bindings.get(var).and_then(SlotValue::as_f64)
}

/// Converts `find_journeys` rows. Rows with missing or mistyped slots are
/// dropped.
pub fn journey_rows(rows: &[QueryRow], delay_correction_ms: i64) -> Vec<JourneyRow> {
    rows.iter()
        .filter_map(|r| {
            let t_start = int(r, "tStart")?;
            let t_finish = int(r, "tFinish")?;
            let t_taken = int(r, "tTaken")?;
            Some(JourneyRow {
                name: text(r, "name")?,
                end_a: text(r, "endA")?,
                end_b: text(r, "endB")?,
                t_start,
                t_finish,
                distance: num(r, "distance")?,
                t_taken,
                velocity: num(r, "velocity")?,
                corrected_t_taken: corrected_t_taken(t_taken, delay_correction_ms),
                t_start_hms: hms(t_start),
                t_finish_hms: hms(t_finish),
            })
        })
        .collect()
}

/// Converts `where_is` or `location_history` rows, dropping bootstrap
/// `dummyLoc` rows unless `include_dummy` is set.
pub fn location_rows(rows: &[QueryRow], include_dummy: bool) -> Vec<LocationRow> {
    rows.iter()
        .filter_map(|r| {
            let location = text(r, "location")?;
            if !include_dummy && location == DUMMY_LOCATION {
                return None;
            }
            let t_start = int(r, "tStart")?;
            let t_finish = int(r, "tFinish")?;
            Some(LocationRow {
                name: text(r, "name")?,
                location,
                t_start,
                t_finish,
                t_start_hms: hms(t_start),
                t_finish_hms: hms(t_finish),
            })
        })
        .collect()
}
