//! Scripted-walk sensor simulator.
//!
//! Tags broadcast on a fixed grid from a person's first arrival to last
//! departure. A broadcast inside a room with a locator reports the room code
//! when a line-of-sight draw succeeds and `000` otherwise; broadcasts between
//! waypoints report `000`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ingest::{Registry, SensorRecord, NO_FIX};
use crate::rng::Lcg64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

fn invalid<T>(msg: String) -> Result<T, SimError> {
    Err(SimError::InvalidScenario(msg))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    pub code: String,
    pub has_locator: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Waypoint {
    pub location: String,
    pub arrive_t: i64,
    pub depart_t: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Walk {
    pub person: String,
    pub waypoints: Vec<Waypoint>,
    /// Phone address seen by Bluetooth readers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bt_address: Option<String>,
}

/// Bluetooth readers, one per listed room, discovering phones every
/// `interval_ms` while their owner is in the room.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bluetooth {
    pub readers: Vec<String>,
    pub interval_ms: i64,
}

fn default_interval() -> i64 {
    2000
}

fn default_los() -> f64 {
    1.0
}

fn default_reader() -> String {
    "R1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub rooms: Vec<Room>,
    pub registry: Registry,
    pub walks: Vec<Walk>,
    #[serde(default = "default_interval")]
    pub broadcast_interval_ms: i64,
    #[serde(default = "default_los")]
    pub los_probability: f64,
    pub seed: u64,
    #[serde(default = "default_reader")]
    pub rfid_reader_location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bluetooth: Option<Bluetooth>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueTraversal {
    pub person: String,
    #[serde(rename = "endA")]
    pub end_a: String,
    #[serde(rename = "endB")]
    pub end_b: String,
    pub true_depart_ms: i64,
    pub true_arrive_ms: i64,
    #[serde(rename = "true_tTaken_ms")]
    pub true_t_taken_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Waypoint timeline per person, in walk order.
    pub timelines: Vec<(String, Vec<Waypoint>)>,
    pub traversals: Vec<TrueTraversal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// Sorted by `t`; ties keep walk order.
    pub records: Vec<SensorRecord>,
    pub truth: GroundTruth,
}

impl Scenario {
    fn locators(&self) -> BTreeMap<&str, bool> {
        self.rooms
            .iter()
            .map(|r| (r.code.as_str(), r.has_locator))
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.broadcast_interval_ms <= 0 {
            return invalid("broadcast_interval_ms must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.los_probability) {
            return invalid("los_probability must lie in [0, 1]".into());
        }
        if let Some(bt) = &self.bluetooth {
            if bt.interval_ms <= 0 {
                return invalid("bluetooth interval_ms must be positive".into());
            }
        }
        self.registry
            .validate()
            .map_err(|e| SimError::InvalidScenario(alloc::format!("{e}")))?;
        let rooms = self.locators();
        for w in &self.walks {
            if self.registry.device_of(&w.person).is_none() {
                return invalid(alloc::format!(
                    "person `{}` is not in the registry",
                    w.person
                ));
            }
            if w.waypoints.is_empty() {
                return invalid(alloc::format!("walk of `{}` has no waypoints", w.person));
            }
            let mut prev_depart = None;
            for wp in &w.waypoints {
                if wp.location != NO_FIX && !rooms.contains_key(wp.location.as_str()) {
                    return invalid(alloc::format!("unknown room code `{}`", wp.location));
                }
                if wp.arrive_t > wp.depart_t {
                    return invalid(alloc::format!(
                        "waypoint at `{}` departs before it arrives",
                        wp.location
                    ));
                }
                if prev_depart.is_some_and(|p| wp.arrive_t <= p) {
                    return invalid(alloc::format!(
                        "waypoints of `{}` overlap at {}",
                        w.person,
                        wp.arrive_t
                    ));
                }
                prev_depart = Some(wp.depart_t);
            }
        }
        Ok(())
    }
}

fn waypoint_at(w: &Walk, t: i64) -> Option<&Waypoint> {
    w.waypoints
        .iter()
        .find(|wp| wp.arrive_t <= t && t <= wp.depart_t)
}

/// Produces the replay records and ground truth of a valid scenario.
pub fn generate(s: &Scenario) -> Result<SimOutput, SimError> {
    s.validate()?;
    let rooms = s.locators();
    let mut rng = Lcg64::new(s.seed);
    let mut records = Vec::new();
    for w in &s.walks {
        let tag = s.registry.device_of(&w.person).expect("validated person");
        let first = w.waypoints[0].arrive_t;
        let last = w.waypoints[w.waypoints.len() - 1].depart_t;
        let mut t = first;
        while t <= last {
            let code = match waypoint_at(w, t) {
                Some(wp) if rooms.get(wp.location.as_str()).copied().unwrap_or(false) => {
                    if rng.next_f64() < s.los_probability {
                        wp.location.as_str()
                    } else {
                        NO_FIX
                    }
                }
                _ => NO_FIX,
            };
            records.push(SensorRecord::rfid(t, &s.rfid_reader_location, tag, code));
            t += s.broadcast_interval_ms;
        }
        if let (Some(bt), Some(addr)) = (&s.bluetooth, &w.bt_address) {
            let mut t = first;
            while t <= last {
                if let Some(wp) = waypoint_at(w, t) {
                    if bt.readers.contains(&wp.location) {
                        records.push(SensorRecord::bt(t, &wp.location, addr));
                    }
                }
                t += bt.interval_ms;
            }
        }
    }
    records.sort_by_key(|r| r.t);
    Ok(SimOutput {
        records,
        truth: GroundTruth {
            timelines: s
                .walks
                .iter()
                .map(|w| (w.person.clone(), w.waypoints.clone()))
                .collect(),
            traversals: true_traversals(s, &s.registry),
        },
    })
}

/// Consecutive locator-room dwells whose rooms form a registered corridor in
/// the endA to endB direction. Transit and rooms without locators do not
/// break a pair.
pub fn true_traversals(s: &Scenario, reg: &Registry) -> Vec<TrueTraversal> {
    let rooms = s.locators();
    let mut out = Vec::new();
    for w in &s.walks {
        let dwells: Vec<&Waypoint> = w
            .waypoints
            .iter()
            .filter(|wp| rooms.get(wp.location.as_str()).copied().unwrap_or(false))
            .collect();
        for pair in dwells.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if reg.corridor(&a.location, &b.location).is_some() {
                out.push(TrueTraversal {
                    person: w.person.clone(),
                    end_a: a.location.clone(),
                    end_b: b.location.clone(),
                    true_depart_ms: a.depart_t,
                    true_arrive_ms: b.arrive_t,
                    true_t_taken_ms: b.arrive_t - a.depart_t,
                });
            }
        }
    }
    out
}
