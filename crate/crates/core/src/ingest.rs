//! Static registries and sensor records, and their translation into facts.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{AssertResult, Engine, EngineError, KnowledgeBase, RunOutcome, RuntimeError};
use crate::fact::Fact;
use crate::tracking::DUMMY_LOCATION;
use crate::value::SlotValue;

/// Location code reported by a tag that has no line of sight to a locator.
pub const NO_FIX: &str = "000";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("device `{0}` is registered to more than one person")]
    DuplicateDevice(String),
    #[error("malformed registry: {0}")]
    Malformed(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonEntry {
    pub name: String,
    #[serde(rename = "deviceAddress")]
    pub device_address: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorEntry {
    pub enda: String,
    pub endb: String,
    /// Meters.
    pub length: f64,
}

/// Person/device lookup plus corridor definitions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    #[serde(default)]
    pub persons: Vec<PersonEntry>,
    #[serde(default)]
    pub corridors: Vec<CorridorEntry>,
}

impl Registry {
    pub fn validate(&self) -> Result<(), RegistryError> {
        let mut seen = BTreeSet::new();
        for p in &self.persons {
            if !seen.insert(p.device_address.as_str()) {
                return Err(RegistryError::DuplicateDevice(p.device_address.clone()));
            }
        }
        for c in &self.corridors {
            if c.enda == c.endb {
                return Err(RegistryError::Malformed(alloc::format!(
                    "corridor {}-{} has identical ends",
                    c.enda,
                    c.endb
                )));
            }
            if !(c.length.is_finite() && c.length > 0.0) {
                return Err(RegistryError::Malformed(alloc::format!(
                    "corridor {}-{} has non-positive length",
                    c.enda,
                    c.endb
                )));
            }
        }
        Ok(())
    }

    pub fn knows_device(&self, address: &str) -> bool {
        self.persons.iter().any(|p| p.device_address == address)
    }

    pub fn device_of(&self, name: &str) -> Option<&str> {
        self.persons
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.device_address.as_str())
    }

    pub fn corridor(&self, enda: &str, endb: &str) -> Option<&CorridorEntry> {
        self.corridors
            .iter()
            .find(|c| c.enda == enda && c.endb == endb)
    }

    /// One Person and one bootstrap `is-currently-at` (at `dummyLoc`, time 0)
    /// per person, and one Corridor per corridor.
    pub fn initial_facts(&self, kb: &KnowledgeBase) -> Result<Vec<Fact>, RegistryError> {
        self.validate()?;
        let mut out = Vec::new();
        for p in &self.persons {
            out.push(kb.make_fact(
                "Person",
                [
                    ("name", SlotValue::text(&p.name)),
                    ("deviceAddress", SlotValue::text(&p.device_address)),
                ],
            )?);
        }
        for c in &self.corridors {
            out.push(kb.make_fact(
                "Corridor",
                [
                    ("enda", SlotValue::symbol(&c.enda)),
                    ("endb", SlotValue::symbol(&c.endb)),
                    ("length", SlotValue::Float(c.length)),
                ],
            )?);
        }
        let mut names = BTreeSet::new();
        for p in &self.persons {
            if names.insert(p.name.as_str()) {
                out.push(kb.make_fact(
                    "is-currently-at",
                    [
                        ("name", SlotValue::text(&p.name)),
                        ("location", SlotValue::symbol(DUMMY_LOCATION)),
                        ("tStart", SlotValue::Integer(0)),
                        ("tFinish", SlotValue::Integer(0)),
                    ],
                )?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensorKind {
    #[serde(rename = "rfidReader")]
    RfidReader,
    #[serde(rename = "btReader")]
    BtReader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Rfid {
        tag_id: String,
        ir_code: String,
        motion: bool,
    },
    Bt {
        bt_address: String,
    },
}

/// One reader event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    /// Epoch milliseconds.
    pub t: i64,
    pub sensor: SensorKind,
    pub reader_location: String,
    pub payload: Payload,
}

impl SensorRecord {
    pub fn rfid(t: i64, reader_location: &str, tag_id: &str, ir_code: &str) -> Self {
        SensorRecord {
            t,
            sensor: SensorKind::RfidReader,
            reader_location: reader_location.into(),
            payload: Payload::Rfid {
                tag_id: tag_id.into(),
                ir_code: ir_code.into(),
                motion: true,
            },
        }
    }

    pub fn bt(t: i64, reader_location: &str, bt_address: &str) -> Self {
        SensorRecord {
            t,
            sensor: SensorKind::BtReader,
            reader_location: reader_location.into(),
            payload: Payload::Bt {
                bt_address: bt_address.into(),
            },
        }
    }

    /// Checks that the payload matches the sensor kind and that IR codes
    /// have three characters.
    pub fn validate(&self) -> Result<(), String> {
        match (&self.sensor, &self.payload) {
            (SensorKind::RfidReader, Payload::Rfid { ir_code, .. }) => {
                if ir_code.chars().count() != 3 {
                    return Err(alloc::format!(
                        "ir_code `{ir_code}` is not a 3-character code"
                    ));
                }
                Ok(())
            }
            (SensorKind::BtReader, Payload::Bt { .. }) => Ok(()),
            _ => Err("payload does not match sensor kind".into()),
        }
    }
}

/// A MobileTrace fact's slot values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobileTrace {
    pub location: String,
    pub address: String,
    pub time: i64,
}

impl MobileTrace {
    pub fn to_fact(&self, kb: &KnowledgeBase) -> Result<Fact, EngineError> {
        kb.make_fact(
            "MobileTrace",
            [
                ("location", SlotValue::symbol(&self.location)),
                ("address", SlotValue::text(&self.address)),
                ("time", SlotValue::Integer(self.time)),
            ],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    UnknownDevice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Translation {
    Trace(MobileTrace),
    Skip(SkipReason),
}

/// RFID records report the IR code as location (including `000`); BT
/// records report the reader's location.
pub fn translate(r: &SensorRecord, reg: &Registry, pass_through: bool) -> Translation {
    let (location, address) = match &r.payload {
        Payload::Rfid {
            tag_id, ir_code, ..
        } => (ir_code, tag_id),
        Payload::Bt { bt_address } => (&r.reader_location, bt_address),
    };
    if !pass_through && !reg.knows_device(address) {
        return Translation::Skip(SkipReason::UnknownDevice);
    }
    Translation::Trace(MobileTrace {
        location: location.clone(),
        address: address.clone(),
        time: r.t,
    })
}

/// Replay counters. `records` equals the sum of all other fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FeedStats {
    pub records: u64,
    pub facts: u64,
    pub duplicates: u64,
    pub unknown_devices: u64,
    pub out_of_order: u64,
    pub malformed: u64,
}

/// What happened to one pushed record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fed {
    Asserted,
    Duplicate,
    UnknownDevice,
    OutOfOrder,
}

/// Drives an engine from a time-ordered record stream.
///
/// Records sharing a timestamp form a cohort: all are asserted before the
/// engine runs. The engine runs to quiescence when the next cohort starts
/// and on [`Feeder::finish`].
pub struct Feeder<'a> {
    engine: &'a mut Engine,
    registry: &'a Registry,
    pass_through: bool,
    cohort: Option<i64>,
    stats: FeedStats,
    errors: Vec<RuntimeError>,
}

impl<'a> Feeder<'a> {
    pub fn new(engine: &'a mut Engine, registry: &'a Registry) -> Self {
        Feeder {
            engine,
            registry,
            pass_through: false,
            cohort: None,
            stats: FeedStats::default(),
            errors: Vec::new(),
        }
    }

    /// Assert traces from unregistered devices instead of skipping them.
    pub fn pass_through(mut self, yes: bool) -> Self {
        self.pass_through = yes;
        self
    }

    pub fn stats(&self) -> FeedStats {
        self.stats
    }

    pub fn runtime_errors(&self) -> &[RuntimeError] {
        &self.errors
    }

    pub fn engine(&self) -> &Engine {
        self.engine
    }

    /// Timestamp of the cohort being assembled.
    pub fn cohort(&self) -> Option<i64> {
        self.cohort
    }

    pub fn malformed(&mut self) {
        self.stats.records += 1;
        self.stats.malformed += 1;
    }

    /// Runs the engine to quiescence, closing the current cohort.
    pub fn cycle(&mut self) -> RunOutcome {
        let out = self.engine.run(None);
        self.errors.extend(out.errors.iter().cloned());
        out
    }

    /// Feeds one record. Returns the outcome and, when the record opened a
    /// new cohort, the run that closed the previous one.
    pub fn push(&mut self, r: &SensorRecord) -> Result<(Fed, Option<RunOutcome>), EngineError> {
        self.stats.records += 1;
        let mut closed = None;
        match self.cohort {
            Some(c) if r.t < c => {
                self.stats.out_of_order += 1;
                return Ok((Fed::OutOfOrder, None));
            }
            Some(c) if r.t == c => {}
            Some(_) => {
                closed = Some(self.cycle());
                self.cohort = Some(r.t);
            }
            None => self.cohort = Some(r.t),
        }
        self.engine.set_clock(r.t);
        let fed = match translate(r, self.registry, self.pass_through) {
            Translation::Skip(SkipReason::UnknownDevice) => {
                self.stats.unknown_devices += 1;
                Fed::UnknownDevice
            }
            Translation::Trace(trace) => {
                let fact = trace.to_fact(self.engine.kb())?;
                match self.engine.assert_fact(fact)? {
                    AssertResult::NewId(_) => {
                        self.stats.facts += 1;
                        Fed::Asserted
                    }
                    AssertResult::Duplicate(_) => {
                        self.stats.duplicates += 1;
                        Fed::Duplicate
                    }
                }
            }
        };
        Ok((fed, closed))
    }

    /// Closes the last cohort.
    pub fn finish(&mut self) -> RunOutcome {
        self.cycle()
    }
}
