//! JSON file formats: registries, replay files, scenarios, ground truth,
//! fire logs, and JSON renderings of values and results.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rbs3_core::engine::{FireLog, QueryRow};
use rbs3_core::ingest::{Registry, SensorRecord};
use rbs3_core::sim::{GroundTruth, Scenario};
use rbs3_core::{Fact, FactId, SlotValue};
use serde_json::{json, Map, Value};

pub fn parse_registry(text: &str) -> Result<Registry> {
    let reg: Registry = serde_json::from_str(text).context("malformed registry")?;
    reg.validate()?;
    Ok(reg)
}

pub fn read_registry(path: &Path) -> Result<Registry> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_registry(&text).with_context(|| format!("in {}", path.display()))
}

/// Parses and checks one replay line.
pub fn parse_record(line: &str) -> Result<SensorRecord, String> {
    let r: SensorRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    r.validate()?;
    Ok(r)
}

pub fn write_records(out: &mut impl Write, records: &[SensorRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a scenario. `registry` may be inline or a path relative to the
/// scenario file.
pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: Value = serde_json::from_str(&text).context("malformed scenario")?;
    if let Some(Value::String(rel)) = value.get("registry") {
        let reg_path = path.parent().unwrap_or(Path::new(".")).join(rel);
        let reg = read_registry(&reg_path)?;
        value["registry"] = serde_json::to_value(reg)?;
    }
    let scenario: Scenario = serde_json::from_value(value).context("malformed scenario")?;
    scenario.validate()?;
    Ok(scenario)
}

/// Waypoint rows, then traversal rows, each tagged with `kind`.
pub fn write_truth(out: &mut impl Write, truth: &GroundTruth) -> io::Result<()> {
    for (person, waypoints) in &truth.timelines {
        for w in waypoints {
            let row = json!({
                "kind": "waypoint",
                "person": person,
                "location": w.location,
                "arrive_t": w.arrive_t,
                "depart_t": w.depart_t,
            });
            writeln!(out, "{row}")?;
        }
    }
    for t in &truth.traversals {
        let mut row = Map::new();
        row.insert("kind".into(), "traversal".into());
        if let Value::Object(fields) = serde_json::to_value(t)? {
            row.extend(fields);
        }
        writeln!(out, "{}", Value::Object(row))?;
    }
    Ok(())
}

/// One JSON object per entry: seq, rule, consumed, produced, retracted.
pub fn write_fire_log(out: &mut impl Write, log: &FireLog) -> io::Result<()> {
    for e in log.iter() {
        serde_json::to_writer(&mut *out, &e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn value_json(v: &SlotValue) -> Value {
    match v {
        SlotValue::Symbol(s) => Value::String(s.as_str().into()),
        SlotValue::Text(t) => Value::String(t.to_string()),
        SlotValue::Integer(i) => Value::from(*i),
        SlotValue::Float(x) => Value::from(*x),
    }
}

/// Query and HTTP arguments: integers and floats by their look, text
/// otherwise.
pub fn parse_arg(raw: &str) -> SlotValue {
    if let Ok(i) = raw.parse::<i64>() {
        return SlotValue::Integer(i);
    }
    match raw.parse::<f64>() {
        Ok(x) if x.is_finite() && raw.bytes().any(|b| b.is_ascii_digit()) => SlotValue::Float(x),
        _ => SlotValue::text(raw),
    }
}

/// Splits `k=v` pairs.
pub fn parse_kv(pairs: &[String]) -> Result<Vec<(String, SlotValue)>> {
    let mut out = Vec::new();
    for p in pairs {
        let Some((k, v)) = p.split_once('=') else {
            bail!("argument `{p}` is not of the form key=value");
        };
        out.push((k.to_string(), parse_arg(v)));
    }
    Ok(out)
}

pub fn fact_json(id: FactId, f: &Fact) -> Value {
    let slots: Map<String, Value> = f
        .slots()
        .map(|(s, v)| (s.to_string(), value_json(v)))
        .collect();
    json!({ "id": id.0, "template": f.template_name(), "slots": slots })
}

pub fn row_json(r: &QueryRow) -> Value {
    let mut m: Map<String, Value> = r
        .bindings
        .iter()
        .map(|(k, v)| (k.clone(), value_json(v)))
        .collect();
    m.insert("facts".into(), r.facts.iter().map(|f| f.0).collect());
    Value::Object(m)
}
