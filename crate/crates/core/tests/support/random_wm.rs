//! Random small working memories over the tracking templates.

#![allow(dead_code)]

use proptest::prelude::*;
use rbs3_core::SlotValue;

#[derive(Debug, Clone)]
pub struct GenFact {
    pub template: &'static str,
    pub values: Vec<(&'static str, SlotValue)>,
    /// Run the engine to quiescence right after asserting this fact.
    pub run_after: bool,
}

impl GenFact {
    pub fn bindings(&self) -> Vec<(&'static str, SlotValue)> {
        self.values.clone()
    }
}

const TEMPLATES: [(&str, &[&str]); 7] = [
    ("MobileTrace", &["location", "address", "time"]),
    ("Person", &["name", "deviceAddress"]),
    ("Corridor", &["enda", "endb", "length"]),
    ("is-seen-at", &["name", "location", "time"]),
    (
        "is-currently-at",
        &["name", "location", "tStart", "tFinish"],
    ),
    ("was-at", &["name", "location", "tStart", "tFinish"]),
    (
        "was-tracked",
        &[
            "name", "endA", "endB", "tStart", "tFinish", "distance", "tTaken", "velocity",
        ],
    ),
];

fn slot_value(slot: &'static str) -> BoxedStrategy<SlotValue> {
    let nil = Just(SlotValue::nil());
    match slot {
        "name" => prop_oneof![9 => prop::sample::select(vec!["Pete", "Anna"]).prop_map(SlotValue::text), 1 => nil].boxed(),
        "address" | "deviceAddress" => {
            prop_oneof![9 => prop::sample::select(vec!["A1B2", "C3D4"]).prop_map(SlotValue::text), 1 => nil].boxed()
        }
        "location" | "enda" | "endb" | "endA" | "endB" => prop_oneof![
            9 => prop::sample::select(vec!["730", "740", "000", "dummyLoc"]).prop_map(SlotValue::symbol),
            1 => nil
        ]
        .boxed(),
        "length" | "distance" | "velocity" => prop_oneof![
            Just(SlotValue::Float(20.0)),
            Just(SlotValue::Integer(20)),
            Just(SlotValue::nil())
        ]
        .boxed(),
        _ => prop_oneof![
            9 => (0i64..7).prop_map(|k| SlotValue::Integer(k * 1000)),
            1 => nil
        ]
        .boxed(),
    }
}

fn fact() -> impl Strategy<Value = GenFact> {
    (0..TEMPLATES.len(), any::<bool>()).prop_flat_map(|(t, run_after)| {
        let (template, slots) = TEMPLATES[t];
        slots
            .iter()
            .map(|s| slot_value(s).prop_map(move |v| (*s, v)))
            .collect::<Vec<_>>()
            .prop_map(move |values| GenFact {
                template,
                values,
                run_after,
            })
    })
}

/// Between 1 and `max` facts; templates feeding the rules are favored so
/// that rules actually fire.
pub fn tracking_facts(max: usize) -> impl Strategy<Value = Vec<GenFact>> {
    prop::collection::vec(fact(), 1..=max)
}
