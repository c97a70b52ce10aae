//! Seeded random walk scenarios and journey matching against ground truth.

#![allow(dead_code)]

use rbs3_core::ingest::{CorridorEntry, PersonEntry, Registry};
use rbs3_core::rng::Lcg64;
use rbs3_core::sim::{Room, Scenario, TrueTraversal, Walk, Waypoint};
use rbs3_core::tracking::JourneyRow;

pub const DAY_START_MS: i64 = 1_696_118_400_000;

pub fn registry() -> Registry {
    let person = |name: &str, addr: &str| PersonEntry {
        name: name.into(),
        device_address: addr.into(),
    };
    let corridor = |a: &str, b: &str, length: f64| CorridorEntry {
        enda: a.into(),
        endb: b.into(),
        length,
    };
    Registry {
        persons: vec![person("Pete", "A1B2"), person("Anna", "C3D4")],
        corridors: vec![
            corridor("730", "740", 20.0),
            corridor("740", "760", 35.5),
            corridor("760", "730", 12.0),
        ],
    }
}

fn pick(rng: &mut Lcg64, n: usize) -> usize {
    (rng.next_f64() * n as f64) as usize
}

fn between(rng: &mut Lcg64, lo: i64, hi: i64) -> i64 {
    lo + (rng.next_f64() * (hi - lo + 1) as f64) as i64
}

/// Walks through rooms 730/740/760 (with locators), 750 (without) and
/// explicit `000` transit waypoints. Every dwell lasts at least one
/// broadcast interval.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = Lcg64::new(seed ^ 0x5eed);
    let places = ["730", "740", "760", "750", "000"];
    let mut walks = Vec::new();
    for person in ["Pete", "Anna"].into_iter().take(1 + pick(&mut rng, 2)) {
        let mut t = DAY_START_MS + between(&mut rng, 0, 5_000);
        let mut waypoints = Vec::new();
        for _ in 0..between(&mut rng, 2, 10) {
            let dwell = between(&mut rng, 2_000, 20_000);
            waypoints.push(Waypoint {
                location: places[pick(&mut rng, places.len())].into(),
                arrive_t: t,
                depart_t: t + dwell,
            });
            t += dwell + between(&mut rng, 1, 15_000);
        }
        walks.push(Walk {
            person: person.into(),
            waypoints,
            bt_address: None,
        });
    }
    Scenario {
        rooms: vec![
            Room {
                code: "730".into(),
                has_locator: true,
            },
            Room {
                code: "740".into(),
                has_locator: true,
            },
            Room {
                code: "760".into(),
                has_locator: true,
            },
            Room {
                code: "750".into(),
                has_locator: false,
            },
        ],
        registry: registry(),
        walks,
        broadcast_interval_ms: 2_000,
        los_probability: 1.0,
        seed,
        rfid_reader_location: "R1".into(),
        bluetooth: None,
    }
}

/// The shortest inferred journey of the same person and corridor whose
/// interval overlaps the true traversal.
pub fn matching_journey<'a>(
    t: &TrueTraversal,
    journeys: &'a [JourneyRow],
) -> Option<&'a JourneyRow> {
    journeys
        .iter()
        .filter(|j| j.name == t.person && j.end_a == t.end_a && j.end_b == t.end_b)
        .filter(|j| j.t_start <= t.true_arrive_ms && t.true_depart_ms <= j.t_finish)
        .min_by_key(|j| j.t_finish - j.t_start)
}

/// `persons` people walking the three-corridor loop until the generated
/// replay holds at least `records` RFID records.
pub fn busy_scenario(seed: u64, persons: usize, records: usize) -> Scenario {
    let mut rng = Lcg64::new(seed);
    let mut base = registry();
    base.persons = (0..persons)
        .map(|i| PersonEntry {
            name: format!("P{i:03}"),
            device_address: format!("D{i:03}"),
        })
        .collect();
    let per_person_ms = (records / persons + 1) as i64 * 2_000;
    let places = ["730", "740", "760", "750"];
    let walks = base
        .persons
        .iter()
        .map(|p| {
            let mut t = DAY_START_MS + between(&mut rng, 0, 1_999);
            let end = t + per_person_ms;
            let mut waypoints = Vec::new();
            while t < end {
                let dwell = between(&mut rng, 4_000, 30_000);
                waypoints.push(Waypoint {
                    location: places[pick(&mut rng, 4)].into(),
                    arrive_t: t,
                    depart_t: t + dwell,
                });
                t += dwell + between(&mut rng, 1, 10_000);
            }
            Walk {
                person: p.name.clone(),
                waypoints,
                bt_address: None,
            }
        })
        .collect();
    Scenario {
        registry: base,
        walks,
        seed,
        ..random_scenario(seed)
    }
}
