//! Engine properties, shared by the property tests and the acceptance run.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rbs3_core::engine::FireLogEntry;
use rbs3_core::tracking::{tracking_constructs, tracking_kb};
use rbs3_core::{AssertResult, Engine, FactId, KnowledgeBase, SlotValue};

use super::oracle::{Oracle, Row};
use super::random_wm::GenFact;

type Outcome = Result<(), TestCaseError>;

pub fn engine_facts(e: &Engine) -> BTreeMap<u64, (String, Vec<SlotValue>)> {
    e.facts()
        .iter()
        .map(|(id, f)| (id.0, (f.template_name().to_string(), f.values().to_vec())))
        .collect()
}

fn engine_rows(e: &Engine, q: &str, name: &str) -> Vec<Row> {
    let args = [("name".to_string(), SlotValue::text(name))]
        .into_iter()
        .collect();
    let mut rows: Vec<Row> = e
        .run_query(q, &args)
        .unwrap()
        .into_iter()
        .map(|r| Row {
            bindings: r.bindings,
            facts: r.facts.iter().map(|f| f.0).collect(),
        })
        .collect();
    rows.sort();
    rows
}

fn log_of(e: &Engine) -> Vec<FireLogEntry> {
    e.fire_log().iter().map(|x| x.to_owned()).collect()
}

fn fresh() -> Engine {
    Engine::new(Arc::new(tracking_kb(true)))
}

fn assert_all(e: &mut Engine, facts: &[GenFact]) {
    for f in facts {
        e.assert_slots(f.template, f.bindings()).unwrap();
        if f.run_after {
            e.run(None);
        }
    }
    e.run(None);
}

/// Final working memory, fire log, error count and query results all equal
/// the brute-force evaluator's.
pub fn matches_oracle(facts: &[GenFact]) -> Outcome {
    let mut e = fresh();
    let mut o = Oracle::new(&tracking_constructs(true));
    let (mut engine_errors, mut oracle_errors) = (0, 0);
    for f in facts {
        let r = e.assert_slots(f.template, f.bindings()).unwrap();
        let values = o.values(f.template, &f.bindings());
        let oid = o.assert(f.template, values);
        prop_assert_eq!(matches!(r, AssertResult::NewId(_)).then(|| r.id().0), oid);
        if f.run_after {
            engine_errors += e.run(None).errors.len();
            oracle_errors += o.run().1;
        }
    }
    engine_errors += e.run(None).errors.len();
    oracle_errors += o.run().1;
    prop_assert_eq!(engine_facts(&e), o.facts.clone());
    let log: Vec<(String, Vec<u64>)> = e
        .fire_log()
        .iter()
        .map(|x| (x.rule.to_string(), x.consumed.to_vec()))
        .collect();
    prop_assert_eq!(&log, &o.log);
    prop_assert_eq!(engine_errors, oracle_errors);
    for q in ["find_journeys", "where_is", "location_history"] {
        for name in ["Pete", "Anna"] {
            let args = [("name".to_string(), SlotValue::text(name))]
                .into_iter()
                .collect();
            prop_assert_eq!(engine_rows(&e, q, name), o.query(q, &args));
        }
    }
    Ok(())
}

pub fn set_semantics(facts: &[GenFact]) -> Outcome {
    let mut e = fresh();
    assert_all(&mut e, facts);
    let all: Vec<_> = engine_facts(&e).into_values().collect();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            prop_assert_ne!(&all[i], &all[j]);
        }
    }
    Ok(())
}

pub fn duplicate_rejected(facts: &[GenFact], pick: prop::sample::Index) -> Outcome {
    let mut e = fresh();
    let mut ids = Vec::new();
    for f in facts {
        ids.push(e.assert_slots(f.template, f.bindings()).unwrap());
    }
    let k = pick.index(facts.len());
    let n = e.facts().len();
    let again = e
        .assert_slots(facts[k].template, facts[k].bindings())
        .unwrap();
    prop_assert_eq!(again, AssertResult::Duplicate(ids[k].id()));
    prop_assert_eq!(e.facts().len(), n);
    Ok(())
}

/// No (rule, tuple) fires twice unless a fact of the tuple was modified in
/// between.
pub fn refraction(facts: &[GenFact]) -> Outcome {
    let mut e = fresh();
    assert_all(&mut e, facts);
    let log = log_of(&e);
    for i in 0..log.len() {
        for j in i + 1..log.len() {
            if log[i].rule == log[j].rule && log[i].consumed == log[j].consumed {
                let modified = log[i..j].iter().any(|k| {
                    log[i]
                        .consumed
                        .iter()
                        .any(|c| k.retracted.contains(c) && k.produced.contains(c))
                });
                prop_assert!(modified, "{:?} fired twice", log[i]);
            }
        }
    }
    Ok(())
}

pub fn retraction_cancels(facts: &[GenFact], mask: &[bool]) -> Outcome {
    let mut e = fresh();
    let mut gone = Vec::new();
    for (f, drop) in facts.iter().zip(mask) {
        if let AssertResult::NewId(id) = e.assert_slots(f.template, f.bindings()).unwrap() {
            if *drop {
                e.retract_fact(id).unwrap();
                gone.push(id.0);
                prop_assert!(e.agenda().iter().all(|(_, t)| !t.contains(&id)));
            }
        }
    }
    e.run(None);
    for entry in e.fire_log().iter() {
        prop_assert!(entry.consumed.iter().all(|c| !gone.contains(c)));
    }
    Ok(())
}

/// Every firing comes from the highest salience on the agenda, and within
/// it from the most recent tuple.
pub fn salience_dominates_recency(saliences: &[i64], xs: &[i64]) -> Outcome {
    let text = format!(
        "(deftemplate A (slot x))
         (deftemplate B (slot x))
         (defrule r0 (declare (salience {})) (A (x ?x)) => (assert (B (x ?x))))
         (defrule r1 (declare (salience {})) (A (x ?x)) (B (x ?x)) => (assert (B (x (+ ?x 1)))))
         (defrule r2 (declare (salience {})) (B (x ?x)) (test (< ?x 8)) => (assert (A (x (+ ?x 2)))))",
        saliences[0], saliences[1], saliences[2]
    );
    let mut e = Engine::new(Arc::new(KnowledgeBase::from_text(&text).unwrap()));
    for &x in xs {
        e.assert_slots("A", [("x", SlotValue::Integer(x))]).unwrap();
    }
    let sal = |r: &str| saliences[r[1..].parse::<usize>().unwrap()];
    loop {
        let agenda: Vec<(String, Vec<FactId>)> = e
            .agenda()
            .into_iter()
            .map(|(r, t)| (r.to_string(), t))
            .collect();
        if agenda.is_empty() {
            break;
        }
        let best = agenda.iter().map(|(r, _)| sal(r)).max().unwrap();
        e.run(Some(1));
        let fired = e.fire_log().iter().last().unwrap().to_owned();
        prop_assert_eq!(sal(&fired.rule), best);
        let top = agenda
            .iter()
            .filter(|(r, _)| sal(r) == best)
            .map(|(_, t)| t.iter().max().unwrap().0)
            .max()
            .unwrap();
        prop_assert_eq!(*fired.consumed.iter().max().unwrap(), top);
    }
    Ok(())
}

pub fn modify_retriggers(values: &[i64]) -> Outcome {
    let kb = KnowledgeBase::from_text(
        "(deftemplate A (slot x))
         (deftemplate Log (slot n))
         (defrule r ?a <- (A (x ?x)) (test (> ?x 0)) => (assert (Log (n ?x))))",
    )
    .unwrap();
    let mut e = Engine::new(Arc::new(kb));
    let id = e
        .assert_slots("A", [("x", SlotValue::Integer(0))])
        .unwrap()
        .id();
    let mut current = 0;
    let mut expected = 0;
    for &v in values {
        let changed = e.modify_fact(id, &[("x", SlotValue::Integer(v))]).unwrap();
        prop_assert_eq!(changed, v != current);
        if changed && v > 0 {
            expected += 1;
        }
        current = v;
        e.run(None);
    }
    prop_assert_eq!(e.fire_log().len(), expected);
    Ok(())
}

pub fn deterministic(facts: &[GenFact]) -> Outcome {
    let run = || {
        let mut e = fresh();
        assert_all(&mut e, facts);
        (log_of(&e), engine_facts(&e))
    };
    prop_assert_eq!(run(), run());
    Ok(())
}

pub fn snapshot_equals_live(facts: &[GenFact]) -> Outcome {
    let mut e = fresh();
    assert_all(&mut e, facts);
    let s = e.snapshot();
    let args = [("name".to_string(), SlotValue::text("Pete"))]
        .into_iter()
        .collect();
    for q in ["find_journeys", "where_is", "location_history"] {
        prop_assert_eq!(s.run_query(q, &args), e.run_query(q, &args));
    }
    Ok(())
}
