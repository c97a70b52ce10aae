//! Naive reference evaluator.
//!
//! Works directly on the parsed program: after every working-memory change it
//! rescans all rules against all fact tuples. Conflict resolution, refraction
//! and arithmetic are reimplemented here without touching the engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rbs3_core::lang::{
    Action, Condition, Constraint, Construct, Expr, FactPattern, Op, QueryDef, RuleDef,
};
use rbs3_core::SlotValue;

type Key = (usize, Vec<(u64, u64)>);
type Env = BTreeMap<String, SlotValue>;

pub struct Oracle {
    templates: BTreeMap<String, Vec<String>>,
    rules: Vec<RuleDef>,
    queries: BTreeMap<String, QueryDef>,
    pub facts: BTreeMap<u64, (String, Vec<SlotValue>)>,
    version: BTreeMap<u64, u64>,
    next_id: u64,
    known: BTreeMap<Key, u64>,
    fired: BTreeSet<Key>,
    seq: u64,
    /// (rule, consumed ids) per firing.
    pub log: Vec<(String, Vec<u64>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Row {
    pub bindings: BTreeMap<String, SlotValue>,
    pub facts: Vec<u64>,
}

impl Oracle {
    pub fn new(program: &[Construct]) -> Self {
        let mut o = Oracle {
            templates: BTreeMap::new(),
            rules: Vec::new(),
            queries: BTreeMap::new(),
            facts: BTreeMap::new(),
            version: BTreeMap::new(),
            next_id: 1,
            known: BTreeMap::new(),
            fired: BTreeSet::new(),
            seq: 0,
            log: Vec::new(),
        };
        let mut initial = Vec::new();
        for c in program {
            match c {
                Construct::Template(t) => {
                    o.templates.insert(t.name.clone(), t.slots.clone());
                }
                Construct::Rule(r) => o.rules.push(r.clone()),
                Construct::Query(q) => {
                    o.queries.insert(q.name.clone(), q.clone());
                }
                Construct::Assert(ps) => initial.extend(ps.iter().cloned()),
            }
        }
        for p in initial {
            let values = o
                .instantiate(&p, &Env::new())
                .expect("initial fact evaluates");
            o.assert(&p.template, values);
        }
        o
    }

    pub fn values(&self, template: &str, bindings: &[(&str, SlotValue)]) -> Vec<SlotValue> {
        self.templates[template]
            .iter()
            .map(|s| {
                bindings
                    .iter()
                    .find(|(k, _)| k == s)
                    .map(|(_, v)| v.clone())
                    .unwrap_or_else(SlotValue::nil)
            })
            .collect()
    }

    /// Returns the new id, or `None` for a duplicate.
    pub fn assert(&mut self, template: &str, values: Vec<SlotValue>) -> Option<u64> {
        if self
            .facts
            .values()
            .any(|(t, v)| t == template && *v == values)
        {
            return None;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.facts.insert(id, (template.to_string(), values));
        self.version.insert(id, 0);
        self.discover();
        Some(id)
    }

    pub fn retract(&mut self, id: u64) -> bool {
        self.facts.remove(&id).is_some()
    }

    pub fn modify(&mut self, id: u64, updates: &[(String, SlotValue)]) -> Result<bool, String> {
        let (t, old) = self.facts.get(&id).cloned().ok_or("unknown fact")?;
        let mut new = old.clone();
        for (slot, v) in updates {
            let i = self.templates[&t]
                .iter()
                .position(|s| s == slot)
                .ok_or("unknown slot")?;
            new[i] = v.clone();
        }
        if new == old {
            return Ok(false);
        }
        if self
            .facts
            .iter()
            .any(|(k, (tt, v))| *k != id && *tt == t && *v == new)
        {
            return Err("would duplicate".into());
        }
        self.facts.insert(id, (t, new));
        *self.version.get_mut(&id).unwrap() += 1;
        self.discover();
        Ok(true)
    }

    fn slot(&self, template: &str, values: &[SlotValue], slot: &str) -> SlotValue {
        let i = self.templates[template]
            .iter()
            .position(|s| s == slot)
            .unwrap();
        values[i].clone()
    }

    /// All complete matches of an LHS, each as (fact ids, environment).
    fn matches(&self, lhs: &[Condition], env: Env) -> Vec<(Vec<u64>, Env)> {
        let mut out = Vec::new();
        self.extend(lhs, 0, env, Vec::new(), &mut out);
        out
    }

    fn extend(
        &self,
        lhs: &[Condition],
        i: usize,
        env: Env,
        ids: Vec<u64>,
        out: &mut Vec<(Vec<u64>, Env)>,
    ) {
        let Some(cond) = lhs.get(i) else {
            let tests_ok = lhs.iter().all(|c| match c {
                Condition::Test(e) => {
                    matches!(eval(e, &env), Ok(v) if v != SlotValue::symbol("FALSE"))
                }
                Condition::Pattern(_) => true,
            });
            if tests_ok {
                out.push((ids, env));
            }
            return;
        };
        let Condition::Pattern(p) = cond else {
            return self.extend(lhs, i + 1, env, ids, out);
        };
        'facts: for (id, (t, values)) in &self.facts {
            if *t != p.template {
                continue;
            }
            let mut env = env.clone();
            for (slot, c) in &p.constraints {
                let v = self.slot(t, values, slot);
                match c {
                    Constraint::Literal(l) => {
                        if *l != v {
                            continue 'facts;
                        }
                    }
                    Constraint::Variable(name) => match env.get(name) {
                        Some(bound) if *bound != v => continue 'facts,
                        Some(_) => {}
                        None => {
                            env.insert(name.clone(), v);
                        }
                    },
                }
            }
            if let Some(a) = &p.address {
                env.insert(format!("<-{a}"), SlotValue::Integer(*id as i64));
            }
            let mut ids = ids.clone();
            ids.push(*id);
            self.extend(lhs, i + 1, env, ids, out);
        }
    }

    fn key(&self, rule: usize, ids: &[u64]) -> Key {
        (rule, ids.iter().map(|id| (*id, self.version[id])).collect())
    }

    /// Gives every match seen for the first time a sequence number.
    fn discover(&mut self) {
        let mut fresh = Vec::new();
        for (r, rule) in self.rules.iter().enumerate() {
            for (ids, _) in self.matches(&rule.lhs, Env::new()) {
                let k = self.key(r, &ids);
                if !self.known.contains_key(&k) {
                    fresh.push((r, ids, k));
                }
            }
        }
        fresh.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        for (_, _, k) in fresh {
            self.seq += 1;
            self.known.insert(k, self.seq);
        }
    }

    fn select(&self) -> Option<(usize, Vec<u64>, Env)> {
        type Candidate = ((i64, u64, u64), usize, Vec<u64>, Env);
        let mut best: Option<Candidate> = None;
        for (r, rule) in self.rules.iter().enumerate() {
            for (ids, env) in self.matches(&rule.lhs, Env::new()) {
                let k = self.key(r, &ids);
                if self.fired.contains(&k) {
                    continue;
                }
                let rank = (
                    rule.salience,
                    *ids.iter().max().unwrap_or(&0),
                    self.known[&k],
                );
                if best.as_ref().is_none_or(|b| rank > b.0) {
                    best = Some((rank, r, ids, env));
                }
            }
        }
        best.map(|(_, r, ids, env)| (r, ids, env))
    }

    fn instantiate(&self, p: &FactPattern, env: &Env) -> Result<Vec<SlotValue>, String> {
        let mut bound = Vec::new();
        for (slot, e) in &p.slots {
            bound.push((slot.as_str(), eval(e, env)?));
        }
        Ok(self.values(&p.template, &bound))
    }

    /// Runs to quiescence; returns the number of firings and failed firings.
    pub fn run(&mut self) -> (usize, usize) {
        let (mut fired, mut failed) = (0, 0);
        while let Some((r, ids, env)) = self.select() {
            let k = self.key(r, &ids);
            self.fired.insert(k);
            self.log.push((self.rules[r].name.clone(), ids.clone()));
            fired += 1;
            if self.fire(r, env).is_err() {
                failed += 1;
            }
        }
        (fired, failed)
    }

    fn address(env: &Env, var: &str) -> u64 {
        match env[&format!("<-{var}")] {
            SlotValue::Integer(i) => i as u64,
            _ => unreachable!(),
        }
    }

    fn fire(&mut self, r: usize, mut env: Env) -> Result<(), String> {
        let actions = self.rules[r].rhs.clone();
        for a in &actions {
            match a {
                Action::Assert(ps) => {
                    for p in ps {
                        let values = self.instantiate(p, &env)?;
                        self.assert(&p.template, values);
                    }
                }
                Action::Retract(vars) => {
                    for v in vars {
                        if !self.retract(Self::address(&env, v)) {
                            return Err("retract of dead fact".into());
                        }
                    }
                }
                Action::Modify { target, updates } => {
                    let mut vals = Vec::new();
                    for (slot, e) in updates {
                        vals.push((slot.clone(), eval(e, &env)?));
                    }
                    self.modify(Self::address(&env, target), &vals)?;
                }
                Action::Bind { var, expr } => {
                    let v = eval(expr, &env)?;
                    env.insert(var.clone(), v);
                }
            }
        }
        Ok(())
    }

    pub fn query(&self, name: &str, args: &BTreeMap<String, SlotValue>) -> Vec<Row> {
        let q = &self.queries[name];
        let env: Env = q
            .params
            .iter()
            .map(|p| (p.clone(), args[p].clone()))
            .collect();
        let mut rows: Vec<Row> = self
            .matches(&q.lhs, env)
            .into_iter()
            .map(|(facts, env)| Row {
                bindings: env
                    .into_iter()
                    .filter(|(k, _)| !k.starts_with("<-"))
                    .collect(),
                facts,
            })
            .collect();
        rows.sort();
        rows
    }
}

fn num(v: &SlotValue) -> Option<f64> {
    match v {
        SlotValue::Integer(i) => Some(*i as f64),
        SlotValue::Float(x) => Some(*x),
        _ => None,
    }
}

fn truth(b: bool) -> SlotValue {
    SlotValue::symbol(if b { "TRUE" } else { "FALSE" })
}

pub fn eval(e: &Expr, env: &Env) -> Result<SlotValue, String> {
    match e {
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Variable(v) => env.get(v).cloned().ok_or_else(|| format!("unbound {v}")),
        Expr::Call { op, args } => {
            let vals = args
                .iter()
                .map(|a| eval(a, env))
                .collect::<Result<Vec<_>, _>>()?;
            call(*op, &vals)
        }
    }
}

fn call(op: Op, v: &[SlotValue]) -> Result<SlotValue, String> {
    match op {
        Op::Eq => Ok(truth(v[1..].iter().all(|x| *x == v[0]))),
        Op::Neq => Ok(truth(v[1..].iter().all(|x| *x != v[0]))),
        Op::Lt | Op::Gt | Op::Le | Op::Ge => {
            let ok = v.windows(2).all(|w| {
                let c = match (&w[0], &w[1]) {
                    (SlotValue::Integer(a), SlotValue::Integer(b)) => a.partial_cmp(b),
                    (a, b) => match (num(a), num(b)) {
                        (Some(a), Some(b)) => a.partial_cmp(&b),
                        _ => None,
                    },
                };
                match (op, c) {
                    (_, None) => false,
                    (Op::Lt, Some(c)) => c.is_lt(),
                    (Op::Gt, Some(c)) => c.is_gt(),
                    (Op::Le, Some(c)) => c.is_le(),
                    (_, Some(c)) => c.is_ge(),
                }
            });
            Ok(truth(ok))
        }
        Op::Div => {
            let xs = v
                .iter()
                .map(num)
                .collect::<Option<Vec<f64>>>()
                .ok_or("non-numeric")?;
            let mut acc = xs[0];
            for d in &xs[1..] {
                if *d == 0.0 {
                    return Err("division by zero".into());
                }
                acc /= d;
            }
            finite(acc)
        }
        Op::Add | Op::Sub | Op::Mul => {
            if v.iter().all(|x| matches!(x, SlotValue::Integer(_))) {
                let xs: Vec<i128> = v
                    .iter()
                    .map(|x| match x {
                        SlotValue::Integer(i) => *i as i128,
                        _ => unreachable!(),
                    })
                    .collect();
                let r = if op == Op::Sub && xs.len() == 1 {
                    -xs[0]
                } else {
                    let mut acc = xs[0];
                    for x in &xs[1..] {
                        acc = match op {
                            Op::Add => acc + x,
                            Op::Sub => acc - x,
                            _ => acc.checked_mul(*x).ok_or("overflow")?,
                        };
                        if i64::try_from(acc).is_err() {
                            return Err("overflow".into());
                        }
                    }
                    acc
                };
                return i64::try_from(r)
                    .map(SlotValue::Integer)
                    .map_err(|_| "overflow".into());
            }
            let xs = v
                .iter()
                .map(num)
                .collect::<Option<Vec<f64>>>()
                .ok_or("non-numeric")?;
            if op == Op::Sub && xs.len() == 1 {
                return Ok(SlotValue::Float(-xs[0]));
            }
            let mut acc = xs[0];
            for x in &xs[1..] {
                acc = match op {
                    Op::Add => acc + x,
                    Op::Sub => acc - x,
                    _ => acc * x,
                };
            }
            finite(acc)
        }
    }
}

fn finite(x: f64) -> Result<SlotValue, String> {
    if x.is_finite() {
        Ok(SlotValue::Float(x))
    } else {
        Err("overflow".into())
    }
}
