//! Forward-chaining inference over a working memory.
//!
//! An [`Engine`] owns the live facts, the match network and the agenda. All
//! mutation goes through one `&mut Engine`; readers on other threads work on
//! [`Snapshot`]s taken between run cycles.

mod compile;
mod eval;
mod network;
mod provenance;
mod query;
mod store;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use compile::{compile_initial, compile_query, compile_rule, CAction, CompiledQuery, CompiledRule};
use network::Network;

pub use eval::{apply, is_truthy, EvalError, FALSE, TRUE};
pub use provenance::{
    Derivation, ExplainError, FireLog, FireLogEntry, FireLogRef, Provenance, DEFAULT_EXPLAIN_DEPTH,
};
pub use query::{QueryError, QueryRow};
pub use store::FactStore;

use crate::fact::{make_fact, Fact, FactId, Schema};
use crate::lang::{
    parse_program, validate_program, Construct, Diagnostic, DiagnosticKind, SyntaxError,
};
use crate::value::SlotValue;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("knowledge base has {} problem(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
}

impl LoadError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            LoadError::Invalid(d) => d,
            LoadError::Syntax(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` has no slot `{slot}`")]
    UnknownSlot { template: String, slot: String },
    #[error("no live fact {0}")]
    UnknownFactId(FactId),
    #[error("update would duplicate live fact {0}")]
    WouldDuplicate(FactId),
}

/// Outcome of [`Engine::assert_fact`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertResult {
    NewId(FactId),
    /// An equal fact is already live; working memory is unchanged.
    Duplicate(FactId),
}

impl AssertResult {
    pub fn id(self) -> FactId {
        match self {
            AssertResult::NewId(id) | AssertResult::Duplicate(id) => id,
        }
    }
}

/// A rule firing that stopped early because an action failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError {
    pub seq: u64,
    pub rule: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOutcome {
    pub fired: usize,
    /// Index of the first fire-log entry written by this run.
    pub log_start: usize,
    pub errors: Vec<RuntimeError>,
}

/// Templates, compiled rules, queries and initial facts of one program.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    schema: Schema,
    rules: Vec<CompiledRule>,
    queries: BTreeMap<String, CompiledQuery>,
    query_order: Vec<String>,
    initial: Vec<Fact>,
}

impl KnowledgeBase {
    pub fn from_text(text: &str) -> Result<Self, LoadError> {
        let constructs = parse_program(text)?;
        Self::load(&constructs)
    }

    /// Validates and compiles constructs. Any diagnostic rejects the program.
    pub fn load(constructs: &[Construct]) -> Result<Self, LoadError> {
        let (schema, mut diagnostics) = validate_program(constructs);
        if !diagnostics.is_empty() {
            return Err(LoadError::Invalid(diagnostics));
        }
        let mut kb = KnowledgeBase {
            rules: Vec::new(),
            queries: BTreeMap::new(),
            query_order: Vec::new(),
            initial: Vec::new(),
            schema,
        };
        for c in constructs {
            match c {
                Construct::Template(_) => {}
                Construct::Rule(r) => kb.rules.push(compile_rule(r, &kb.schema)),
                Construct::Query(q) => {
                    kb.query_order.push(q.name.clone());
                    kb.queries
                        .insert(q.name.clone(), compile_query(q, &kb.schema));
                }
                Construct::Assert(pats) => {
                    for p in pats {
                        let (cf, nvars) = compile_initial(p, &kb.schema);
                        let none = vec![None; nvars];
                        let mut values = Vec::new();
                        for (slot, e) in &cf.slots {
                            match eval::eval(e, &none) {
                                Ok(v) => values.push((cf.template.slots()[*slot].as_str(), v)),
                                Err(err) => diagnostics.push(Diagnostic {
                                    construct: "assert".into(),
                                    kind: DiagnosticKind::Eval(err.to_string()),
                                }),
                            }
                        }
                        if let Ok(f) = make_fact(&cf.template, values) {
                            kb.initial.push(f);
                        }
                    }
                }
            }
        }
        if !diagnostics.is_empty() {
            return Err(LoadError::Invalid(diagnostics));
        }
        Ok(kb)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rule_names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| &*r.name)
    }

    pub fn query_names(&self) -> impl Iterator<Item = &str> {
        self.query_order.iter().map(String::as_str)
    }

    pub fn query_params(&self, name: &str) -> Option<Vec<&str>> {
        self.queries
            .get(name)
            .map(|q| q.params.iter().map(|(p, _)| p.as_str()).collect())
    }

    pub fn initial_facts(&self) -> &[Fact] {
        &self.initial
    }

    /// Builds an unasserted fact of one of this program's templates.
    pub fn make_fact<'a, I>(&self, template: &str, bindings: I) -> Result<Fact, EngineError>
    where
        I: IntoIterator<Item = (&'a str, SlotValue)>,
    {
        self.schema
            .make_fact(template, bindings)
            .map_err(|e| match e {
                crate::fact::FactError::UnknownSlot { template, slot } => {
                    EngineError::UnknownSlot { template, slot }
                }
                _ => EngineError::UnknownTemplate(template.to_string()),
            })
    }
}

pub struct Engine {
    kb: Arc<KnowledgeBase>,
    store: FactStore,
    net: Network,
    next_id: u64,
    fire_seq: u64,
    provenance: Provenance,
    clock: i64,
}

impl Engine {
    /// Creates an engine and asserts the program's top-level facts.
    pub fn new(kb: Arc<KnowledgeBase>) -> Self {
        let net = Network::new(&kb.rules);
        let mut e = Engine {
            kb: kb.clone(),
            store: FactStore::default(),
            net,
            next_id: 1,
            fire_seq: 0,
            provenance: Provenance::default(),
            clock: 0,
        };
        for f in kb.initial.iter() {
            // Initial facts come from this program's own schema.
            let _ = e.assert_fact(f.clone());
        }
        e
    }

    pub fn kb(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    /// Sets the timestamp stamped on subsequent fire-log entries.
    pub fn set_clock(&mut self, t: i64) {
        self.clock = t;
    }

    pub fn facts(&self) -> &FactStore {
        &self.store
    }

    pub fn fact(&self, id: FactId) -> Option<&Fact> {
        self.store.get(id)
    }

    pub fn fire_log(&self) -> &FireLog {
        &self.provenance.log
    }

    pub fn agenda_len(&self) -> usize {
        self.net.agenda_len()
    }

    /// Pending activations, best first, as `(rule name, fact tuple)`.
    pub fn agenda(&self) -> Vec<(&str, Vec<FactId>)> {
        self.net
            .agenda()
            .into_iter()
            .map(|(r, t)| (&*self.kb.rules[r].name, t))
            .collect()
    }

    fn template_index(&self, fact: &Fact) -> Result<usize, EngineError> {
        let idx = self
            .kb
            .schema
            .index_of(fact.template_name())
            .ok_or_else(|| EngineError::UnknownTemplate(fact.template_name().to_string()))?;
        if **self.kb.schema.by_index(idx) != **fact.template() {
            return Err(EngineError::UnknownTemplate(
                fact.template_name().to_string(),
            ));
        }
        Ok(idx)
    }

    pub fn assert_fact(&mut self, fact: Fact) -> Result<AssertResult, EngineError> {
        let t = self.template_index(&fact)?;
        if let Some(existing) = self.store.find_equal(t, fact.values()) {
            return Ok(AssertResult::Duplicate(existing));
        }
        let id = FactId(self.next_id);
        self.next_id += 1;
        self.provenance.record_id(fact.template_name());
        self.store.insert(id, t, fact);
        self.net.add_fact(&self.kb.rules, &self.store, id);
        self.net.commit(&self.kb.rules);
        Ok(AssertResult::NewId(id))
    }

    /// Convenience for `assert_fact(kb.make_fact(..))`.
    pub fn assert_slots<'a, I>(
        &mut self,
        template: &str,
        bindings: I,
    ) -> Result<AssertResult, EngineError>
    where
        I: IntoIterator<Item = (&'a str, SlotValue)>,
    {
        let f = self.kb.make_fact(template, bindings)?;
        self.assert_fact(f)
    }

    pub fn retract_fact(&mut self, id: FactId) -> Result<(), EngineError> {
        if self.store.get(id).is_none() {
            return Err(EngineError::UnknownFactId(id));
        }
        self.net.remove_fact(&self.kb.rules, &self.store, id);
        self.store.remove(id);
        Ok(())
    }

    /// Changes slots of a live fact, keeping its id. Returns false when the
    /// values are unchanged, in which case nothing is re-matched.
    pub fn modify_fact(
        &mut self,
        id: FactId,
        updates: &[(&str, SlotValue)],
    ) -> Result<bool, EngineError> {
        let fact = self.store.get(id).ok_or(EngineError::UnknownFactId(id))?;
        let mut indexed = Vec::with_capacity(updates.len());
        for (slot, v) in updates {
            let idx = fact
                .template()
                .slot_index(slot)
                .ok_or_else(|| EngineError::UnknownSlot {
                    template: fact.template_name().to_string(),
                    slot: slot.to_string(),
                })?;
            indexed.push((idx, v.clone()));
        }
        self.modify_indexed(id, indexed)
    }

    fn modify_indexed(
        &mut self,
        id: FactId,
        updates: Vec<(usize, SlotValue)>,
    ) -> Result<bool, EngineError> {
        let old = self.store.get(id).ok_or(EngineError::UnknownFactId(id))?;
        let mut new = old.clone();
        for (idx, v) in updates {
            new.set_at(idx, v);
        }
        if new.values() == old.values() {
            return Ok(false);
        }
        let t = self.store.template_of(id).expect("live fact");
        if let Some(other) = self.store.find_equal(t, new.values()) {
            return Err(EngineError::WouldDuplicate(other));
        }
        self.net.remove_fact(&self.kb.rules, &self.store, id);
        self.store.remove(id);
        self.store.insert(id, t, new);
        self.net.add_fact(&self.kb.rules, &self.store, id);
        self.net.commit(&self.kb.rules);
        Ok(true)
    }

    /// Fires activations until the agenda is empty or `limit` firings have
    /// happened. A failing action aborts its own firing only.
    pub fn run(&mut self, limit: Option<usize>) -> RunOutcome {
        let mut out = RunOutcome {
            log_start: self.provenance.log.len(),
            ..RunOutcome::default()
        };
        while limit.is_none_or(|l| out.fired < l) {
            let Some(act) = self.net.pop() else { break };
            out.fired += 1;
            self.fire_seq += 1;
            let kb = self.kb.clone();
            let rule = &kb.rules[act.rule];
            let mut entry = FireLogEntry {
                seq: self.fire_seq,
                rule: rule.name.clone(),
                consumed: act.tuple.iter().map(|f| f.0).collect(),
                produced: Vec::new(),
                retracted: Vec::new(),
                timestamp: self.clock,
            };
            if let Err(message) = self.execute(rule, &act.tuple, act.bindings, &mut entry) {
                out.errors.push(RuntimeError {
                    seq: entry.seq,
                    rule: entry.rule.to_string(),
                    message,
                });
            }
            self.provenance.push(entry);
        }
        out
    }

    fn execute(
        &mut self,
        rule: &CompiledRule,
        tuple: &[FactId],
        mut bindings: Vec<Option<SlotValue>>,
        entry: &mut FireLogEntry,
    ) -> Result<(), String> {
        bindings.resize(rule.var_names.len(), None);
        for action in &rule.actions {
            match action {
                CAction::Assert(facts) => {
                    for cf in facts {
                        let mut values = Vec::with_capacity(cf.slots.len());
                        for (slot, e) in &cf.slots {
                            let v = eval::eval(e, &bindings).map_err(|e| e.to_string())?;
                            values.push((cf.template.slots()[*slot].as_str(), v));
                        }
                        let f = make_fact(&cf.template, values).map_err(|e| e.to_string())?;
                        if let AssertResult::NewId(id) =
                            self.assert_fact(f).map_err(|e| e.to_string())?
                        {
                            entry.produced.push(id.0);
                        }
                    }
                }
                CAction::Retract(positions) => {
                    for &p in positions {
                        let id = tuple[p];
                        self.retract_fact(id).map_err(|e| e.to_string())?;
                        entry.retracted.push(id.0);
                    }
                }
                CAction::Modify { pattern, updates } => {
                    let id = tuple[*pattern];
                    let mut vals = Vec::with_capacity(updates.len());
                    for (slot, e) in updates {
                        vals.push((*slot, eval::eval(e, &bindings).map_err(|e| e.to_string())?));
                    }
                    if self.modify_indexed(id, vals).map_err(|e| e.to_string())? {
                        entry.retracted.push(id.0);
                        entry.produced.push(id.0);
                    }
                }
                CAction::Bind(var, e) => {
                    bindings[*var] = Some(eval::eval(e, &bindings).map_err(|e| e.to_string())?);
                }
            }
        }
        Ok(())
    }

    pub fn run_query(
        &self,
        name: &str,
        args: &BTreeMap<String, SlotValue>,
    ) -> Result<Vec<QueryRow>, QueryError> {
        query::run_query(&self.kb, &self.store, name, args)
    }

    pub fn explain(&self, id: FactId) -> Result<Derivation, ExplainError> {
        self.provenance.explain(id, DEFAULT_EXPLAIN_DEPTH)
    }

    pub fn explain_with_depth(
        &self,
        id: FactId,
        max_depth: usize,
    ) -> Result<Derivation, ExplainError> {
        self.provenance.explain(id, max_depth)
    }

    /// Read-only copy of the current state. Later mutations do not reach it.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            kb: self.kb.clone(),
            store: Arc::new(self.store.clone()),
            provenance: Arc::new(self.provenance.clone()),
            clock: self.clock,
        }
    }
}

/// Immutable view of an engine between run cycles.
#[derive(Clone)]
pub struct Snapshot {
    kb: Arc<KnowledgeBase>,
    store: Arc<FactStore>,
    provenance: Arc<Provenance>,
    clock: i64,
}

impl Snapshot {
    pub fn kb(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    pub fn facts(&self) -> &FactStore {
        &self.store
    }

    pub fn clock(&self) -> i64 {
        self.clock
    }

    pub fn fire_log(&self) -> &FireLog {
        &self.provenance.log
    }

    pub fn run_query(
        &self,
        name: &str,
        args: &BTreeMap<String, SlotValue>,
    ) -> Result<Vec<QueryRow>, QueryError> {
        query::run_query(&self.kb, &self.store, name, args)
    }

    pub fn explain(&self, id: FactId) -> Result<Derivation, ExplainError> {
        self.provenance.explain(id, DEFAULT_EXPLAIN_DEPTH)
    }
}
