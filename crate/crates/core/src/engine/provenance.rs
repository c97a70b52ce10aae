use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::Serialize;

use crate::fact::FactId;

/// One rule firing. Modified facts appear in both `retracted` and
/// `produced`, since a modify is a retract and re-assert under the same id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FireLogEntry {
    pub seq: u64,
    pub rule: Arc<str>,
    pub consumed: Vec<u64>,
    pub produced: Vec<u64>,
    pub retracted: Vec<u64>,
    /// Engine clock at firing time (replay time in epoch ms).
    #[serde(skip)]
    pub timestamp: i64,
}

/// Borrowed view of one fire-log entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FireLogRef<'a> {
    pub seq: u64,
    pub rule: &'a str,
    pub consumed: &'a [u64],
    pub produced: &'a [u64],
    pub retracted: &'a [u64],
    #[serde(skip)]
    pub timestamp: i64,
}

impl FireLogRef<'_> {
    pub fn to_owned(&self) -> FireLogEntry {
        FireLogEntry {
            seq: self.seq,
            rule: Arc::from(self.rule),
            consumed: self.consumed.to_vec(),
            produced: self.produced.to_vec(),
            retracted: self.retracted.to_vec(),
            timestamp: self.timestamp,
        }
    }
}

const CHUNK: usize = 4096;

#[derive(Debug, Clone)]
struct Packed {
    rule: Arc<str>,
    timestamp: i64,
    at: u32,
    consumed: u32,
    produced: u32,
    retracted: u32,
}

#[derive(Debug, Clone, Default)]
struct Chunk {
    entries: Vec<Packed>,
    ids: Vec<u64>,
}

impl Chunk {
    fn view(&self, base: usize, o: usize) -> Option<FireLogRef<'_>> {
        let p = self.entries.get(o)?;
        let at = p.at as usize;
        let (c, pr, r) = (
            p.consumed as usize,
            p.produced as usize,
            p.retracted as usize,
        );
        Some(FireLogRef {
            seq: (base + o + 1) as u64,
            rule: &p.rule,
            consumed: &self.ids[at..at + c],
            produced: &self.ids[at + c..at + c + pr],
            retracted: &self.ids[at + c + pr..at + c + pr + r],
            timestamp: p.timestamp,
        })
    }
}

/// Append-only log of every firing, packed into chunks. Full chunks are
/// shared between snapshots.
#[derive(Debug, Clone, Default)]
pub struct FireLog {
    sealed: Vec<Arc<Chunk>>,
    open: Chunk,
}

impl FireLog {
    pub fn len(&self) -> usize {
        self.sealed.len() * CHUNK + self.open.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Option<FireLogRef<'_>> {
        let (c, o) = (i / CHUNK, i % CHUNK);
        match self.sealed.get(c) {
            Some(chunk) => chunk.view(c * CHUNK, o),
            None if c == self.sealed.len() => self.open.view(c * CHUNK, o),
            None => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = FireLogRef<'_>> {
        self.since(0)
    }

    /// Entries from index `start` on.
    pub fn since(&self, start: usize) -> impl Iterator<Item = FireLogRef<'_>> {
        (start..self.len()).map(|i| self.get(i).expect("index below len"))
    }

    /// Appends `e`, whose `seq` must be the new length.
    pub(crate) fn push(&mut self, e: FireLogEntry) {
        assert_eq!(e.seq as usize, self.len() + 1, "fire-log sequence gap");
        let at = u32::try_from(self.open.ids.len()).expect("chunk ids fit u32");
        let count = |v: &Vec<u64>| u32::try_from(v.len()).expect("id list fits u32");
        self.open.entries.push(Packed {
            rule: e.rule,
            timestamp: e.timestamp,
            at,
            consumed: count(&e.consumed),
            produced: count(&e.produced),
            retracted: count(&e.retracted),
        });
        self.open
            .ids
            .extend(e.consumed.iter().chain(&e.produced).chain(&e.retracted));
        if self.open.entries.len() == CHUNK {
            let mut full = core::mem::take(&mut self.open);
            full.ids.shrink_to_fit();
            self.sealed.push(Arc::new(full));
        }
    }
}

/// Explanation of how a fact came to exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Derivation {
    /// Inserted from outside the rule base (sensor data, registry, initial facts).
    Asserted { fact: u64, template: String },
    Derived {
        fact: u64,
        template: String,
        rule: String,
        seq: u64,
        premises: Vec<Derivation>,
    },
    /// Depth limit reached.
    Elided { fact: u64, template: String },
}

impl Derivation {
    pub fn fact(&self) -> FactId {
        match self {
            Derivation::Asserted { fact, .. }
            | Derivation::Derived { fact, .. }
            | Derivation::Elided { fact, .. } => FactId(*fact),
        }
    }

    /// Leaves of the tree, left to right.
    pub fn leaves(&self) -> Vec<&Derivation> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![self];
        while let Some(d) = stack.pop() {
            match d {
                Derivation::Derived { premises, .. } => stack.extend(premises.iter().rev()),
                leaf => out.push(leaf),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExplainError {
    #[error("fact {0} was never asserted")]
    NotDerived(FactId),
}

pub const DEFAULT_EXPLAIN_DEPTH: usize = 64;

/// Fire log plus the indexes `explain` needs.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub(crate) log: FireLog,
    producers: BTreeMap<FactId, Vec<usize>>,
    /// Template name of every fact id ever assigned, indexed by `id - 1`.
    origin: Vec<Arc<str>>,
}

impl Provenance {
    pub(crate) fn record_id(&mut self, template: &str) {
        match self.origin.last() {
            Some(t) if &**t == template => {
                let t = t.clone();
                self.origin.push(t);
            }
            _ => self.origin.push(Arc::from(template)),
        }
    }

    pub(crate) fn push(&mut self, entry: FireLogEntry) {
        let idx = self.log.len();
        for p in &entry.produced {
            self.producers.entry(FactId(*p)).or_default().push(idx);
        }
        self.log.push(entry);
    }

    pub fn log(&self) -> &FireLog {
        &self.log
    }

    fn template(&self, id: FactId) -> Option<&Arc<str>> {
        self.origin.get((id.0 as usize).checked_sub(1)?)
    }

    /// Entry that last produced `id` before log index `before`.
    fn producer(&self, id: FactId, before: usize) -> Option<usize> {
        let list = self.producers.get(&id)?;
        let n = list.partition_point(|&i| i < before);
        n.checked_sub(1).map(|k| list[k])
    }

    pub fn explain(&self, id: FactId, max_depth: usize) -> Result<Derivation, ExplainError> {
        if self.template(id).is_none() {
            return Err(ExplainError::NotDerived(id));
        }
        Ok(self.node(id, usize::MAX, max_depth))
    }

    fn node(&self, id: FactId, before: usize, depth: usize) -> Derivation {
        let template = self
            .template(id)
            .map(|t| String::from(&**t))
            .unwrap_or_default();
        let Some(idx) = self.producer(id, before) else {
            return Derivation::Asserted {
                fact: id.0,
                template,
            };
        };
        if depth == 0 {
            return Derivation::Elided {
                fact: id.0,
                template,
            };
        }
        let entry = self.log.get(idx).expect("indexed entry");
        Derivation::Derived {
            fact: id.0,
            template,
            rule: String::from(entry.rule),
            seq: entry.seq,
            premises: entry
                .consumed
                .iter()
                .map(|&c| self.node(FactId(c), idx, depth - 1))
                .collect(),
        }
    }
}
