//! Incremental matcher: per-pattern alpha memories, left-to-right beta joins
//! with per-join memories, and the agenda of complete matches.
//!
//! Tokens form a tree. A token at level `k` records the fact matched by
//! pattern `k` and points at its parent at level `k - 1`. Retracting a fact
//! removes every token ending in it together with its descendants, which
//! also cancels their activations.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::compile::CompiledRule;
use super::eval::test_holds;
use super::store::{FactStore, FxHashMap, FxHashSet};
use crate::fact::FactId;
use crate::value::SlotValue;

pub(crate) type TokenId = usize;

/// Orders the agenda: salience, then recency (largest fact id in the
/// tuple), then insertion sequence. The greatest key fires first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct AgendaKey {
    pub salience: i64,
    pub recency: u64,
    pub seq: u64,
}

struct Token {
    rule: usize,
    level: usize,
    parent: Option<TokenId>,
    fact: FactId,
    bindings: Vec<Option<SlotValue>>,
    children: Vec<TokenId>,
    key: Vec<SlotValue>,
    agenda: Option<AgendaKey>,
}

type Memory<T> = FxHashMap<Vec<SlotValue>, FxHashSet<T>>;

pub(crate) struct Activation {
    pub rule: usize,
    pub tuple: Vec<FactId>,
    pub bindings: Vec<Option<SlotValue>>,
}

pub(crate) struct Network {
    tokens: Vec<Option<Token>>,
    free: Vec<TokenId>,
    alpha: Vec<Vec<Memory<FactId>>>,
    beta: Vec<Vec<Memory<TokenId>>>,
    fact_tokens: FxHashMap<FactId, FxHashSet<TokenId>>,
    by_template: BTreeMap<usize, Vec<(usize, usize)>>,
    new_full: Vec<TokenId>,
    agenda: BTreeMap<AgendaKey, TokenId>,
    seq: u64,
    scratch: Vec<Option<SlotValue>>,
}

impl Network {
    pub fn new(rules: &[CompiledRule]) -> Self {
        let mut by_template: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for (ri, r) in rules.iter().enumerate() {
            for (pi, p) in r.patterns.iter().enumerate() {
                by_template.entry(p.template).or_default().push((ri, pi));
            }
        }
        Network {
            tokens: Vec::new(),
            free: Vec::new(),
            alpha: rules
                .iter()
                .map(|r| vec![Memory::default(); r.patterns.len()])
                .collect(),
            beta: rules
                .iter()
                .map(|r| vec![Memory::default(); r.patterns.len()])
                .collect(),
            fact_tokens: FxHashMap::default(),
            by_template,
            new_full: Vec::new(),
            agenda: BTreeMap::new(),
            seq: 0,
            scratch: Vec::new(),
        }
    }

    fn alive(&self, t: TokenId) -> bool {
        matches!(self.tokens.get(t), Some(Some(_)))
    }

    fn tok(&self, t: TokenId) -> &Token {
        self.tokens[t].as_ref().expect("live token")
    }

    fn alloc(&mut self, tok: Token) -> TokenId {
        match self.free.pop() {
            Some(id) => {
                self.tokens[id] = Some(tok);
                id
            }
            None => {
                self.tokens.push(Some(tok));
                self.tokens.len() - 1
            }
        }
    }

    /// Matches a newly stored fact. Call [`Network::commit`] afterwards.
    pub fn add_fact(&mut self, rules: &[CompiledRule], store: &FactStore, id: FactId) {
        let Some(template) = store.template_of(id) else {
            return;
        };
        let Some(sites) = self.by_template.get(&template).cloned() else {
            return;
        };
        let fact = store.get(id).expect("stored fact");
        for (ri, pi) in sites {
            let pat = &rules[ri].patterns[pi];
            if !pat.accepts(fact) {
                continue;
            }
            let key = pat.fact_key(fact);
            // Insert into this alpha memory only now, so a fact matching two
            // patterns of one rule pairs with itself exactly once.
            self.alpha[ri][pi]
                .entry(key.clone())
                .or_default()
                .insert(id);
            if pi == 0 {
                self.extend(rules, store, ri, 0, None, id);
            } else {
                let parents: Vec<TokenId> = self.beta[ri][pi - 1]
                    .get(&key)
                    .map(|s| s.iter().copied().collect())
                    .unwrap_or_default();
                for p in parents {
                    self.extend(rules, store, ri, pi, Some(p), id);
                }
            }
        }
    }

    fn extend(
        &mut self,
        rules: &[CompiledRule],
        store: &FactStore,
        ri: usize,
        pi: usize,
        parent: Option<TokenId>,
        fid: FactId,
    ) {
        let rule = &rules[ri];
        let pat = &rule.patterns[pi];
        let fact = store.get(fid).expect("stored fact");
        let mut bindings = core::mem::take(&mut self.scratch);
        bindings.clear();
        match parent {
            Some(p) => bindings.extend_from_slice(&self.tok(p).bindings),
            None => bindings.resize(rule.var_names.len(), None),
        }
        if !pat.bind(fact, &mut bindings) || !pat.tests.iter().all(|t| test_holds(t, &bindings)) {
            self.scratch = bindings;
            return;
        }
        let last = pi + 1 == rule.patterns.len();
        let key = if last {
            Vec::new()
        } else {
            rule.patterns[pi + 1].token_key(&bindings)
        };
        let tid = self.alloc(Token {
            rule: ri,
            level: pi,
            parent,
            fact: fid,
            bindings,
            children: Vec::new(),
            key: key.clone(),
            agenda: None,
        });
        if let Some(p) = parent {
            self.tokens[p]
                .as_mut()
                .expect("live parent")
                .children
                .push(tid);
        }
        self.fact_tokens.entry(fid).or_default().insert(tid);
        if last {
            self.new_full.push(tid);
            return;
        }
        self.beta[ri][pi]
            .entry(key.clone())
            .or_default()
            .insert(tid);
        let facts: Vec<FactId> = self.alpha[ri][pi + 1]
            .get(&key)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        for g in facts {
            self.extend(rules, store, ri, pi + 1, Some(tid), g);
        }
    }

    /// Unmatches a fact that is still present in `store` with its old values.
    pub fn remove_fact(&mut self, rules: &[CompiledRule], store: &FactStore, id: FactId) {
        if let Some(set) = self.fact_tokens.remove(&id) {
            for t in set {
                if self.alive(t) {
                    self.remove_token(t);
                }
            }
        }
        let (Some(template), Some(fact)) = (store.template_of(id), store.get(id)) else {
            return;
        };
        let Some(sites) = self.by_template.get(&template) else {
            return;
        };
        for &(ri, pi) in sites {
            let pat = &rules[ri].patterns[pi];
            if !pat.accepts(fact) {
                continue;
            }
            let key = pat.fact_key(fact);
            if let Some(set) = self.alpha[ri][pi].get_mut(&key) {
                set.remove(&id);
                if set.is_empty() {
                    self.alpha[ri][pi].remove(&key);
                }
            }
        }
    }

    fn remove_token(&mut self, t: TokenId) {
        let tok = self.tokens[t].take().expect("live token");
        self.free.push(t);
        for c in &tok.children {
            if self.alive(*c) {
                self.remove_token(*c);
            }
        }
        if let Some(p) = tok.parent {
            if let Some(Some(parent)) = self.tokens.get_mut(p) {
                if let Some(pos) = parent.children.iter().position(|&c| c == t) {
                    parent.children.swap_remove(pos);
                }
            }
        }
        if let Some(set) = self.beta[tok.rule][tok.level].get_mut(&tok.key) {
            set.remove(&t);
            if set.is_empty() {
                self.beta[tok.rule][tok.level].remove(&tok.key);
            }
        }
        if let Some(set) = self.fact_tokens.get_mut(&tok.fact) {
            set.remove(&t);
            if set.is_empty() {
                self.fact_tokens.remove(&tok.fact);
            }
        }
        if let Some(k) = tok.agenda {
            self.agenda.remove(&k);
        }
    }

    fn tuple(&self, mut t: TokenId) -> Vec<FactId> {
        let mut out = Vec::new();
        loop {
            let tok = self.tok(t);
            out.push(tok.fact);
            match tok.parent {
                Some(p) => t = p,
                None => break,
            }
        }
        out.reverse();
        out
    }

    /// Places the complete matches produced by the last mutation on the
    /// agenda, in `(rule, fact tuple)` order.
    pub fn commit(&mut self, rules: &[CompiledRule]) {
        if self.new_full.is_empty() {
            return;
        }
        let fresh = core::mem::take(&mut self.new_full);
        let mut batch: Vec<(usize, Vec<FactId>, TokenId)> = fresh
            .into_iter()
            .filter(|&t| self.alive(t))
            .map(|t| (self.tok(t).rule, self.tuple(t), t))
            .collect();
        batch.sort();
        for (rule, tuple, t) in batch {
            self.seq += 1;
            let key = AgendaKey {
                salience: rules[rule].salience,
                recency: tuple.iter().map(|f| f.0).max().unwrap_or(0),
                seq: self.seq,
            };
            self.agenda.insert(key, t);
            self.tokens[t].as_mut().expect("live token").agenda = Some(key);
        }
    }

    /// Removes the best activation from the agenda. Its token stays in the
    /// network, so the same tuple cannot activate the rule again.
    pub fn pop(&mut self) -> Option<Activation> {
        let (_, t) = self.agenda.pop_last()?;
        let tuple = self.tuple(t);
        let tok = self.tokens[t].as_mut().expect("live token");
        tok.agenda = None;
        Some(Activation {
            rule: tok.rule,
            tuple,
            bindings: tok.bindings.clone(),
        })
    }

    pub fn agenda_len(&self) -> usize {
        self.agenda.len()
    }

    /// Pending activations, best first, as `(rule, tuple)`.
    pub fn agenda(&self) -> Vec<(usize, Vec<FactId>)> {
        self.agenda
            .values()
            .rev()
            .map(|&t| (self.tok(t).rule, self.tuple(t)))
            .collect()
    }
}
