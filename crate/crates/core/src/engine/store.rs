use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::fact::{Fact, FactId};
use crate::value::SlotValue;

pub(crate) type FxHashMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;
pub(crate) type FxHashSet<T> = hashbrown::HashSet<T, rustc_hash::FxBuildHasher>;

/// Live facts with a per-template index and a duplicate index.
#[derive(Debug, Clone, Default)]
pub struct FactStore {
    facts: BTreeMap<FactId, (usize, Fact)>,
    by_template: BTreeMap<usize, BTreeSet<FactId>>,
    dedup: BTreeMap<usize, FxHashMap<Vec<SlotValue>, FactId>>,
}

impl FactStore {
    pub fn get(&self, id: FactId) -> Option<&Fact> {
        self.facts.get(&id).map(|(_, f)| f)
    }

    pub(crate) fn template_of(&self, id: FactId) -> Option<usize> {
        self.facts.get(&id).map(|(t, _)| *t)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Live facts in id order.
    pub fn iter(&self) -> impl Iterator<Item = (FactId, &Fact)> {
        self.facts.iter().map(|(id, (_, f))| (*id, f))
    }

    pub(crate) fn ids_of_template(&self, template: usize) -> impl Iterator<Item = FactId> + '_ {
        self.by_template
            .get(&template)
            .into_iter()
            .flatten()
            .copied()
    }

    pub(crate) fn find_equal(&self, template: usize, values: &[SlotValue]) -> Option<FactId> {
        self.dedup.get(&template)?.get(values).copied()
    }

    pub(crate) fn insert(&mut self, id: FactId, template: usize, fact: Fact) {
        self.dedup
            .entry(template)
            .or_default()
            .insert(fact.values().to_vec(), id);
        self.by_template.entry(template).or_default().insert(id);
        self.facts.insert(id, (template, fact));
    }

    pub(crate) fn remove(&mut self, id: FactId) -> Option<Fact> {
        let (template, fact) = self.facts.remove(&id)?;
        if let Some(d) = self.dedup.get_mut(&template) {
            d.remove(fact.values());
        }
        if let Some(set) = self.by_template.get_mut(&template) {
            set.remove(&id);
        }
        Some(fact)
    }
}
