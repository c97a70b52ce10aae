//! Templates, facts and the schema that owns the templates.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::value::{SlotValue, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FactError {
    #[error("template `{0}` is already defined")]
    DuplicateTemplate(String),
    #[error("slot `{slot}` appears twice in template `{template}`")]
    DuplicateSlot { template: String, slot: String },
    #[error("template `{0}` declares no slots")]
    NoSlots(String),
    #[error("template `{template}` has no slot `{slot}`")]
    UnknownSlot { template: String, slot: String },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
}

/// Identity of an asserted fact. Assigned in assertion order, never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(pub u64);

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f-{}", self.0)
    }
}

/// A named, ordered slot schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: Symbol,
    slots: Vec<Symbol>,
}

impl Template {
    pub fn new(name: &str, slots: &[&str]) -> Result<Self, FactError> {
        if slots.is_empty() {
            return Err(FactError::NoSlots(name.to_string()));
        }
        let mut seen: Vec<&str> = Vec::with_capacity(slots.len());
        for s in slots {
            if seen.contains(s) {
                return Err(FactError::DuplicateSlot {
                    template: name.to_string(),
                    slot: s.to_string(),
                });
            }
            seen.push(s);
        }
        Ok(Template {
            name: Symbol::new(name),
            slots: slots.iter().map(|s| Symbol::new(s)).collect(),
        })
    }

    pub fn name(&self) -> &str {
        self.name.as_str()
    }

    pub fn slots(&self) -> &[Symbol] {
        &self.slots
    }

    pub fn slot_index(&self, slot: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.as_str() == slot)
    }
}

/// The set of templates known to a knowledge base.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    templates: Vec<Arc<Template>>,
    by_name: BTreeMap<Symbol, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define_template(
        &mut self,
        name: &str,
        slots: &[&str],
    ) -> Result<Arc<Template>, FactError> {
        if self.by_name.contains_key(name) {
            return Err(FactError::DuplicateTemplate(name.to_string()));
        }
        let t = Arc::new(Template::new(name, slots)?);
        self.by_name.insert(Symbol::new(name), self.templates.len());
        self.templates.push(t.clone());
        Ok(t)
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Template>> {
        self.by_name.get(name).map(|&i| &self.templates[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn by_index(&self, idx: usize) -> &Arc<Template> {
        &self.templates[idx]
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Template>> {
        self.templates.iter()
    }

    /// Builds an unasserted fact for the named template.
    pub fn make_fact<'a, I>(&self, template: &str, bindings: I) -> Result<Fact, FactError>
    where
        I: IntoIterator<Item = (&'a str, SlotValue)>,
    {
        let t = self
            .get(template)
            .ok_or_else(|| FactError::UnknownTemplate(template.to_string()))?;
        make_fact(t, bindings)
    }
}

/// A template instance. Carries no id; ids belong to working memory.
#[derive(Clone)]
pub struct Fact {
    template: Arc<Template>,
    values: Vec<SlotValue>,
}

impl Fact {
    pub fn template(&self) -> &Arc<Template> {
        &self.template
    }

    pub fn template_name(&self) -> &str {
        self.template.name()
    }

    pub fn values(&self) -> &[SlotValue] {
        &self.values
    }

    pub fn get(&self, slot: &str) -> Option<&SlotValue> {
        self.template.slot_index(slot).map(|i| &self.values[i])
    }

    pub fn value_at(&self, idx: usize) -> &SlotValue {
        &self.values[idx]
    }

    pub(crate) fn set_at(&mut self, idx: usize, v: SlotValue) {
        self.values[idx] = v;
    }

    /// Iterates `(slot, value)` pairs in template order.
    pub fn slots(&self) -> impl Iterator<Item = (&str, &SlotValue)> {
        self.template
            .slots()
            .iter()
            .map(Symbol::as_str)
            .zip(self.values.iter())
    }
}

/// Fills unbound slots with `nil`.
pub fn make_fact<'a, I>(template: &Arc<Template>, bindings: I) -> Result<Fact, FactError>
where
    I: IntoIterator<Item = (&'a str, SlotValue)>,
{
    let mut values = alloc::vec![SlotValue::nil(); template.slots().len()];
    for (slot, v) in bindings {
        let idx = template
            .slot_index(slot)
            .ok_or_else(|| FactError::UnknownSlot {
                template: template.name().to_string(),
                slot: slot.to_string(),
            })?;
        values[idx] = v;
    }
    Ok(Fact {
        template: template.clone(),
        values,
    })
}

/// Same template and equal slot values. Ids never take part.
pub fn facts_equal(a: &Fact, b: &Fact) -> bool {
    (Arc::ptr_eq(&a.template, &b.template) || a.template == b.template) && a.values == b.values
}

impl PartialEq for Fact {
    fn eq(&self, other: &Self) -> bool {
        facts_equal(self, other)
    }
}

impl Eq for Fact {}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `(template (slot value) ...)`
impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.template.name())?;
        for (slot, v) in self.slots() {
            write!(f, " ({slot} {v})")?;
        }
        f.write_str(")")
    }
}
