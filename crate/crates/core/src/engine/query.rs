use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::compile::CompiledQuery;
use super::eval::test_holds;
use super::store::FactStore;
use super::KnowledgeBase;
use crate::fact::FactId;
use crate::value::SlotValue;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown query `{0}`")]
    UnknownQuery(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
}

/// One solution of a query: every variable binding and the matched facts,
/// one per pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRow {
    pub bindings: BTreeMap<String, SlotValue>,
    pub facts: Vec<FactId>,
}

/// Enumerates solutions in fact-id order. Arguments not declared by the
/// query are ignored.
pub(crate) fn run_query(
    kb: &KnowledgeBase,
    store: &FactStore,
    name: &str,
    args: &BTreeMap<String, SlotValue>,
) -> Result<Vec<QueryRow>, QueryError> {
    let q = kb
        .queries
        .get(name)
        .ok_or_else(|| QueryError::UnknownQuery(name.into()))?;
    let mut bindings = vec![None; q.var_names.len()];
    for (p, idx) in &q.params {
        let v = args
            .get(p)
            .ok_or_else(|| QueryError::MissingParameter(p.clone()))?;
        bindings[*idx] = Some(v.clone());
    }
    let mut rows = Vec::new();
    let mut tuple = Vec::with_capacity(q.patterns.len());
    solve(q, store, 0, &bindings, &mut tuple, &mut rows);
    Ok(rows)
}

fn solve(
    q: &CompiledQuery,
    store: &FactStore,
    level: usize,
    bindings: &[Option<SlotValue>],
    tuple: &mut Vec<FactId>,
    rows: &mut Vec<QueryRow>,
) {
    let Some(pat) = q.patterns.get(level) else {
        rows.push(QueryRow {
            bindings: q
                .var_names
                .iter()
                .zip(bindings)
                .filter_map(|(n, v)| v.clone().map(|v| (n.clone(), v)))
                .collect(),
            facts: tuple.clone(),
        });
        return;
    };
    for id in store.ids_of_template(pat.template) {
        let fact = store.get(id).expect("indexed fact");
        if !pat.accepts(fact) {
            continue;
        }
        let mut b = bindings.to_vec();
        if !pat.bind(fact, &mut b) || !pat.tests.iter().all(|t| test_holds(t, &b)) {
            continue;
        }
        tuple.push(id);
        solve(q, store, level + 1, &b, tuple, rows);
        tuple.pop();
    }
}
