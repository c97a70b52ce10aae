//! Lowers validated rules and queries into slot- and variable-indexed form.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::eval::CExpr;
use crate::fact::{Fact, Schema, Template};
use crate::lang::{Action, Condition, Constraint, Expr, FactPattern, QueryDef, RuleDef};
use crate::value::SlotValue;

#[derive(Debug, Clone)]
pub(crate) struct CompiledPattern {
    pub template: usize,
    /// Literal slot constraints, checked per fact.
    pub literals: Vec<(usize, SlotValue)>,
    /// Every variable constraint as `(slot, var)`, in source order.
    pub vars: Vec<(usize, usize)>,
    /// Variables already bound by earlier patterns: the hash-join key.
    pub join: Vec<(usize, usize)>,
    /// Tests evaluated once this pattern has matched.
    pub tests: Vec<CExpr>,
}

impl CompiledPattern {
    pub fn accepts(&self, fact: &Fact) -> bool {
        self.literals
            .iter()
            .all(|(slot, v)| fact.value_at(*slot) == v)
    }

    pub fn fact_key(&self, fact: &Fact) -> Vec<SlotValue> {
        self.join
            .iter()
            .map(|(slot, _)| fact.value_at(*slot).clone())
            .collect()
    }

    pub fn token_key(&self, bindings: &[Option<SlotValue>]) -> Vec<SlotValue> {
        self.join
            .iter()
            .map(|(_, var)| bindings[*var].clone().unwrap_or_else(SlotValue::nil))
            .collect()
    }

    /// Extends `bindings` with this fact, or returns false on a conflict.
    pub fn bind(&self, fact: &Fact, bindings: &mut [Option<SlotValue>]) -> bool {
        for (slot, var) in &self.vars {
            let v = fact.value_at(*slot);
            match &bindings[*var] {
                Some(existing) if existing != v => return false,
                Some(_) => {}
                None => bindings[*var] = Some(v.clone()),
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CFact {
    pub template: Arc<Template>,
    pub slots: Vec<(usize, CExpr)>,
}

#[derive(Debug, Clone)]
pub(crate) enum CAction {
    Assert(Vec<CFact>),
    /// Pattern positions whose facts are retracted.
    Retract(Vec<usize>),
    Modify {
        pattern: usize,
        updates: Vec<(usize, CExpr)>,
    },
    Bind(usize, CExpr),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledRule {
    pub name: Arc<str>,
    pub salience: i64,
    pub patterns: Vec<CompiledPattern>,
    pub var_names: Vec<String>,
    pub actions: Vec<CAction>,
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledQuery {
    pub params: Vec<(String, usize)>,
    pub patterns: Vec<CompiledPattern>,
    pub var_names: Vec<String>,
}

#[derive(Default)]
struct Scope {
    vars: BTreeMap<String, usize>,
    names: Vec<String>,
    addresses: BTreeMap<String, usize>,
}

impl Scope {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&i) = self.vars.get(name) {
            return i;
        }
        let i = self.names.len();
        self.vars.insert(name.into(), i);
        self.names.push(name.into());
        i
    }

    fn expr(&mut self, e: &Expr) -> CExpr {
        match e {
            Expr::Literal(v) => CExpr::Lit(v.clone()),
            Expr::Variable(v) => CExpr::Var(self.var(v)),
            Expr::Call { op, args } => {
                CExpr::Call(*op, args.iter().map(|a| self.expr(a)).collect())
            }
        }
    }
}

fn compile_lhs(lhs: &[Condition], schema: &Schema, scope: &mut Scope) -> Vec<CompiledPattern> {
    let mut patterns: Vec<CompiledPattern> = Vec::new();
    let mut pending_tests = Vec::new();
    for cond in lhs {
        match cond {
            Condition::Pattern(p) => {
                let template_idx = schema.index_of(&p.template).expect("validated template");
                let template = schema.by_index(template_idx);
                let bound_before = scope.names.len();
                let mut cp = CompiledPattern {
                    template: template_idx,
                    literals: Vec::new(),
                    vars: Vec::new(),
                    join: Vec::new(),
                    tests: Vec::new(),
                };
                for (slot, c) in &p.constraints {
                    let s = template.slot_index(slot).expect("validated slot");
                    match c {
                        Constraint::Literal(v) => cp.literals.push((s, v.clone())),
                        Constraint::Variable(v) => {
                            let idx = scope.var(v);
                            if idx < bound_before && !cp.join.iter().any(|(_, j)| *j == idx) {
                                cp.join.push((s, idx));
                            }
                            cp.vars.push((s, idx));
                        }
                    }
                }
                if let Some(a) = &p.address {
                    scope.addresses.insert(a.clone(), patterns.len());
                }
                if patterns.is_empty() {
                    cp.tests.append(&mut pending_tests);
                }
                patterns.push(cp);
            }
            Condition::Test(e) => {
                let ce = scope.expr(e);
                match patterns.last_mut() {
                    Some(p) => p.tests.push(ce),
                    None => pending_tests.push(ce),
                }
            }
        }
    }
    patterns
}

fn compile_fact(p: &FactPattern, schema: &Schema, scope: &mut Scope) -> CFact {
    let template = schema.get(&p.template).expect("validated template").clone();
    let slots = p
        .slots
        .iter()
        .map(|(slot, e)| {
            (
                template.slot_index(slot).expect("validated slot"),
                scope.expr(e),
            )
        })
        .collect();
    CFact { template, slots }
}

pub(crate) fn compile_rule(rule: &RuleDef, schema: &Schema) -> CompiledRule {
    let mut scope = Scope::default();
    let patterns = compile_lhs(&rule.lhs, schema, &mut scope);
    let mut actions = Vec::new();
    for a in &rule.rhs {
        actions.push(match a {
            Action::Assert(pats) => CAction::Assert(
                pats.iter()
                    .map(|p| compile_fact(p, schema, &mut scope))
                    .collect(),
            ),
            Action::Retract(vars) => {
                CAction::Retract(vars.iter().map(|v| scope.addresses[v]).collect())
            }
            Action::Modify { target, updates } => {
                let pattern = scope.addresses[target];
                let template = schema.by_index(patterns[pattern].template).clone();
                CAction::Modify {
                    pattern,
                    updates: updates
                        .iter()
                        .map(|(slot, e)| {
                            (
                                template.slot_index(slot).expect("validated slot"),
                                scope.expr(e),
                            )
                        })
                        .collect(),
                }
            }
            Action::Bind { var, expr } => {
                let e = scope.expr(expr);
                CAction::Bind(scope.var(var), e)
            }
        });
    }
    CompiledRule {
        name: Arc::from(rule.name.as_str()),
        salience: rule.salience,
        patterns,
        var_names: scope.names,
        actions,
    }
}

pub(crate) fn compile_query(q: &QueryDef, schema: &Schema) -> CompiledQuery {
    let mut scope = Scope::default();
    let params = q.params.iter().map(|p| (p.clone(), scope.var(p))).collect();
    let patterns = compile_lhs(&q.lhs, schema, &mut scope);
    CompiledQuery {
        params,
        patterns,
        var_names: scope.names,
    }
}

/// Evaluates a top-level assert, which has no variables in scope.
pub(crate) fn compile_initial(p: &FactPattern, schema: &Schema) -> (CFact, usize) {
    let mut scope = Scope::default();
    let f = compile_fact(p, schema, &mut scope);
    (f, scope.names.len())
}
