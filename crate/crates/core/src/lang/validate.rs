//! Static checks run before a program is loaded into an engine.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::*;
use crate::fact::{FactError, Schema};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    UnknownTemplate(String),
    UnknownSlot {
        template: String,
        slot: String,
    },
    DuplicateTemplate,
    DuplicateSlot(String),
    NoSlots,
    DuplicateRuleName,
    DuplicateQueryName,
    UnboundVariable(String),
    /// A plain variable used where a fact address is required.
    NotFactAddress(String),
    /// A fact-address variable used as a value.
    AddressMisuse(String),
    /// A variable bound twice as a fact address or once as both kinds.
    Rebound(String),
    EmptyLhs,
    ParameterNotInPattern(String),
    /// A top-level assert whose value could not be computed.
    Eval(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Name of the offending construct.
    pub construct: String,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.construct)?;
        match &self.kind {
            DiagnosticKind::UnknownTemplate(t) => write!(f, "unknown template `{t}`"),
            DiagnosticKind::UnknownSlot { template, slot } => {
                write!(f, "template `{template}` has no slot `{slot}`")
            }
            DiagnosticKind::DuplicateTemplate => f.write_str("template defined twice"),
            DiagnosticKind::DuplicateSlot(s) => write!(f, "slot `{s}` declared twice"),
            DiagnosticKind::NoSlots => f.write_str("template declares no slots"),
            DiagnosticKind::DuplicateRuleName => f.write_str("rule defined twice"),
            DiagnosticKind::DuplicateQueryName => f.write_str("query defined twice"),
            DiagnosticKind::UnboundVariable(v) => {
                write!(f, "variable `?{v}` is used before it is bound")
            }
            DiagnosticKind::NotFactAddress(v) => write!(f, "`?{v}` is not a fact address"),
            DiagnosticKind::AddressMisuse(v) => {
                write!(
                    f,
                    "fact address `?{v}` may only be used in retract or modify"
                )
            }
            DiagnosticKind::Rebound(v) => write!(f, "`?{v}` is bound twice"),
            DiagnosticKind::EmptyLhs => f.write_str("no patterns on the left-hand side"),
            DiagnosticKind::ParameterNotInPattern(v) => {
                write!(f, "query parameter `?{v}` occurs in no pattern")
            }
            DiagnosticKind::Eval(e) => write!(f, "cannot evaluate value: {e}"),
        }
    }
}

struct Checker<'a> {
    schema: &'a Schema,
    construct: &'a str,
    values: BTreeSet<String>,
    addresses: BTreeMap<String, String>,
    out: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn new(schema: &'a Schema, construct: &'a str) -> Self {
        Checker {
            schema,
            construct,
            values: BTreeSet::new(),
            addresses: BTreeMap::new(),
            out: Vec::new(),
        }
    }

    fn report(&mut self, kind: DiagnosticKind) {
        let d = Diagnostic {
            construct: self.construct.to_string(),
            kind,
        };
        if !self.out.contains(&d) {
            self.out.push(d);
        }
    }

    fn check_slot(&mut self, template: &str, slot: &str) {
        if let Some(t) = self.schema.get(template) {
            if t.slot_index(slot).is_none() {
                self.report(DiagnosticKind::UnknownSlot {
                    template: template.to_string(),
                    slot: slot.to_string(),
                });
            }
        }
    }

    fn check_template(&mut self, template: &str) -> bool {
        if self.schema.get(template).is_none() {
            self.report(DiagnosticKind::UnknownTemplate(template.to_string()));
            false
        } else {
            true
        }
    }

    fn use_expr(&mut self, e: &Expr) {
        let mut vars = Vec::new();
        e.variables(&mut vars);
        for v in vars {
            if self.addresses.contains_key(v) {
                self.report(DiagnosticKind::AddressMisuse(v.to_string()));
            } else if !self.values.contains(v) {
                self.report(DiagnosticKind::UnboundVariable(v.to_string()));
            }
        }
    }

    fn pattern(&mut self, p: &Pattern) {
        if let Some(a) = &p.address {
            if self.addresses.contains_key(a) || self.values.contains(a) {
                self.report(DiagnosticKind::Rebound(a.clone()));
            }
            self.addresses.insert(a.clone(), p.template.clone());
        }
        let known = self.check_template(&p.template);
        for (slot, c) in &p.constraints {
            if known {
                self.check_slot(&p.template, slot);
            }
            if let Constraint::Variable(v) = c {
                if self.addresses.contains_key(v) {
                    self.report(DiagnosticKind::AddressMisuse(v.clone()));
                } else {
                    self.values.insert(v.clone());
                }
            }
        }
    }

    fn lhs(&mut self, lhs: &[Condition]) {
        for c in lhs {
            match c {
                Condition::Pattern(p) => self.pattern(p),
                Condition::Test(e) => self.use_expr(e),
            }
        }
        if !lhs.iter().any(|c| matches!(c, Condition::Pattern(_))) {
            self.report(DiagnosticKind::EmptyLhs);
        }
    }

    fn fact_pattern(&mut self, p: &FactPattern) {
        let known = self.check_template(&p.template);
        for (slot, e) in &p.slots {
            if known {
                self.check_slot(&p.template, slot);
            }
            self.use_expr(e);
        }
    }

    fn action(&mut self, a: &Action) {
        match a {
            Action::Assert(pats) => pats.iter().for_each(|p| self.fact_pattern(p)),
            Action::Retract(vars) => {
                for v in vars {
                    if !self.addresses.contains_key(v) {
                        self.report(DiagnosticKind::NotFactAddress(v.clone()));
                    }
                }
            }
            Action::Modify { target, updates } => {
                let template = self.addresses.get(target).cloned();
                if template.is_none() {
                    self.report(DiagnosticKind::NotFactAddress(target.clone()));
                }
                for (slot, e) in updates {
                    if let Some(t) = &template {
                        self.check_slot(t, slot);
                    }
                    self.use_expr(e);
                }
            }
            Action::Bind { var, expr } => {
                self.use_expr(expr);
                if self.addresses.contains_key(var) {
                    self.report(DiagnosticKind::AddressMisuse(var.clone()));
                } else {
                    self.values.insert(var.clone());
                }
            }
        }
    }
}

/// Checks template and slot references, the left-to-right binding
/// discipline and fact-address usage of one rule.
pub fn validate_rule(rule: &RuleDef, schema: &Schema) -> Vec<Diagnostic> {
    let mut c = Checker::new(schema, &rule.name);
    c.lhs(&rule.lhs);
    for a in &rule.rhs {
        c.action(a);
    }
    c.out
}

pub fn validate_query(query: &QueryDef, schema: &Schema) -> Vec<Diagnostic> {
    let mut c = Checker::new(schema, &query.name);
    for p in &query.params {
        c.values.insert(p.clone());
    }
    c.lhs(&query.lhs);
    for p in &query.params {
        let used = query.lhs.iter().any(|cond| match cond {
            Condition::Pattern(pat) => pat
                .constraints
                .iter()
                .any(|(_, k)| matches!(k, Constraint::Variable(v) if v == p)),
            Condition::Test(_) => false,
        });
        if !used {
            c.report(DiagnosticKind::ParameterNotInPattern(p.clone()));
        }
    }
    c.out
}

/// Validates a top-level assert. Expressions may not reference variables.
pub fn validate_assert(pats: &[FactPattern], schema: &Schema) -> Vec<Diagnostic> {
    let mut c = Checker::new(schema, "assert");
    for p in pats {
        c.fact_pattern(p);
    }
    c.out
}

/// Validates a whole program in source order and returns the schema its
/// templates define. Templates must be defined before use.
pub fn validate_program(constructs: &[Construct]) -> (Schema, Vec<Diagnostic>) {
    let mut schema = Schema::new();
    let mut out = Vec::new();
    let mut rules = BTreeSet::new();
    let mut queries = BTreeSet::new();
    for c in constructs {
        match c {
            Construct::Template(t) => {
                let slots: Vec<&str> = t.slots.iter().map(String::as_str).collect();
                if let Err(e) = schema.define_template(&t.name, &slots) {
                    let kind = match e {
                        FactError::DuplicateTemplate(_) => DiagnosticKind::DuplicateTemplate,
                        FactError::DuplicateSlot { slot, .. } => {
                            DiagnosticKind::DuplicateSlot(slot)
                        }
                        _ => DiagnosticKind::NoSlots,
                    };
                    out.push(Diagnostic {
                        construct: t.name.clone(),
                        kind,
                    });
                }
            }
            Construct::Rule(r) => {
                if !rules.insert(r.name.clone()) {
                    out.push(Diagnostic {
                        construct: r.name.clone(),
                        kind: DiagnosticKind::DuplicateRuleName,
                    });
                }
                out.extend(validate_rule(r, &schema));
            }
            Construct::Query(q) => {
                if !queries.insert(q.name.clone()) {
                    out.push(Diagnostic {
                        construct: q.name.clone(),
                        kind: DiagnosticKind::DuplicateQueryName,
                    });
                }
                out.extend(validate_query(q, &schema));
            }
            Construct::Assert(p) => out.extend(validate_assert(p, &schema)),
        }
    }
    (schema, out)
}
