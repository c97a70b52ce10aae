use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::value::SlotValue;

/// One top-level form of a knowledge-base file.
#[derive(Debug, Clone, PartialEq)]
pub enum Construct {
    Template(TemplateDef),
    Rule(RuleDef),
    Query(QueryDef),
    Assert(Vec<FactPattern>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDef {
    pub name: String,
    pub slots: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDef {
    pub name: String,
    pub salience: i64,
    pub lhs: Vec<Condition>,
    pub rhs: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryDef {
    pub name: String,
    pub params: Vec<String>,
    pub lhs: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Pattern(Pattern),
    Test(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    /// Fact-address variable from a `?x <-` prefix.
    pub address: Option<String>,
    pub template: String,
    pub constraints: Vec<(String, Constraint)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Literal(SlotValue),
    Variable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Assert(Vec<FactPattern>),
    Retract(Vec<String>),
    Modify {
        target: String,
        updates: Vec<(String, Expr)>,
    },
    Bind {
        var: String,
        expr: Expr,
    },
}

/// `(template (slot expr) ...)` as written inside `assert`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactPattern {
    pub template: String,
    pub slots: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(SlotValue),
    Variable(String),
    Call { op: Op, args: Vec<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Neq,
}

impl Op {
    pub fn from_symbol(s: &str) -> Option<Op> {
        Some(match s {
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::Div,
            "<" => Op::Lt,
            ">" => Op::Gt,
            "<=" => Op::Le,
            ">=" => Op::Ge,
            "eq" => Op::Eq,
            "neq" => Op::Neq,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Lt => "<",
            Op::Gt => ">",
            Op::Le => "<=",
            Op::Ge => ">=",
            Op::Eq => "eq",
            Op::Neq => "neq",
        }
    }

    pub fn min_args(self) -> usize {
        match self {
            Op::Sub => 1,
            _ => 2,
        }
    }
}

impl Expr {
    /// Visits every variable name in the expression.
    pub fn variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Literal(_) => {}
            Expr::Variable(v) => out.push(v),
            Expr::Call { args, .. } => args.iter().for_each(|a| a.variables(out)),
        }
    }
}

impl Construct {
    pub fn name(&self) -> &str {
        match self {
            Construct::Template(t) => &t.name,
            Construct::Rule(r) => &r.name,
            Construct::Query(q) => &q.name,
            Construct::Assert(_) => "assert",
        }
    }
}

// Pretty printing. The output is canonical: parse(print(x)) == x.

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Variable(v) => write!(f, "?{v}"),
            Expr::Call { op, args } => {
                write!(f, "({}", op.symbol())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Literal(v) => write!(f, "{v}"),
            Constraint::Variable(v) => write!(f, "?{v}"),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(a) = &self.address {
            write!(f, "?{a} <- ")?;
        }
        write!(f, "({}", self.template)?;
        for (slot, c) in &self.constraints {
            write!(f, " ({slot} {c})")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Pattern(p) => write!(f, "{p}"),
            Condition::Test(e) => write!(f, "(test {e})"),
        }
    }
}

impl fmt::Display for FactPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.template)?;
        for (slot, e) in &self.slots {
            write!(f, " ({slot} {e})")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Assert(pats) => {
                f.write_str("(assert")?;
                for p in pats {
                    write!(f, " {p}")?;
                }
                f.write_str(")")
            }
            Action::Retract(vars) => {
                f.write_str("(retract")?;
                for v in vars {
                    write!(f, " ?{v}")?;
                }
                f.write_str(")")
            }
            Action::Modify { target, updates } => {
                write!(f, "(modify ?{target}")?;
                for (slot, e) in updates {
                    write!(f, " ({slot} {e})")?;
                }
                f.write_str(")")
            }
            Action::Bind { var, expr } => write!(f, "(bind ?{var} {expr})"),
        }
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Construct::Template(t) => {
                write!(f, "(deftemplate {}", t.name)?;
                for s in &t.slots {
                    write!(f, " (slot {s})")?;
                }
                f.write_str(")")
            }
            Construct::Rule(r) => {
                write!(f, "(defrule {}", r.name)?;
                if r.salience != 0 {
                    write!(f, "\n  (declare (salience {}))", r.salience)?;
                }
                for c in &r.lhs {
                    write!(f, "\n  {c}")?;
                }
                f.write_str("\n  =>")?;
                for a in &r.rhs {
                    write!(f, "\n  {a}")?;
                }
                f.write_str(")")
            }
            Construct::Query(q) => {
                write!(f, "(defquery {}\n  (declare (variables", q.name)?;
                for p in &q.params {
                    write!(f, " ?{p}")?;
                }
                f.write_str("))")?;
                for c in &q.lhs {
                    write!(f, "\n  {c}")?;
                }
                f.write_str(")")
            }
            Construct::Assert(pats) => {
                f.write_str("(assert")?;
                for p in pats {
                    write!(f, " {p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Renders a whole program, one construct per paragraph.
pub fn pretty_print(constructs: &[Construct]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, c) in constructs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{c}");
    }
    out
}
