//! Slot values stored in facts.

use alloc::string::String;
use alloc::sync::Arc;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

/// An interned-by-refcount identifier such as `730`, `dummyLoc` or `is-seen-at`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl core::borrow::Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Name of the default value for unset slots.
pub const NIL: &str = "nil";

/// A single slot value.
///
/// Equality is by variant and value, so `Integer(20)` and `Float(20.0)` differ.
/// Floats compare bitwise, which gives facts usable set semantics.
#[derive(Clone)]
pub enum SlotValue {
    Symbol(Symbol),
    Text(Arc<str>),
    Integer(i64),
    Float(f64),
}

impl SlotValue {
    pub fn nil() -> Self {
        SlotValue::Symbol(Symbol::new(NIL))
    }

    pub fn symbol(s: &str) -> Self {
        SlotValue::Symbol(Symbol::new(s))
    }

    pub fn text(s: &str) -> Self {
        SlotValue::Text(Arc::from(s))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, SlotValue::Symbol(s) if s.as_str() == NIL)
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            SlotValue::Integer(i) => Some(*i),
            _ => None,
        }
    }

    /// Numeric view used by arithmetic and ordering comparisons.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            SlotValue::Integer(i) => Some(*i as f64),
            SlotValue::Float(x) => Some(*x),
            _ => None,
        }
    }

    /// String content of a symbol or text value.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            SlotValue::Symbol(s) => Some(s.as_str()),
            SlotValue::Text(t) => Some(t),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            SlotValue::Symbol(_) => 0,
            SlotValue::Text(_) => 1,
            SlotValue::Integer(_) => 2,
            SlotValue::Float(_) => 3,
        }
    }
}

impl PartialEq for SlotValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SlotValue::Symbol(a), SlotValue::Symbol(b)) => a == b,
            (SlotValue::Text(a), SlotValue::Text(b)) => a == b,
            (SlotValue::Integer(a), SlotValue::Integer(b)) => a == b,
            (SlotValue::Float(a), SlotValue::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for SlotValue {}

impl Hash for SlotValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            SlotValue::Symbol(s) => s.hash(state),
            SlotValue::Text(t) => t.hash(state),
            SlotValue::Integer(i) => i.hash(state),
            SlotValue::Float(x) => x.to_bits().hash(state),
        }
    }
}

impl Ord for SlotValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (SlotValue::Symbol(a), SlotValue::Symbol(b)) => a.cmp(b),
            (SlotValue::Text(a), SlotValue::Text(b)) => a.cmp(b),
            (SlotValue::Integer(a), SlotValue::Integer(b)) => a.cmp(b),
            (SlotValue::Float(a), SlotValue::Float(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for SlotValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for SlotValue {
    fn from(i: i64) -> Self {
        SlotValue::Integer(i)
    }
}

impl From<f64> for SlotValue {
    fn from(x: f64) -> Self {
        SlotValue::Float(x)
    }
}

impl From<Symbol> for SlotValue {
    fn from(s: Symbol) -> Self {
        SlotValue::Symbol(s)
    }
}

impl fmt::Debug for SlotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Renders the value in rule-language syntax, so the output reparses to the
/// same value.
impl fmt::Display for SlotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotValue::Symbol(s) => f.write_str(s.as_str()),
            SlotValue::Text(t) => {
                f.write_str("\"")?;
                for c in t.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => fmt::Write::write_char(f, c)?,
                    }
                }
                f.write_str("\"")
            }
            SlotValue::Integer(i) => write!(f, "{i}"),
            SlotValue::Float(x) => write!(f, "{x:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_and_float_are_distinct() {
        assert_ne!(SlotValue::Integer(20), SlotValue::Float(20.0));
        assert_eq!(SlotValue::Float(0.5), SlotValue::Float(0.5));
    }

    #[test]
    fn nil_detection() {
        assert!(SlotValue::nil().is_nil());
        assert!(!SlotValue::text("nil").is_nil());
    }

    #[test]
    fn text_display_escapes_quotes() {
        let v = SlotValue::text("a\"b\\c");
        assert_eq!(alloc::format!("{v}"), "\"a\\\"b\\\\c\"");
    }
}
