use alloc::vec::Vec;

use smallvec::SmallVec;

use crate::lang::Op;
use crate::value::SlotValue;

pub const TRUE: &str = "TRUE";
pub const FALSE: &str = "FALSE";

/// Expression with variables resolved to binding slots.
#[derive(Debug, Clone)]
pub enum CExpr {
    Lit(SlotValue),
    Var(usize),
    Call(Op, Vec<CExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("`{0}` expects numeric arguments")]
    NonNumeric(&'static str),
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow in `{0}`")]
    Overflow(&'static str),
    #[error("variable is unbound")]
    Unbound,
}

fn boolean(b: bool) -> SlotValue {
    SlotValue::symbol(if b { TRUE } else { FALSE })
}

pub fn is_truthy(v: &SlotValue) -> bool {
    !matches!(v, SlotValue::Symbol(s) if s.as_str() == FALSE)
}

enum Num {
    Int(i64),
    Float(f64),
}

fn num(v: &SlotValue, op: Op) -> Result<Num, EvalError> {
    match v {
        SlotValue::Integer(i) => Ok(Num::Int(*i)),
        SlotValue::Float(x) => Ok(Num::Float(*x)),
        _ => Err(EvalError::NonNumeric(op.symbol())),
    }
}

fn finite(x: f64, op: Op) -> Result<SlotValue, EvalError> {
    if x.is_finite() {
        Ok(SlotValue::Float(x))
    } else {
        Err(EvalError::Overflow(op.symbol()))
    }
}

fn as_float(n: Num) -> f64 {
    match n {
        Num::Int(i) => i as f64,
        Num::Float(x) => x,
    }
}

fn arith(op: Op, args: &[SlotValue]) -> Result<SlotValue, EvalError> {
    let mut all_int = true;
    for a in args {
        all_int &= matches!(num(a, op)?, Num::Int(_));
    }
    let mut nums = args.iter().map(|a| num(a, op).unwrap_or(Num::Int(0)));
    if op == Op::Div {
        let mut acc = nums.next().map_or(0.0, as_float);
        for d in nums.map(as_float) {
            if d == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            acc /= d;
        }
        return finite(acc, op);
    }
    if op == Op::Sub && args.len() == 1 {
        return match nums.next().expect("one argument") {
            Num::Int(i) => i
                .checked_neg()
                .map(SlotValue::Integer)
                .ok_or(EvalError::Overflow("-")),
            Num::Float(x) => Ok(SlotValue::Float(-x)),
        };
    }
    if all_int {
        let mut ints = args.iter().filter_map(SlotValue::as_i64);
        let mut acc = ints.next().unwrap_or(0);
        for i in ints {
            acc = match op {
                Op::Add => acc.checked_add(i),
                Op::Sub => acc.checked_sub(i),
                _ => acc.checked_mul(i),
            }
            .ok_or(EvalError::Overflow(op.symbol()))?;
        }
        return Ok(SlotValue::Integer(acc));
    }
    let mut acc = nums.next().map_or(0.0, as_float);
    for x in nums.map(as_float) {
        acc = match op {
            Op::Add => acc + x,
            Op::Sub => acc - x,
            _ => acc * x,
        };
    }
    finite(acc, op)
}

fn ordered(op: Op, a: &SlotValue, b: &SlotValue) -> Option<bool> {
    let ord = match (a, b) {
        (SlotValue::Integer(x), SlotValue::Integer(y)) => x.partial_cmp(y),
        _ => a.as_f64()?.partial_cmp(&b.as_f64()?),
    }?;
    Some(match op {
        Op::Lt => ord.is_lt(),
        Op::Gt => ord.is_gt(),
        Op::Le => ord.is_le(),
        _ => ord.is_ge(),
    })
}

/// Applies a built-in to evaluated arguments.
///
/// Comparisons on non-numeric values yield `FALSE`; arithmetic on them is an
/// error.
pub fn apply(op: Op, args: &[SlotValue]) -> Result<SlotValue, EvalError> {
    match op {
        Op::Add | Op::Sub | Op::Mul | Op::Div => arith(op, args),
        _ => Ok(boolean(compare(op, args))),
    }
}

fn compare(op: Op, args: &[SlotValue]) -> bool {
    match op {
        Op::Eq => args[1..].iter().all(|a| *a == args[0]),
        Op::Neq => args[1..].iter().all(|a| *a != args[0]),
        _ => args
            .windows(2)
            .all(|w| ordered(op, &w[0], &w[1]) == Some(true)),
    }
}

fn eval_args(
    args: &[CExpr],
    bindings: &[Option<SlotValue>],
) -> Result<SmallVec<[SlotValue; 4]>, EvalError> {
    args.iter().map(|a| eval(a, bindings)).collect()
}

pub fn eval(e: &CExpr, bindings: &[Option<SlotValue>]) -> Result<SlotValue, EvalError> {
    match e {
        CExpr::Lit(v) => Ok(v.clone()),
        CExpr::Var(i) => bindings
            .get(*i)
            .and_then(Option::clone)
            .ok_or(EvalError::Unbound),
        CExpr::Call(op, args) => apply(*op, &eval_args(args, bindings)?),
    }
}

/// Test conditional elements fail closed: evaluation errors count as false.
pub fn test_holds(e: &CExpr, bindings: &[Option<SlotValue>]) -> bool {
    match e {
        CExpr::Call(op, args) if !matches!(op, Op::Add | Op::Sub | Op::Mul | Op::Div) => {
            eval_args(args, bindings).is_ok_and(|vals| compare(*op, &vals))
        }
        _ => eval(e, bindings).is_ok_and(|v| is_truthy(&v)),
    }
}
