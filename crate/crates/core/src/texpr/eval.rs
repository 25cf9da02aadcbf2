//! Evaluator for transform expressions.
//!
//! Semantics follow the surface language the expressions are written in:
//! `and`/`or` short-circuit and return operand values, `//` and `%` use
//! floor semantics, integer arithmetic stays integral while `/` always
//! yields a float, and mixed string/number arithmetic is an error rather
//! than an implicit coercion.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::table::Value;

use super::ast::{BinOp, CmpOp, Expr, Lit};
use super::{Mode, TexprError, TransformExpr};

/// Runtime value. `Match` and `List` exist only transiently during
/// evaluation; a transform's final result must coerce to a table [`Value`].
#[derive(Debug, Clone, PartialEq)]
pub enum EvalValue {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Match(Vec<Option<String>>),
    List(Vec<EvalValue>),
}

impl EvalValue {
    fn type_name(&self) -> &'static str {
        match self {
            EvalValue::Null => "None",
            EvalValue::Bool(_) => "bool",
            EvalValue::Int(_) => "int",
            EvalValue::Float(_) => "float",
            EvalValue::Str(_) => "str",
            EvalValue::Match(_) => "match",
            EvalValue::List(_) => "list",
        }
    }

    fn from_table(v: &Value) -> EvalValue {
        match v {
            Value::Null => EvalValue::Null,
            Value::Bool(b) => EvalValue::Bool(*b),
            Value::Int(i) => EvalValue::Int(*i),
            Value::Float(f) => EvalValue::Float(*f),
            Value::Str(s) => EvalValue::Str(s.clone()),
        }
    }

    fn into_table(self) -> Result<Value, TexprError> {
        match self {
            EvalValue::Null => Ok(Value::Null),
            EvalValue::Bool(b) => Ok(Value::Bool(b)),
            EvalValue::Int(i) => Ok(Value::Int(i)),
            EvalValue::Float(f) => {
                if f.is_finite() {
                    Ok(Value::Float(f))
                } else {
                    Err(eval_err("non-finite float result"))
                }
            }
            EvalValue::Str(s) => Ok(Value::Str(s)),
            other => Err(eval_err(&format!(
                "transform produced a non-scalar {} result",
                other.type_name()
            ))),
        }
    }
}

fn eval_err(message: &str) -> TexprError {
    TexprError::Eval {
        message: message.to_string(),
    }
}

enum Env<'a> {
    Scalar {
        param: &'a str,
        value: EvalValue,
    },
    Row {
        param: &'a str,
        row: &'a BTreeMap<String, Value>,
    },
}

/// Evaluate a scalar-mode transform against a single cell.
pub fn eval_scalar(e: &TransformExpr, v: &Value) -> Result<Value, TexprError> {
    debug_assert_eq!(e.mode, Mode::Scalar);
    let env = Env::Scalar {
        param: &e.param,
        value: EvalValue::from_table(v),
    };
    eval(&e.body, &env)?.into_table()
}

/// Evaluate a row-mode transform against a row of named cells.
pub fn eval_row(e: &TransformExpr, row: &BTreeMap<String, Value>) -> Result<Value, TexprError> {
    debug_assert_eq!(e.mode, Mode::Row);
    let env = Env::Row {
        param: &e.param,
        row,
    };
    eval(&e.body, &env)?.into_table()
}

fn truthy(v: &EvalValue) -> bool {
    match v {
        EvalValue::Null => false,
        EvalValue::Bool(b) => *b,
        EvalValue::Int(i) => *i != 0,
        EvalValue::Float(f) => *f != 0.0,
        EvalValue::Str(s) => !s.is_empty(),
        EvalValue::Match(_) => true,
        EvalValue::List(items) => !items.is_empty(),
    }
}

fn as_number(v: &EvalValue) -> Option<f64> {
    match v {
        EvalValue::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        EvalValue::Int(i) => Some(*i as f64),
        EvalValue::Float(f) => Some(*f),
        _ => None,
    }
}

fn values_eq(a: &EvalValue, b: &EvalValue) -> bool {
    match (a, b) {
        (EvalValue::Null, EvalValue::Null) => true,
        (EvalValue::Str(x), EvalValue::Str(y)) => x == y,
        (EvalValue::List(x), EvalValue::List(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(a, b)| values_eq(a, b))
        }
        (EvalValue::Match(x), EvalValue::Match(y)) => x == y,
        _ => match (as_number(a), as_number(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

fn values_cmp(a: &EvalValue, b: &EvalValue) -> Result<Ordering, TexprError> {
    if let (Some(x), Some(y)) = (as_number(a), as_number(b)) {
        return x
            .partial_cmp(&y)
            .ok_or_else(|| eval_err("comparison involving nan"));
    }
    if let (EvalValue::Str(x), EvalValue::Str(y)) = (a, b) {
        return Ok(x.cmp(y));
    }
    Err(eval_err(&format!(
        "'{}' and '{}' are not orderable",
        a.type_name(),
        b.type_name()
    )))
}

fn int_floor_div(a: i64, b: i64) -> Result<i64, TexprError> {
    if b == 0 {
        return Err(eval_err("division by zero"));
    }
    let q = a.checked_div(b).ok_or_else(|| eval_err("integer overflow"))?;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        Ok(q - 1)
    } else {
        Ok(q)
    }
}

fn int_floor_mod(a: i64, b: i64) -> Result<i64, TexprError> {
    if b == 0 {
        return Err(eval_err("modulo by zero"));
    }
    let r = a % b;
    if r != 0 && ((r < 0) != (b < 0)) {
        Ok(r + b)
    } else {
        Ok(r)
    }
}

fn binary(op: BinOp, a: EvalValue, b: EvalValue) -> Result<EvalValue, TexprError> {
    use EvalValue::*;
    if op == BinOp::Add {
        if let (Str(x), Str(y)) = (&a, &b) {
            return Ok(Str(format!("{x}{y}")));
        }
    }
    let numeric = |v: &EvalValue| matches!(v, Int(_) | Float(_) | Bool(_));
    if !numeric(&a) || !numeric(&b) {
        return Err(eval_err(&format!(
            "unsupported operand types for {}: '{}' and '{}'",
            op.symbol(),
            a.type_name(),
            b.type_name()
        )));
    }
    let to_int = |v: &EvalValue| match v {
        Int(i) => Some(*i),
        Bool(bv) => Some(*bv as i64),
        _ => None,
    };
    if let (Some(x), Some(y)) = (to_int(&a), to_int(&b)) {
        return match op {
            BinOp::Add => x.checked_add(y).map(Int).ok_or_else(|| eval_err("integer overflow")),
            BinOp::Sub => x.checked_sub(y).map(Int).ok_or_else(|| eval_err("integer overflow")),
            BinOp::Mul => x.checked_mul(y).map(Int).ok_or_else(|| eval_err("integer overflow")),
            BinOp::Div => {
                if y == 0 {
                    Err(eval_err("division by zero"))
                } else {
                    Ok(Float(x as f64 / y as f64))
                }
            }
            BinOp::FloorDiv => int_floor_div(x, y).map(Int),
            BinOp::Mod => int_floor_mod(x, y).map(Int),
        };
    }
    let x = as_number(&a).expect("checked numeric");
    let y = as_number(&b).expect("checked numeric");
    match op {
        BinOp::Add => Ok(Float(x + y)),
        BinOp::Sub => Ok(Float(x - y)),
        BinOp::Mul => Ok(Float(x * y)),
        BinOp::Div => {
            if y == 0.0 {
                Err(eval_err("division by zero"))
            } else {
                Ok(Float(x / y))
            }
        }
        BinOp::FloorDiv => {
            if y == 0.0 {
                Err(eval_err("division by zero"))
            } else {
                Ok(Float((x / y).floor()))
            }
        }
        BinOp::Mod => {
            if y == 0.0 {
                Err(eval_err("modulo by zero"))
            } else {
                Ok(Float(x - y * (x / y).floor()))
            }
        }
    }
}

fn compare(op: CmpOp, a: EvalValue, b: EvalValue) -> Result<EvalValue, TexprError> {
    let result = match op {
        CmpOp::Eq => values_eq(&a, &b),
        CmpOp::Ne => !values_eq(&a, &b),
        CmpOp::Lt => values_cmp(&a, &b)? == Ordering::Less,
        CmpOp::Le => values_cmp(&a, &b)? != Ordering::Greater,
        CmpOp::Gt => values_cmp(&a, &b)? == Ordering::Greater,
        CmpOp::Ge => values_cmp(&a, &b)? != Ordering::Less,
        CmpOp::In | CmpOp::NotIn => {
            let contains = match (&a, &b) {
                (EvalValue::Str(needle), EvalValue::Str(hay)) => hay.contains(needle.as_str()),
                (item, EvalValue::List(items)) => items.iter().any(|x| values_eq(x, item)),
                _ => {
                    return Err(eval_err(&format!(
                        "'in' requires a string or list container, got '{}'",
                        b.type_name()
                    )));
                }
            };
            if op == CmpOp::In {
                contains
            } else {
                !contains
            }
        }
    };
    Ok(EvalValue::Bool(result))
}

fn normalize_index(i: i64, len: usize) -> Option<usize> {
    let len = len as i64;
    let idx = if i < 0 { i + len } else { i };
    if idx < 0 || idx >= len {
        None
    } else {
        Some(idx as usize)
    }
}

fn clamp_slice(i: i64, len: usize) -> usize {
    let len = len as i64;
    let idx = if i < 0 { i + len } else { i };
    idx.clamp(0, len) as usize
}

fn builtin_round(args: &[EvalValue]) -> Result<EvalValue, TexprError> {
    // round() uses round-half-away-from-zero, not banker's rounding.
    let x = match args.first() {
        Some(EvalValue::Int(i)) => return Ok(EvalValue::Int(*i)),
        Some(EvalValue::Float(f)) => *f,
        Some(other) => {
            return Err(eval_err(&format!(
                "round() expects a number, got '{}'",
                other.type_name()
            )));
        }
        None => return Err(eval_err("round() expects 1 or 2 arguments")),
    };
    match args.get(1) {
        None => {
            let rounded = x.round();
            if rounded.is_finite() && rounded >= i64::MIN as f64 && rounded <= i64::MAX as f64 {
                Ok(EvalValue::Int(rounded as i64))
            } else {
                Err(eval_err("round() result out of integer range"))
            }
        }
        Some(EvalValue::Int(n)) => {
            let scale = 10f64.powi(*n as i32);
            Ok(EvalValue::Float((x * scale).round() / scale))
        }
        Some(other) => Err(eval_err(&format!(
            "round() digit count must be an int, got '{}'",
            other.type_name()
        ))),
    }
}

fn call_builtin(name: &str, args: Vec<EvalValue>) -> Result<EvalValue, TexprError> {
    use EvalValue::*;
    let arity = |n: usize| -> Result<(), TexprError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(eval_err(&format!(
                "{name}() expects {n} argument(s), got {}",
                args.len()
            )))
        }
    };
    match name {
        "int" => {
            arity(1)?;
            match &args[0] {
                Bool(b) => Ok(Int(*b as i64)),
                Int(i) => Ok(Int(*i)),
                Float(f) => {
                    let t = f.trunc();
                    if t >= i64::MIN as f64 && t <= i64::MAX as f64 {
                        Ok(Int(t as i64))
                    } else {
                        Err(eval_err("float out of integer range"))
                    }
                }
                Str(s) => s
                    .trim()
                    .parse::<i64>()
                    .map(Int)
                    .map_err(|_| eval_err(&format!("invalid literal for int(): {s:?}"))),
                other => Err(eval_err(&format!(
                    "int() argument must be a string or number, got '{}'",
                    other.type_name()
                ))),
            }
        }
        "float" => {
            arity(1)?;
            let f = match &args[0] {
                Bool(b) => *b as i64 as f64,
                Int(i) => *i as f64,
                Float(f) => *f,
                Str(s) => s
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| eval_err(&format!("could not convert string to float: {s:?}")))?,
                other => {
                    return Err(eval_err(&format!(
                        "float() argument must be a string or number, got '{}'",
                        other.type_name()
                    )));
                }
            };
            if f.is_finite() {
                Ok(Float(f))
            } else {
                Err(eval_err("non-finite float"))
            }
        }
        "str" => {
            arity(1)?;
            let s = match &args[0] {
                Null => "None".to_string(),
                Bool(b) => if *b { "True" } else { "False" }.to_string(),
                Int(i) => i.to_string(),
                Float(f) => f.to_string(),
                Str(s) => s.clone(),
                other => {
                    return Err(eval_err(&format!(
                        "str() cannot render '{}'",
                        other.type_name()
                    )));
                }
            };
            Ok(Str(s))
        }
        "len" => {
            arity(1)?;
            match &args[0] {
                Str(s) => Ok(Int(s.chars().count() as i64)),
                List(items) => Ok(Int(items.len() as i64)),
                Match(groups) => Ok(Int(groups.len() as i64)),
                other => Err(eval_err(&format!(
                    "len() argument has no length: '{}'",
                    other.type_name()
                ))),
            }
        }
        "abs" => {
            arity(1)?;
            match &args[0] {
                Int(i) => i
                    .checked_abs()
                    .map(Int)
                    .ok_or_else(|| eval_err("integer overflow")),
                Float(f) => Ok(Float(f.abs())),
                Bool(b) => Ok(Int(*b as i64)),
                other => Err(eval_err(&format!(
                    "abs() expects a number, got '{}'",
                    other.type_name()
                ))),
            }
        }
        "round" => {
            if args.is_empty() || args.len() > 2 {
                return Err(eval_err("round() expects 1 or 2 arguments"));
            }
            builtin_round(&args)
        }
        "min" | "max" => {
            if args.len() < 2 {
                return Err(eval_err(&format!("{name}() expects at least 2 arguments")));
            }
            let mut best = args[0].clone();
            for candidate in &args[1..] {
                let ord = values_cmp(candidate, &best)?;
                let replace = if name == "min" {
                    ord == Ordering::Less
                } else {
                    ord == Ordering::Greater
                };
                if replace {
                    best = candidate.clone();
                }
            }
            Ok(best)
        }
        other => Err(eval_err(&format!("unknown function '{other}'"))),
    }
}

fn regex_search(args: Vec<EvalValue>) -> Result<EvalValue, TexprError> {
    if args.len() != 2 {
        return Err(eval_err("re.search() expects 2 arguments"));
    }
    let pattern = match &args[0] {
        EvalValue::Str(s) => s,
        other => {
            return Err(eval_err(&format!(
                "re.search() pattern must be a string, got '{}'",
                other.type_name()
            )));
        }
    };
    let hay = match &args[1] {
        EvalValue::Str(s) => s,
        other => {
            return Err(eval_err(&format!(
                "re.search() expects a string to search, got '{}'",
                other.type_name()
            )));
        }
    };
    let re = regex::Regex::new(pattern)
        .map_err(|_| eval_err(&format!("invalid regular expression: {pattern:?}")))?;
    match re.captures(hay) {
        Some(caps) => {
            let groups = (0..caps.len())
                .map(|i| caps.get(i).map(|m| m.as_str().to_string()))
                .collect();
            Ok(EvalValue::Match(groups))
        }
        None => Ok(EvalValue::Null),
    }
}

fn call_method(
    target: EvalValue,
    name: &str,
    args: Vec<EvalValue>,
) -> Result<EvalValue, TexprError> {
    use EvalValue::*;
    if let Match(groups) = &target {
        if name == "group" {
            if args.len() != 1 {
                return Err(eval_err("group() expects 1 argument"));
            }
            let k = match &args[0] {
                Int(i) => *i,
                other => {
                    return Err(eval_err(&format!(
                        "group() index must be an int, got '{}'",
                        other.type_name()
                    )));
                }
            };
            if k < 0 || k as usize >= groups.len() {
                return Err(eval_err(&format!("no such group: {k}")));
            }
            return Ok(match &groups[k as usize] {
                Some(text) => Str(text.clone()),
                None => Null,
            });
        }
        return Err(eval_err(&format!("no method '{name}' on match objects")));
    }
    if matches!(target, Null) {
        // Mirrors calling a method on a None result, the canonical
        // extract failure when re.search() finds nothing.
        return Err(eval_err(&format!("cannot call method '{name}' on None")));
    }
    let s = match &target {
        Str(s) => s.clone(),
        other => {
            return Err(eval_err(&format!(
                "no method '{name}' on '{}'",
                other.type_name()
            )));
        }
    };
    let str_arg = |i: usize| -> Result<String, TexprError> {
        match args.get(i) {
            Some(Str(v)) => Ok(v.clone()),
            Some(other) => Err(eval_err(&format!(
                "{name}() argument {} must be a string, got '{}'",
                i + 1,
                other.type_name()
            ))),
            None => Err(eval_err(&format!("{name}() is missing argument {}", i + 1))),
        }
    };
    match name {
        "replace" => {
            if args.len() != 2 {
                return Err(eval_err("replace() expects 2 arguments"));
            }
            let old = str_arg(0)?;
            let new = str_arg(1)?;
            if old.is_empty() {
                return Err(eval_err("replace() with an empty pattern"));
            }
            Ok(Str(s.replace(&old, &new)))
        }
        "split" => match args.len() {
            0 => Ok(List(
                s.split_whitespace()
                    .map(|p| Str(p.to_string()))
                    .collect::<Vec<_>>(),
            )),
            1 => {
                let sep = str_arg(0)?;
                if sep.is_empty() {
                    return Err(eval_err("empty separator"));
                }
                Ok(List(s.split(&sep as &str).map(|p| Str(p.to_string())).collect()))
            }
            _ => Err(eval_err("split() expects 0 or 1 arguments")),
        },
        "strip" | "lstrip" | "rstrip" => {
            let trimmed = match args.len() {
                0 => match name {
                    "strip" => s.trim().to_string(),
                    "lstrip" => s.trim_start().to_string(),
                    _ => s.trim_end().to_string(),
                },
                1 => {
                    let chars: Vec<char> = str_arg(0)?.chars().collect();
                    let pred = |c: char| chars.contains(&c);
                    match name {
                        "strip" => s.trim_matches(pred).to_string(),
                        "lstrip" => s.trim_start_matches(pred).to_string(),
                        _ => s.trim_end_matches(pred).to_string(),
                    }
                }
                _ => return Err(eval_err(&format!("{name}() expects 0 or 1 arguments"))),
            };
            Ok(Str(trimmed))
        }
        "lower" => {
            if !args.is_empty() {
                return Err(eval_err("lower() expects no arguments"));
            }
            Ok(Str(s.to_lowercase()))
        }
        "upper" => {
            if !args.is_empty() {
                return Err(eval_err("upper() expects no arguments"));
            }
            Ok(Str(s.to_uppercase()))
        }
        "startswith" => Ok(Bool(s.starts_with(&str_arg(0)?))),
        "endswith" => Ok(Bool(s.ends_with(&str_arg(0)?))),
        "find" => {
            let needle = str_arg(0)?;
            match s.find(&needle) {
                Some(byte_idx) => Ok(Int(s[..byte_idx].chars().count() as i64)),
                None => Ok(Int(-1)),
            }
        }
        "zfill" => {
            let width = match args.first() {
                Some(Int(w)) if *w >= 0 => *w as usize,
                _ => return Err(eval_err("zfill() expects a non-negative int width")),
            };
            let (sign, digits) = match s.strip_prefix(['+', '-']) {
                Some(rest) => (&s[..1], rest),
                None => ("", s.as_str()),
            };
            let total = sign.chars().count() + digits.chars().count();
            if total >= width {
                Ok(Str(s.clone()))
            } else {
                let zeros = "0".repeat(width - total);
                Ok(Str(format!("{sign}{zeros}{digits}")))
            }
        }
        other => Err(eval_err(&format!("no method '{other}' on strings"))),
    }
}

fn eval(e: &Expr, env: &Env) -> Result<EvalValue, TexprError> {
    match e {
        Expr::Literal(lit) => Ok(match lit {
            Lit::Int(i) => EvalValue::Int(*i),
            Lit::Float(f) => EvalValue::Float(*f),
            Lit::Str(s) => EvalValue::Str(s.clone()),
            Lit::True => EvalValue::Bool(true),
            Lit::False => EvalValue::Bool(false),
            Lit::None => EvalValue::Null,
        }),
        Expr::Ident { name, .. } => match env {
            Env::Scalar { param, value } if name == param => Ok(value.clone()),
            Env::Row { param, .. } if name == param => Err(eval_err(&format!(
                "row parameter '{name}' must be used with a column subscript"
            ))),
            _ => Err(eval_err(&format!("name '{name}' is not defined"))),
        },
        Expr::Neg(inner) => {
            let v = eval(inner, env)?;
            match v {
                EvalValue::Int(i) => i
                    .checked_neg()
                    .map(EvalValue::Int)
                    .ok_or_else(|| eval_err("integer overflow")),
                EvalValue::Float(f) => Ok(EvalValue::Float(-f)),
                EvalValue::Bool(b) => Ok(EvalValue::Int(-(b as i64))),
                other => Err(eval_err(&format!(
                    "bad operand type for unary -: '{}'",
                    other.type_name()
                ))),
            }
        }
        Expr::Not(inner) => Ok(EvalValue::Bool(!truthy(&eval(inner, env)?))),
        Expr::Binary { op, left, right } => {
            let a = eval(left, env)?;
            let b = eval(right, env)?;
            binary(*op, a, b)
        }
        Expr::Compare { op, left, right } => {
            let a = eval(left, env)?;
            let b = eval(right, env)?;
            compare(*op, a, b)
        }
        Expr::And { left, right } => {
            let a = eval(left, env)?;
            if truthy(&a) {
                eval(right, env)
            } else {
                Ok(a)
            }
        }
        Expr::Or { left, right } => {
            let a = eval(left, env)?;
            if truthy(&a) {
                Ok(a)
            } else {
                eval(right, env)
            }
        }
        Expr::Cond {
            then,
            cond,
            otherwise,
        } => {
            if truthy(&eval(cond, env)?) {
                eval(then, env)
            } else {
                eval(otherwise, env)
            }
        }
        Expr::MethodCall {
            target, name, args, ..
        } => {
            // `re.search(...)` is namespace lookup, not a value method.
            if let Expr::Ident { name: ns, .. } = target.as_ref() {
                let shadowed = matches!(env, Env::Scalar { param, .. } if param == ns);
                if ns == "re" && !shadowed {
                    let args = args
                        .iter()
                        .map(|a| eval(a, env))
                        .collect::<Result<Vec<_>, _>>()?;
                    return regex_search(args);
                }
            }
            let target = eval(target, env)?;
            let args = args
                .iter()
                .map(|a| eval(a, env))
                .collect::<Result<Vec<_>, _>>()?;
            call_method(target, name, args)
        }
        Expr::Call { callee, args, .. } => {
            let name = match callee.as_ref() {
                Expr::Ident { name, .. } => name.clone(),
                _ => return Err(eval_err("only builtin functions are callable")),
            };
            let args = args
                .iter()
                .map(|a| eval(a, env))
                .collect::<Result<Vec<_>, _>>()?;
            call_builtin(&name, args)
        }
        Expr::Index { target, index } => {
            // Row-mode column access: param['Column'].
            if let (
                Env::Row { param, row },
                Expr::Ident { name, .. },
                Expr::Literal(Lit::Str(key)),
            ) = (env, target.as_ref(), index.as_ref())
            {
                if name == param {
                    return match row.get(key) {
                        Some(v) => Ok(EvalValue::from_table(v)),
                        None => Err(TexprError::MissingKey {
                            column: key.clone(),
                        }),
                    };
                }
            }
            let target = eval(target, env)?;
            let index = eval(index, env)?;
            let i = match index {
                EvalValue::Int(i) => i,
                other => {
                    return Err(eval_err(&format!(
                        "indices must be integers, got '{}'",
                        other.type_name()
                    )));
                }
            };
            match target {
                EvalValue::Str(s) => {
                    let chars: Vec<char> = s.chars().collect();
                    match normalize_index(i, chars.len()) {
                        Some(idx) => Ok(EvalValue::Str(chars[idx].to_string())),
                        None => Err(eval_err("string index out of range")),
                    }
                }
                EvalValue::List(items) => match normalize_index(i, items.len()) {
                    Some(idx) => Ok(items[idx].clone()),
                    None => Err(eval_err("list index out of range")),
                },
                other => Err(eval_err(&format!(
                    "'{}' is not subscriptable",
                    other.type_name()
                ))),
            }
        }
        Expr::Slice { target, start, end } => {
            let target = eval(target, env)?;
            let want_int = |v: EvalValue| match v {
                EvalValue::Int(i) => Ok(i),
                other => Err(eval_err(&format!(
                    "slice indices must be integers, got '{}'",
                    other.type_name()
                ))),
            };
            let lo = want_int(eval(start, env)?)?;
            let hi = match end {
                Some(e) => Some(want_int(eval(e, env)?)?),
                None => None,
            };
            match target {
                EvalValue::Str(s) => {
                    let chars: Vec<char> = s.chars().collect();
                    let a = clamp_slice(lo, chars.len());
                    let b = hi.map_or(chars.len(), |h| clamp_slice(h, chars.len()));
                    let slice: String = if a < b { chars[a..b].iter().collect() } else { String::new() };
                    Ok(EvalValue::Str(slice))
                }
                EvalValue::List(items) => {
                    let a = clamp_slice(lo, items.len());
                    let b = hi.map_or(items.len(), |h| clamp_slice(h, items.len()));
                    let slice = if a < b { items[a..b].to_vec() } else { Vec::new() };
                    Ok(EvalValue::List(slice))
                }
                other => Err(eval_err(&format!(
                    "'{}' cannot be sliced",
                    other.type_name()
                ))),
            }
        }
    }
}
