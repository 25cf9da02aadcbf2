//! Parser and evaluator for the lambda-style transform expressions used as
//! `func` arguments of pool functions.
//!
//! The surface syntax is the Python-lambda subset that programmer agents
//! emit, e.g. `lambda x: re.search(r'\((.*?)\)',x).group(1)`. The grammar is
//! a closed expression subset: no statements, loops, assignments or imports,
//! and attribute access is restricted to a whitelisted set of string methods
//! plus the `re.search` builtin.

mod ast;
mod eval;
mod lex;
mod parser;

use std::collections::BTreeSet;

pub use ast::{BinOp, CmpOp, Expr, Lit};
pub use eval::{eval_row, eval_scalar, EvalValue};

/// Whitelisted builtin functions callable by name.
pub const BUILTINS: &[&str] = &["int", "float", "str", "len", "abs", "round", "min", "max"];

/// Whitelisted methods on string (and match) values.
pub const METHODS: &[&str] = &[
    "replace",
    "split",
    "strip",
    "lstrip",
    "rstrip",
    "lower",
    "upper",
    "startswith",
    "endswith",
    "find",
    "zfill",
    "group",
];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TexprError {
    #[error("parse error at byte {position}: expected {expected}")]
    Parse { position: usize, expected: String },
    #[error("mode error: {message}")]
    Mode { message: String },
    #[error("missing key {column:?}")]
    MissingKey { column: String },
    #[error("{message}")]
    Eval { message: String },
}

/// Whether the lambda consumes one cell or one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Scalar,
    Row,
}

/// A parsed transform. In `Scalar` mode the parameter is the cell value; in
/// `Row` mode the parameter may only appear as `param['Column']` with a
/// literal string key.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformExpr {
    pub param: String,
    pub body: Expr,
    pub mode: Mode,
}

impl TransformExpr {
    /// Canonical text form; parsing it back yields a semantically equal AST.
    pub fn pretty(&self) -> String {
        let mut out = format!("lambda {}: ", self.param);
        ast::print_expr(&self.body, 0, &mut out);
        out
    }
}

/// Parse a transform expression. Mode is `Row` iff the body subscripts the
/// parameter with a literal string key; mixing that with bare parameter uses
/// is a `Mode` error.
pub fn parse_transform(src: &str) -> Result<TransformExpr, TexprError> {
    let mut p = parser::Parser::new(src)?;
    let (param, body) = p.parse_lambda()?;
    let mut walk = Walk {
        param: &param,
        row_keys: BTreeSet::new(),
        scalar_use: false,
        error: None,
    };
    walk.visit(&body, Context::Plain);
    if let Some(err) = walk.error {
        return Err(err);
    }
    let mode = if walk.row_keys.is_empty() {
        Mode::Scalar
    } else if walk.scalar_use {
        return Err(TexprError::Mode {
            message: format!(
                "parameter '{param}' is used both bare and with a column subscript"
            ),
        });
    } else {
        Mode::Row
    };
    Ok(TransformExpr { param, body, mode })
}

/// The literal column keys a row-mode transform references; empty for
/// scalar transforms.
pub fn referenced_keys(e: &TransformExpr) -> BTreeSet<String> {
    let mut walk = Walk {
        param: &e.param,
        row_keys: BTreeSet::new(),
        scalar_use: false,
        error: None,
    };
    walk.visit(&e.body, Context::Plain);
    walk.row_keys
}

#[derive(Clone, Copy, PartialEq)]
enum Context {
    Plain,
    /// Callee position of a function call.
    Callee,
    /// Target position of a method call.
    MethodTarget,
}

struct Walk<'a> {
    param: &'a str,
    row_keys: BTreeSet<String>,
    scalar_use: bool,
    error: Option<TexprError>,
}

impl Walk<'_> {
    fn fail(&mut self, position: usize, expected: String) {
        if self.error.is_none() {
            self.error = Some(TexprError::Parse { position, expected });
        }
    }

    fn visit(&mut self, e: &Expr, ctx: Context) {
        match e {
            Expr::Literal(_) => {}
            Expr::Ident { name, pos } => {
                if name == self.param {
                    match ctx {
                        Context::Callee => {
                            self.fail(pos.0, "a builtin function, not the parameter".into())
                        }
                        _ => self.scalar_use = true,
                    }
                    return;
                }
                match ctx {
                    Context::Callee if BUILTINS.contains(&name.as_str()) => {}
                    Context::MethodTarget if name == "re" => {}
                    _ => self.fail(
                        pos.0,
                        format!("the lambda parameter, found free identifier '{name}'"),
                    ),
                }
            }
            Expr::Neg(inner) | Expr::Not(inner) => self.visit(inner, Context::Plain),
            Expr::Binary { left, right, .. }
            | Expr::Compare { left, right, .. }
            | Expr::And { left, right }
            | Expr::Or { left, right } => {
                self.visit(left, Context::Plain);
                self.visit(right, Context::Plain);
            }
            Expr::Cond {
                then,
                cond,
                otherwise,
            } => {
                self.visit(then, Context::Plain);
                self.visit(cond, Context::Plain);
                self.visit(otherwise, Context::Plain);
            }
            Expr::MethodCall {
                target,
                name,
                args,
                pos,
            } => {
                let re_namespace =
                    matches!(target.as_ref(), Expr::Ident { name, .. } if name == "re")
                        && self.param != "re";
                if re_namespace {
                    if name != "search" {
                        self.fail(pos.0, format!("re.search, found re.{name}"));
                    }
                } else if !METHODS.contains(&name.as_str()) {
                    self.fail(pos.0, format!("a whitelisted method, found '{name}'"));
                }
                self.visit(target, Context::MethodTarget);
                for a in args {
                    self.visit(a, Context::Plain);
                }
            }
            Expr::Call { callee, args, pos } => {
                if !matches!(callee.as_ref(), Expr::Ident { .. }) {
                    self.fail(pos.0, "a builtin function name before '('".into());
                }
                self.visit(callee, Context::Callee);
                for a in args {
                    self.visit(a, Context::Plain);
                }
            }
            Expr::Index { target, index } => {
                // param['Key'] is row access; any other subscript of the
                // parameter is scalar string indexing.
                if let (Expr::Ident { name, .. }, Expr::Literal(Lit::Str(key))) =
                    (target.as_ref(), index.as_ref())
                {
                    if name == self.param {
                        self.row_keys.insert(key.clone());
                        return;
                    }
                }
                self.visit(target, Context::Plain);
                self.visit(index, Context::Plain);
            }
            Expr::Slice { target, start, end } => {
                self.visit(target, Context::Plain);
                self.visit(start, Context::Plain);
                if let Some(end) = end {
                    self.visit(end, Context::Plain);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Value;
    use std::collections::BTreeMap;

    fn row(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    const EXTRACT: &str = r"lambda x: re.search(r'\((.*?)\)',x).group(1)";
    const GROWTH: &str = "lambda x: (x['2013']-x['2012'])/x['2012']";

    #[test]
    fn parses_paper_extract_lambda_as_scalar() {
        let e = parse_transform(EXTRACT).unwrap();
        assert_eq!(e.mode, Mode::Scalar);
        assert_eq!(e.param, "x");
    }

    #[test]
    fn parses_identity() {
        let e = parse_transform("lambda x: x").unwrap();
        assert_eq!(e.mode, Mode::Scalar);
    }

    #[test]
    fn parses_growth_rate_as_row() {
        let e = parse_transform(GROWTH).unwrap();
        assert_eq!(e.mode, Mode::Row);
        let keys = referenced_keys(&e);
        assert_eq!(
            keys.into_iter().collect::<Vec<_>>(),
            vec!["2012".to_string(), "2013".to_string()]
        );
    }

    #[test]
    fn mode_error_on_mixed_use() {
        let err = parse_transform("lambda x: x['A'] + x").unwrap_err();
        assert!(matches!(err, TexprError::Mode { .. }));
    }

    #[test]
    fn rejects_free_identifiers() {
        let err = parse_transform("lambda x: y + 1").unwrap_err();
        assert!(matches!(err, TexprError::Parse { .. }));
    }

    #[test]
    fn rejects_unlisted_methods() {
        let err = parse_transform("lambda x: x.encode()").unwrap_err();
        assert!(matches!(err, TexprError::Parse { .. }));
    }

    #[test]
    fn parse_error_has_position() {
        match parse_transform("lambda x: x[") {
            Err(TexprError::Parse { position, .. }) => assert_eq!(position, 12),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn extract_evaluates_country_code() {
        let e = parse_transform(EXTRACT).unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("Alej (ESP)".into())).unwrap(),
            Value::Str("ESP".into())
        );
    }

    #[test]
    fn extract_fails_on_unparenthesized_value() {
        let e = parse_transform(EXTRACT).unwrap();
        let err = eval_scalar(&e, &Value::Str("Dav. ITA".into())).unwrap_err();
        match err {
            TexprError::Eval { message } => assert!(message.contains("group")),
            other => panic!("expected eval error, got {other:?}"),
        }
    }

    #[test]
    fn repaired_extract_handles_both_formats() {
        let src = r"lambda x: re.search(r'\((.*?)\)',x).group(1) if '(' in x and ')' in x else x.split(' ')[-1]";
        let e = parse_transform(src).unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("Alej (ESP)".into())).unwrap(),
            Value::Str("ESP".into())
        );
        assert_eq!(
            eval_scalar(&e, &Value::Str("Dav. ITA".into())).unwrap(),
            Value::Str("ITA".into())
        );
    }

    #[test]
    fn comma_strip_to_int() {
        let e = parse_transform("lambda x: int(x.replace(',', ''))").unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("1,234".into())).unwrap(),
            Value::Int(1234)
        );
    }

    #[test]
    fn growth_rate_on_floats() {
        let e = parse_transform(GROWTH).unwrap();
        let r = row(&[("2012", Value::Float(100.0)), ("2013", Value::Float(110.0))]);
        match eval_row(&e, &r).unwrap() {
            Value::Float(f) => assert!((f - 0.1).abs() < 1e-12),
            other => panic!("expected float, got {other:?}"),
        }
    }

    #[test]
    fn int_subtraction_stays_int() {
        let e = parse_transform("lambda x: x['A']-x['B']").unwrap();
        let r = row(&[("A", Value::Int(5)), ("B", Value::Int(5))]);
        assert_eq!(eval_row(&e, &r).unwrap(), Value::Int(0));
    }

    #[test]
    fn growth_rate_division_by_zero() {
        let e = parse_transform(GROWTH).unwrap();
        let r = row(&[("2012", Value::Float(0.0)), ("2013", Value::Float(1.0))]);
        let err = eval_row(&e, &r).unwrap_err();
        match err {
            TexprError::Eval { message } => assert!(message.contains("division by zero")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_row_key() {
        let e = parse_transform("lambda x: x['A']").unwrap();
        let r = row(&[("B", Value::Int(1))]);
        assert_eq!(
            eval_row(&e, &r).unwrap_err(),
            TexprError::MissingKey {
                column: "A".to_string()
            }
        );
    }

    #[test]
    fn conditional_keys_are_collected() {
        let e = parse_transform("lambda x: x['A'] if x['A']>0 else x['B']").unwrap();
        let keys: Vec<String> = referenced_keys(&e).into_iter().collect();
        assert_eq!(keys, vec!["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn substring_containment() {
        let e = parse_transform("lambda x: '(' in x").unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("a(b".into())).unwrap(),
            Value::Bool(true)
        );
        assert_eq!(
            eval_scalar(&e, &Value::Str("ab".into())).unwrap(),
            Value::Bool(false)
        );
    }

    #[test]
    fn division_always_floats_and_floor_div_stays_int() {
        let e = parse_transform("lambda x: x/2").unwrap();
        assert_eq!(eval_scalar(&e, &Value::Int(4)).unwrap(), Value::Float(2.0));
        let e = parse_transform("lambda x: x//2").unwrap();
        assert_eq!(eval_scalar(&e, &Value::Int(5)).unwrap(), Value::Int(2));
        let e = parse_transform("lambda x: x % 3").unwrap();
        assert_eq!(eval_scalar(&e, &Value::Int(-7)).unwrap(), Value::Int(2));
    }

    #[test]
    fn string_number_arithmetic_is_an_error() {
        let e = parse_transform("lambda x: x + 1").unwrap();
        assert!(matches!(
            eval_scalar(&e, &Value::Str("a".into())),
            Err(TexprError::Eval { .. })
        ));
        let e = parse_transform("lambda x: x + '!'").unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("a".into())).unwrap(),
            Value::Str("a!".into())
        );
    }

    #[test]
    fn round_is_half_away_from_zero() {
        let e = parse_transform("lambda x: round(x)").unwrap();
        assert_eq!(eval_scalar(&e, &Value::Float(2.5)).unwrap(), Value::Int(3));
        assert_eq!(eval_scalar(&e, &Value::Float(-2.5)).unwrap(), Value::Int(-3));
        let e = parse_transform("lambda x: round(x, 1)").unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Float(0.25)).unwrap(),
            Value::Float(0.3)
        );
    }

    #[test]
    fn string_indexing_and_slicing() {
        let e = parse_transform("lambda x: x[0]").unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("abc".into())).unwrap(),
            Value::Str("a".into())
        );
        let e = parse_transform("lambda x: x[-1]").unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("abc".into())).unwrap(),
            Value::Str("c".into())
        );
        let e = parse_transform("lambda x: x[1:100]").unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("abc".into())).unwrap(),
            Value::Str("bc".into())
        );
        let e = parse_transform("lambda x: x[5]").unwrap();
        assert!(eval_scalar(&e, &Value::Str("abc".into())).is_err());
    }

    #[test]
    fn split_month_extraction() {
        let e = parse_transform("lambda x: int(x.split('-')[0])").unwrap();
        assert_eq!(
            eval_scalar(&e, &Value::Str("02-28".into())).unwrap(),
            Value::Int(2)
        );
    }

    #[test]
    fn methods_on_null_fail() {
        let e = parse_transform("lambda x: x.strip()").unwrap();
        assert!(matches!(
            eval_scalar(&e, &Value::Null),
            Err(TexprError::Eval { .. })
        ));
    }

    #[test]
    fn list_result_is_rejected() {
        let e = parse_transform("lambda x: x.split(' ')").unwrap();
        assert!(eval_scalar(&e, &Value::Str("a b".into())).is_err());
    }

    #[test]
    fn determinism_including_error_messages() {
        let e = parse_transform(EXTRACT).unwrap();
        let v = Value::Str("no parens".into());
        let a = eval_scalar(&e, &v).unwrap_err();
        let b = eval_scalar(&e, &v).unwrap_err();
        assert_eq!(a, b);
    }

    #[test]
    fn pretty_round_trips() {
        for src in [
            EXTRACT,
            GROWTH,
            "lambda x: x",
            "lambda x: int(x.replace(',', ''))",
            "lambda x: -x + 2 * (x - 1)",
            "lambda x: x.split(' ')[-1] if not '(' in x else x",
            "lambda x: 'a' if x > 0 else 'b' if x < 0 else 'c'",
            "lambda x: x[0:3]",
            "lambda x: min(x, 3, 5) not in 'abc'",
        ] {
            let first = parse_transform(src).unwrap();
            let second = parse_transform(&first.pretty()).unwrap();
            assert_eq!(first.body, second.body, "round trip failed for {src}");
        }
    }
}
