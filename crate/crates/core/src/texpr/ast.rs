//! AST for the transform expression language.

use std::fmt::Write;

/// Byte offset of a node in the source text. Positions are diagnostics
/// only; two ASTs that differ solely in positions compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos(pub usize);

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Int(i64),
    Float(f64),
    Str(String),
    True,
    False,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Lit),
    Ident {
        name: String,
        pos: Pos,
    },
    /// Unary minus.
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Compare {
        op: CmpOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    And {
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Or {
        left: Box<Expr>,
        right: Box<Expr>,
    },
    /// `then if cond else otherwise`
    Cond {
        then: Box<Expr>,
        cond: Box<Expr>,
        otherwise: Box<Expr>,
    },
    MethodCall {
        target: Box<Expr>,
        name: String,
        args: Vec<Expr>,
        pos: Pos,
    },
    /// Builtin function call, e.g. `int(x)`.
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
        pos: Pos,
    },
    Index {
        target: Box<Expr>,
        index: Box<Expr>,
    },
    /// `target[start:end]`; a missing end means "to the end".
    Slice {
        target: Box<Expr>,
        start: Box<Expr>,
        end: Option<Box<Expr>>,
    },
}

// Precedence levels used by the pretty printer; higher binds tighter.
const P_COND: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_NOT: u8 = 4;
const P_CMP: u8 = 5;
const P_ADD: u8 = 6;
const P_MUL: u8 = 7;
const P_UNARY: u8 = 8;
const P_POSTFIX: u8 = 9;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Cond { .. } => P_COND,
        Expr::Or { .. } => P_OR,
        Expr::And { .. } => P_AND,
        Expr::Not(_) => P_NOT,
        Expr::Compare { .. } => P_CMP,
        Expr::Binary { op, .. } => match op {
            BinOp::Add | BinOp::Sub => P_ADD,
            _ => P_MUL,
        },
        Expr::Neg(_) => P_UNARY,
        Expr::MethodCall { .. } | Expr::Call { .. } | Expr::Index { .. } | Expr::Slice { .. } => {
            P_POSTFIX
        }
        Expr::Literal(_) | Expr::Ident { .. } => 10,
    }
}

pub fn print_string_literal(s: &str, out: &mut String) {
    // Prefer the raw form for regex-like content without quotes to escape.
    if s.contains('\\') && !s.contains('\'') {
        out.push_str("r'");
        out.push_str(s);
        out.push('\'');
        return;
    }
    out.push('\'');
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('\'');
}

pub fn print_expr(e: &Expr, min_prec: u8, out: &mut String) {
    let prec = precedence(e);
    let needs_parens = prec < min_prec;
    if needs_parens {
        out.push('(');
    }
    match e {
        Expr::Literal(lit) => match lit {
            Lit::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Lit::Float(f) => {
                if f.fract() == 0.0 && f.is_finite() {
                    let _ = write!(out, "{f:.1}");
                } else {
                    let _ = write!(out, "{f}");
                }
            }
            Lit::Str(s) => print_string_literal(s, out),
            Lit::True => out.push_str("True"),
            Lit::False => out.push_str("False"),
            Lit::None => out.push_str("None"),
        },
        Expr::Ident { name, .. } => out.push_str(name),
        Expr::Neg(inner) => {
            out.push('-');
            print_expr(inner, P_UNARY, out);
        }
        Expr::Not(inner) => {
            out.push_str("not ");
            print_expr(inner, P_NOT, out);
        }
        Expr::Binary { op, left, right } => {
            let prec = precedence(e);
            print_expr(left, prec, out);
            let _ = write!(out, " {} ", op.symbol());
            print_expr(right, prec + 1, out);
        }
        Expr::Compare { op, left, right } => {
            print_expr(left, P_CMP + 1, out);
            let _ = write!(out, " {} ", op.symbol());
            print_expr(right, P_CMP + 1, out);
        }
        Expr::And { left, right } => {
            print_expr(left, P_AND, out);
            out.push_str(" and ");
            print_expr(right, P_AND + 1, out);
        }
        Expr::Or { left, right } => {
            print_expr(left, P_OR, out);
            out.push_str(" or ");
            print_expr(right, P_OR + 1, out);
        }
        Expr::Cond {
            then,
            cond,
            otherwise,
        } => {
            print_expr(then, P_COND + 1, out);
            out.push_str(" if ");
            print_expr(cond, P_COND + 1, out);
            out.push_str(" else ");
            print_expr(otherwise, P_COND, out);
        }
        Expr::MethodCall {
            target, name, args, ..
        } => {
            print_expr(target, P_POSTFIX, out);
            let _ = write!(out, ".{name}(");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(a, 0, out);
            }
            out.push(')');
        }
        Expr::Call { callee, args, .. } => {
            print_expr(callee, P_POSTFIX, out);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(a, 0, out);
            }
            out.push(')');
        }
        Expr::Index { target, index } => {
            print_expr(target, P_POSTFIX, out);
            out.push('[');
            print_expr(index, 0, out);
            out.push(']');
        }
        Expr::Slice { target, start, end } => {
            print_expr(target, P_POSTFIX, out);
            out.push('[');
            print_expr(start, 0, out);
            out.push(':');
            if let Some(end) = end {
                print_expr(end, 0, out);
            }
            out.push(']');
        }
    }
    if needs_parens {
        out.push(')');
    }
}
