//! AST and canonical printer for the SQL subset.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggKind {
    Sum,
    Count,
    Avg,
    Min,
    Max,
}

impl AggKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            AggKind::Sum => "SUM",
            AggKind::Count => "COUNT",
            AggKind::Avg => "AVG",
            AggKind::Min => "MIN",
            AggKind::Max => "MAX",
        }
    }

    pub fn from_word(word: &str) -> Option<AggKind> {
        match word.to_ascii_uppercase().as_str() {
            "SUM" => Some(AggKind::Sum),
            "COUNT" => Some(AggKind::Count),
            "AVG" => Some(AggKind::Avg),
            "MIN" => Some(AggKind::Min),
            "MAX" => Some(AggKind::Max),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AggTarget {
    Star,
    Column(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agg {
    pub kind: AggKind,
    pub target: AggTarget,
}

impl Agg {
    /// Output-column name for this aggregate: the target column verbatim,
    /// without identifier quoting.
    pub fn output_name(&self) -> String {
        match &self.target {
            AggTarget::Star => format!("{}(*)", self.kind.keyword()),
            AggTarget::Column(c) => format!("{}({})", self.kind.keyword(), c),
        }
    }
}

/// A user-defined mapping from existing columns to a new aliased column;
/// only valid inside an Analysis Sketch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Udf {
    /// The function name the sketch used, kept as a short description.
    pub description: String,
    pub inputs: Vec<String>,
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SelectItem {
    Column(String),
    Agg(Agg),
    Udf(Udf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SqlCmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl SqlCmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            SqlCmpOp::Eq => "=",
            SqlCmpOp::Ne => "!=",
            SqlCmpOp::Lt => "<",
            SqlCmpOp::Le => "<=",
            SqlCmpOp::Gt => ">",
            SqlCmpOp::Ge => ">=",
        }
    }
}

/// Predicates keep the column on the left-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Compare {
        column: String,
        op: SqlCmpOp,
        literal: Literal,
    },
    Like {
        column: String,
        pattern: String,
    },
    In {
        column: String,
        literals: Vec<Literal>,
    },
}

impl Predicate {
    pub fn column(&self) -> &str {
        match self {
            Predicate::Compare { column, .. }
            | Predicate::Like { column, .. }
            | Predicate::In { column, .. } => column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OrderKey {
    Column(String),
    Agg(Agg),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqlQuery {
    pub select_items: Vec<SelectItem>,
    pub table: String,
    pub predicates: Vec<Predicate>,
    pub group_by: Option<String>,
    pub order_by: Option<(OrderKey, Direction)>,
    pub limit: Option<usize>,
    /// Set when the query was parsed as an Analysis Sketch.
    pub sketch: bool,
}

impl SqlQuery {
    pub fn has_udf(&self) -> bool {
        self.select_items
            .iter()
            .any(|i| matches!(i, SelectItem::Udf(_)))
    }
}

const KEYWORDS: &[&str] = &[
    "SELECT", "FROM", "WHERE", "AND", "GROUP", "BY", "ORDER", "LIMIT", "LIKE", "IN", "AS", "ASC",
    "DESC", "SUM", "COUNT", "AVG", "MIN", "MAX",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS
        .iter()
        .any(|k| k.eq_ignore_ascii_case(word))
}

fn print_ident(name: &str, out: &mut String) {
    let bare = !name.is_empty()
        && !is_keyword(name)
        && name
            .chars()
            .next()
            .map(|c| c.is_ascii_alphabetic() || c == '_')
            .unwrap_or(false)
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if bare {
        out.push_str(name);
    } else {
        out.push('"');
        out.push_str(&name.replace('"', "\"\""));
        out.push('"');
    }
}

fn print_literal(lit: &Literal, out: &mut String) {
    match lit {
        Literal::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Literal::Float(f) => {
            if f.fract() == 0.0 && f.is_finite() {
                let _ = write!(out, "{f:.1}");
            } else {
                let _ = write!(out, "{f}");
            }
        }
        Literal::Str(s) => {
            out.push('\'');
            out.push_str(&s.replace('\'', "''"));
            out.push('\'');
        }
    }
}

fn print_agg(agg: &Agg, out: &mut String) {
    out.push_str(agg.kind.keyword());
    out.push('(');
    match &agg.target {
        AggTarget::Star => out.push('*'),
        AggTarget::Column(c) => print_ident(c, out),
    }
    out.push(')');
}

/// Canonical text: uppercase keywords, single spaces, single-quoted strings.
pub fn pretty_print(q: &SqlQuery) -> String {
    let mut out = String::from("SELECT ");
    for (i, item) in q.select_items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match item {
            SelectItem::Column(c) => print_ident(c, &mut out),
            SelectItem::Agg(agg) => print_agg(agg, &mut out),
            SelectItem::Udf(udf) => {
                print_ident(&udf.description, &mut out);
                out.push('(');
                for (j, input) in udf.inputs.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    print_ident(input, &mut out);
                }
                out.push_str(") AS ");
                print_ident(&udf.alias, &mut out);
            }
        }
    }
    out.push_str(" FROM ");
    print_ident(&q.table, &mut out);
    if !q.predicates.is_empty() {
        out.push_str(" WHERE ");
        for (i, p) in q.predicates.iter().enumerate() {
            if i > 0 {
                out.push_str(" AND ");
            }
            match p {
                Predicate::Compare {
                    column,
                    op,
                    literal,
                } => {
                    print_ident(column, &mut out);
                    let _ = write!(out, " {} ", op.symbol());
                    print_literal(literal, &mut out);
                }
                Predicate::Like { column, pattern } => {
                    print_ident(column, &mut out);
                    out.push_str(" LIKE ");
                    print_literal(&Literal::Str(pattern.clone()), &mut out);
                }
                Predicate::In { column, literals } => {
                    print_ident(column, &mut out);
                    out.push_str(" IN (");
                    for (j, lit) in literals.iter().enumerate() {
                        if j > 0 {
                            out.push_str(", ");
                        }
                        print_literal(lit, &mut out);
                    }
                    out.push(')');
                }
            }
        }
    }
    if let Some(g) = &q.group_by {
        out.push_str(" GROUP BY ");
        print_ident(g, &mut out);
    }
    if let Some((key, dir)) = &q.order_by {
        out.push_str(" ORDER BY ");
        match key {
            OrderKey::Column(c) => print_ident(c, &mut out),
            OrderKey::Agg(agg) => print_agg(agg, &mut out),
        }
        out.push_str(match dir {
            Direction::Asc => " ASC",
            Direction::Desc => " DESC",
        });
    }
    if let Some(n) = q.limit {
        let _ = write!(out, " LIMIT {n}");
    }
    out
}
