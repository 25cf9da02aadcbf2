//! One grammar, two uses: the Analyzer's executable SQL queries and the
//! Planner's Analysis Sketch (the sketch grammar is the SQL grammar plus
//! UDF select items like `f(Cyclist) AS Country`).

mod ast;
mod exec;
mod parser;

pub use ast::{
    pretty_print, Agg, AggKind, AggTarget, Direction, Literal, OrderKey, Predicate, SelectItem,
    SqlCmpOp, SqlQuery, Udf,
};
pub use exec::{compare_cell_literal, eval_predicate, execute, group_key_eq, like_match, order_cmp};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SqlError {
    #[error("parse error at byte {position}: expected {expected}")]
    Parse { position: usize, expected: String },
    #[error("unknown column {name:?}")]
    UnknownColumn { name: String },
    #[error("unsupported query: {message}")]
    UnsupportedQuery { message: String },
    #[error("type clash in column {column:?}: {message}")]
    TypeClash { column: String, message: String },
}

/// Parse an executable query. Keywords are case-insensitive; identifiers
/// may be double-quoted or backtick-quoted to allow spaces.
pub fn parse_sql(src: &str) -> Result<SqlQuery, SqlError> {
    parser::parse(src, false)
}

/// Parse an Analysis Sketch: as [`parse_sql`], plus UDF select items.
pub fn parse_sketch(src: &str) -> Result<SqlQuery, SqlError> {
    parser::parse(src, true)
}

/// One examinable element of an Analysis Sketch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SketchClause {
    Udf(Udf),
    Agg(Agg),
    Pred(Predicate),
    Structural(Structural),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Structural {
    SelectColumn(String),
    GroupBy(String),
    OrderBy(OrderKey, Direction),
    Limit(usize),
}

impl SketchClause {
    /// Text form shown to the model when a clause is examined.
    pub fn describe(&self) -> String {
        match self {
            SketchClause::Udf(udf) => {
                format!(
                    "{}({}) AS {}",
                    udf.description,
                    udf.inputs.join(", "),
                    udf.alias
                )
            }
            SketchClause::Agg(agg) => agg.output_name(),
            SketchClause::Pred(p) => {
                let mut out = String::new();
                match p {
                    Predicate::Compare {
                        column,
                        op,
                        literal,
                    } => {
                        out.push_str(column);
                        out.push(' ');
                        out.push_str(op.symbol());
                        out.push(' ');
                        out.push_str(&render_literal(literal));
                    }
                    Predicate::Like { column, pattern } => {
                        out.push_str(&format!("{column} LIKE '{pattern}'"));
                    }
                    Predicate::In { column, literals } => {
                        let items: Vec<String> = literals.iter().map(render_literal).collect();
                        out.push_str(&format!("{column} IN ({})", items.join(", ")));
                    }
                }
                out
            }
            SketchClause::Structural(s) => match s {
                Structural::SelectColumn(c) => format!("SELECT {c}"),
                Structural::GroupBy(c) => format!("GROUP BY {c}"),
                Structural::OrderBy(key, dir) => {
                    let key = match key {
                        OrderKey::Column(c) => c.clone(),
                        OrderKey::Agg(a) => a.output_name(),
                    };
                    let dir = match dir {
                        Direction::Asc => "ASC",
                        Direction::Desc => "DESC",
                    };
                    format!("ORDER BY {key} {dir}")
                }
                Structural::Limit(n) => format!("LIMIT {n}"),
            },
        }
    }
}

fn render_literal(lit: &Literal) -> String {
    match lit {
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => f.to_string(),
        Literal::Str(s) => format!("'{s}'"),
    }
}

/// Decompose a sketch into its examinable clauses: all UDF clauses in
/// select order, then aggregate clauses, then predicates in WHERE order,
/// then structural clauses. Every syntactic element appears exactly once.
pub fn clauses(s: &SqlQuery) -> Vec<SketchClause> {
    let mut out = Vec::new();
    for item in &s.select_items {
        if let SelectItem::Udf(udf) = item {
            out.push(SketchClause::Udf(udf.clone()));
        }
    }
    for item in &s.select_items {
        if let SelectItem::Agg(agg) = item {
            out.push(SketchClause::Agg(agg.clone()));
        }
    }
    for p in &s.predicates {
        out.push(SketchClause::Pred(p.clone()));
    }
    for item in &s.select_items {
        if let SelectItem::Column(c) = item {
            out.push(SketchClause::Structural(Structural::SelectColumn(
                c.clone(),
            )));
        }
    }
    if let Some(g) = &s.group_by {
        out.push(SketchClause::Structural(Structural::GroupBy(g.clone())));
    }
    if let Some((key, dir)) = &s.order_by {
        out.push(SketchClause::Structural(Structural::OrderBy(
            key.clone(),
            *dir,
        )));
    }
    if let Some(n) = s.limit {
        out.push(SketchClause::Structural(Structural::Limit(n)));
    }
    out
}

/// A column mentioned by a query; `derived` marks UDF aliases, which only
/// exist after the corresponding Augment runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRef {
    pub name: String,
    pub derived: bool,
}

/// Every base column named anywhere in the query, plus UDF aliases marked
/// as derived; duplicates removed, first-mention (reading) order.
pub fn referenced_columns(q: &SqlQuery) -> Vec<ColumnRef> {
    let mut out: Vec<ColumnRef> = Vec::new();
    let mut push = |name: &str, derived: bool| {
        if !out.iter().any(|r| r.name == name) {
            out.push(ColumnRef {
                name: name.to_string(),
                derived,
            });
        }
    };
    for item in &q.select_items {
        match item {
            SelectItem::Column(c) => push(c, false),
            SelectItem::Agg(agg) => {
                if let AggTarget::Column(c) = &agg.target {
                    push(c, false);
                }
            }
            SelectItem::Udf(udf) => {
                for input in &udf.inputs {
                    push(input, false);
                }
                push(&udf.alias, true);
            }
        }
    }
    for p in &q.predicates {
        push(p.column(), false);
    }
    if let Some(g) = &q.group_by {
        push(g, false);
    }
    if let Some((key, _)) = &q.order_by {
        match key {
            OrderKey::Column(c) => push(c, false),
            OrderKey::Agg(agg) => {
                if let AggTarget::Column(c) = &agg.target {
                    push(c, false);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{from_rows, Value};

    fn strs(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    const FIG5_SKETCH: &str = "SELECT f(Cyclist) AS Country, SUM(Medal) FROM w WHERE Date LIKE '02-%' GROUP BY Country ORDER BY SUM(Medal) DESC LIMIT 1";

    #[test]
    fn parses_full_query() {
        let q = parse_sql(
            "SELECT Country, SUM(Medal) FROM w WHERE Date LIKE '02-%' GROUP BY Country ORDER BY SUM(Medal) DESC LIMIT 1",
        )
        .unwrap();
        assert_eq!(q.select_items.len(), 2);
        assert_eq!(q.table, "w");
        assert_eq!(q.predicates.len(), 1);
        assert_eq!(q.group_by.as_deref(), Some("Country"));
        assert!(matches!(
            q.order_by,
            Some((OrderKey::Agg(_), Direction::Desc))
        ));
        assert_eq!(q.limit, Some(1));
    }

    #[test]
    fn parses_minimal_query() {
        let q = parse_sql("SELECT A FROM w").unwrap();
        assert_eq!(q.select_items, vec![SelectItem::Column("A".to_string())]);
        assert!(q.predicates.is_empty());
    }

    #[test]
    fn parses_numeric_predicate() {
        let q = parse_sql("SELECT month FROM w WHERE sell > 20").unwrap();
        assert_eq!(
            q.predicates,
            vec![Predicate::Compare {
                column: "sell".to_string(),
                op: SqlCmpOp::Gt,
                literal: Literal::Int(20),
            }]
        );
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let a = parse_sql("select A from w where B = 1 order by A asc").unwrap();
        let b = parse_sql("SELECT A FROM w WHERE B = 1 ORDER BY A ASC").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sketch_accepts_udf_items() {
        let s = parse_sketch(FIG5_SKETCH).unwrap();
        assert!(s.sketch);
        match &s.select_items[0] {
            SelectItem::Udf(udf) => {
                assert_eq!(udf.description, "f");
                assert_eq!(udf.inputs, vec!["Cyclist".to_string()]);
                assert_eq!(udf.alias, "Country");
            }
            other => panic!("expected udf, got {other:?}"),
        }
    }

    #[test]
    fn plain_sql_rejects_udf_items() {
        assert!(matches!(
            parse_sql("SELECT f(Cyclist) AS Country FROM w"),
            Err(SqlError::Parse { .. })
        ));
    }

    #[test]
    fn udf_requires_at_least_one_input() {
        assert!(matches!(
            parse_sketch("SELECT f() AS X FROM w"),
            Err(SqlError::Parse { .. })
        ));
    }

    #[test]
    fn sketch_without_udf_matches_sql_parse() {
        let src = "SELECT A FROM w WHERE B = 1";
        let mut s = parse_sketch(src).unwrap();
        let q = parse_sql(src).unwrap();
        s.sketch = false;
        assert_eq!(s, q);
    }

    #[test]
    fn clause_order_matches_examination_order() {
        let s = parse_sketch(FIG5_SKETCH).unwrap();
        let cs = clauses(&s);
        assert!(matches!(cs[0], SketchClause::Udf(_)));
        assert!(matches!(cs[1], SketchClause::Agg(_)));
        assert!(matches!(cs[2], SketchClause::Pred(_)));
        assert!(cs[3..]
            .iter()
            .all(|c| matches!(c, SketchClause::Structural(_))));
        assert_eq!(cs.len(), 6); // udf, agg, pred, group, order, limit
    }

    #[test]
    fn single_structural_clause_for_plain_select() {
        let s = parse_sketch("SELECT A FROM w").unwrap();
        let cs = clauses(&s);
        assert_eq!(cs.len(), 1);
        assert!(matches!(cs[0], SketchClause::Structural(_)));
    }

    #[test]
    fn two_predicates_keep_textual_order() {
        let s = parse_sketch("SELECT A FROM w WHERE B = 1 AND C = 2").unwrap();
        let cs = clauses(&s);
        match (&cs[0], &cs[1]) {
            (SketchClause::Pred(p1), SketchClause::Pred(p2)) => {
                assert_eq!(p1.column(), "B");
                assert_eq!(p2.column(), "C");
            }
            other => panic!("unexpected clauses {other:?}"),
        }
    }

    #[test]
    fn referenced_columns_marks_derived_aliases() {
        let s = parse_sketch(FIG5_SKETCH).unwrap();
        let refs = referenced_columns(&s);
        let base: Vec<&str> = refs
            .iter()
            .filter(|r| !r.derived)
            .map(|r| r.name.as_str())
            .collect();
        let derived: Vec<&str> = refs
            .iter()
            .filter(|r| r.derived)
            .map(|r| r.name.as_str())
            .collect();
        assert_eq!(base, vec!["Cyclist", "Medal", "Date"]);
        assert_eq!(derived, vec!["Country"]);
    }

    #[test]
    fn referenced_columns_includes_order_by() {
        let q = parse_sql("SELECT A FROM w ORDER BY B ASC LIMIT 2").unwrap();
        let refs = referenced_columns(&q);
        let names: Vec<&str> = refs.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, vec!["A", "B"]);
    }

    #[test]
    fn executes_worked_medal_query() {
        let t = from_rows(
            &strs(&["Country", "Medal"]),
            &[strs(&["ESP", "2"]), strs(&["ITA", "1"]), strs(&["ITA", "3"])],
            true,
        )
        .unwrap();
        let q = parse_sql(
            "SELECT Country, SUM(Medal) FROM w GROUP BY Country ORDER BY SUM(Medal) DESC LIMIT 1",
        )
        .unwrap();
        let out = execute(&q, &t).unwrap();
        assert_eq!(out.n_rows(), 1);
        assert_eq!(out.cell("Country", 0), Some(&Value::Str("ITA".to_string())));
        assert_eq!(out.cell("SUM(Medal)", 0), Some(&Value::Int(4)));
    }

    #[test]
    fn count_star_on_empty_table() {
        let t = from_rows(&strs(&["A"]), &[], true).unwrap();
        let q = parse_sql("SELECT COUNT(*) FROM w").unwrap();
        let out = execute(&q, &t).unwrap();
        assert_eq!(out.n_rows(), 1);
        assert_eq!(out.cell("COUNT(*)", 0), Some(&Value::Int(0)));
    }

    #[test]
    fn like_filters_dates() {
        let t = from_rows(
            &strs(&["Date"]),
            &[strs(&["02-28"]), strs(&["10-19"])],
            true,
        )
        .unwrap();
        let q = parse_sql("SELECT Date FROM w WHERE Date LIKE '02-%'").unwrap();
        let out = execute(&q, &t).unwrap();
        assert_eq!(out.n_rows(), 1);
        assert_eq!(out.cell("Date", 0), Some(&Value::Str("02-28".to_string())));
    }

    #[test]
    fn like_semantics() {
        assert!(like_match("02-%", "02-28"));
        assert!(like_match("%", ""));
        assert!(like_match("a_c", "abc"));
        assert!(!like_match("a_c", "ac"));
        assert!(!like_match("A%", "abc")); // case-sensitive
        assert!(like_match("%ITA%", "Dav. ITA"));
    }

    #[test]
    fn predicates_on_null_are_false() {
        let pred = Predicate::Compare {
            column: "A".to_string(),
            op: SqlCmpOp::Ne,
            literal: Literal::Int(1),
        };
        assert!(!eval_predicate(&pred, &Value::Null));
        let like = Predicate::Like {
            column: "A".to_string(),
            pattern: "%".to_string(),
        };
        assert!(!eval_predicate(&like, &Value::Null));
    }

    #[test]
    fn numeric_coercion_in_comparisons() {
        let pred = Predicate::Compare {
            column: "A".to_string(),
            op: SqlCmpOp::Eq,
            literal: Literal::Int(2),
        };
        assert!(eval_predicate(&pred, &Value::Str("02".to_string())));
        assert!(eval_predicate(&pred, &Value::Float(2.0)));
        assert!(!eval_predicate(&pred, &Value::Str("2x".to_string())));
    }

    #[test]
    fn aggregates_skip_nulls() {
        let t = crate::table::Table {
            name: "w".to_string(),
            columns: vec![crate::table::Column {
                name: "A".to_string(),
                values: vec![Value::Int(1), Value::Null, Value::Int(3)],
            }],
        };
        let q = parse_sql("SELECT SUM(A), COUNT(A), COUNT(*), AVG(A) FROM w").unwrap();
        let out = execute(&q, &t).unwrap();
        assert_eq!(out.cell("SUM(A)", 0), Some(&Value::Int(4)));
        assert_eq!(out.cell("COUNT(A)", 0), Some(&Value::Int(2)));
        assert_eq!(out.cell("COUNT(*)", 0), Some(&Value::Int(3)));
        assert_eq!(out.cell("AVG(A)", 0), Some(&Value::Float(2.0)));
    }

    #[test]
    fn sum_over_empty_group_is_null() {
        let t = from_rows(&strs(&["A"]), &[], true).unwrap();
        let q = parse_sql("SELECT SUM(A) FROM w").unwrap();
        let out = execute(&q, &t).unwrap();
        assert_eq!(out.cell("SUM(A)", 0), Some(&Value::Null));
    }

    #[test]
    fn order_by_is_stable() {
        let t = from_rows(
            &strs(&["K", "V"]),
            &[
                strs(&["1", "a"]),
                strs(&["1", "b"]),
                strs(&["0", "c"]),
                strs(&["1", "d"]),
            ],
            true,
        )
        .unwrap();
        let q = parse_sql("SELECT V FROM w ORDER BY K ASC").unwrap();
        let out = execute(&q, &t).unwrap();
        let got: Vec<String> = out.column("V").unwrap().values.iter().map(|v| v.render()).collect();
        assert_eq!(got, vec!["c", "a", "b", "d"]);
        let q = parse_sql("SELECT V FROM w ORDER BY K DESC").unwrap();
        let out = execute(&q, &t).unwrap();
        let got: Vec<String> = out.column("V").unwrap().values.iter().map(|v| v.render()).collect();
        assert_eq!(got, vec!["a", "b", "d", "c"]);
    }

    #[test]
    fn executing_a_sketch_is_unsupported() {
        let s = parse_sketch(FIG5_SKETCH).unwrap();
        let t = from_rows(&strs(&["Cyclist"]), &[], true).unwrap();
        assert!(matches!(
            execute(&s, &t),
            Err(SqlError::UnsupportedQuery { .. })
        ));
    }

    #[test]
    fn unknown_column_is_reported() {
        let t = from_rows(&strs(&["A"]), &[], true).unwrap();
        let q = parse_sql("SELECT B FROM w").unwrap();
        assert_eq!(
            execute(&q, &t),
            Err(SqlError::UnknownColumn {
                name: "B".to_string()
            })
        );
    }

    #[test]
    fn pretty_print_round_trips() {
        for src in [
            "SELECT A FROM w",
            "SELECT month FROM w WHERE sell > 20",
            "SELECT Country, SUM(Medal) FROM w WHERE Date LIKE '02-%' GROUP BY Country ORDER BY SUM(Medal) DESC LIMIT 1",
            "SELECT COUNT(*) FROM w WHERE A IN (1, 2.0, 'x')",
            "SELECT \"my col\" FROM w WHERE \"my col\" != -3",
            "SELECT A FROM w ORDER BY B ASC LIMIT 0",
        ] {
            let q = parse_sql(src).unwrap();
            let printed = pretty_print(&q);
            let back = parse_sql(&printed).unwrap();
            assert_eq!(q, back, "round trip failed: {src} -> {printed}");
        }
        let s = parse_sketch(FIG5_SKETCH).unwrap();
        let back = parse_sketch(&pretty_print(&s)).unwrap();
        assert_eq!(s, back);
    }
}
