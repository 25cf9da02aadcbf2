//! In-memory evaluation of the SQL subset.
//!
//! Evaluation order: WHERE -> GROUP BY -> aggregate -> ORDER BY -> LIMIT ->
//! projection. The exact semantics, shared with the brute-force reference
//! evaluator used in tests:
//!
//! - Predicates on a Null cell are false (including LIKE and IN). For
//!   comparisons, if both the cell and the literal coerce to numbers
//!   (ints, floats, bools as 0/1, or strings that fully parse as a number
//!   after trimming), compare numerically; otherwise compare the rendered
//!   texts as case-sensitive strings.
//! - LIKE: `%` matches any run (including empty), `_` exactly one
//!   character, case-sensitive, over the rendered cell text.
//! - Grouping: keys are cell values; Null keys group together; Int/Float
//!   compare by numeric value; groups appear in first-occurrence order.
//! - Aggregates skip Nulls. COUNT(*) counts rows, COUNT(col) counts
//!   non-Null cells. SUM/AVG coerce cells numerically (as above); a
//!   non-coercible cell is a TypeClash. SUM over an empty group is Null
//!   and stays Int when every contribution is integral; AVG is always
//!   Float; MIN/MAX use the ordering comparator and return the winning
//!   cell unchanged.
//! - Ordering uses a total order: Null first, then numeric values
//!   (bools as 0/1), then strings bytewise. The sort is stable in both
//!   directions. Without GROUP BY, a query with any aggregate treats all
//!   filtered rows as one group and yields exactly one row; ordering by
//!   an aggregate in a plain column query is unsupported.
//! - Projection renames duplicate output columns with `_2`, `_3`, ...
//!   suffixes; aggregate outputs are named `KIND(column)` verbatim.

use std::cmp::Ordering;

use crate::table::{Column, Table, Value};

use super::ast::*;
use super::SqlError;

fn numeric(v: &Value) -> Option<f64> {
    match v {
        Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        Value::Int(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        Value::Str(s) => {
            let t = s.trim();
            if t.is_empty() {
                None
            } else {
                t.parse::<f64>().ok().filter(|f| f.is_finite())
            }
        }
        Value::Null => None,
    }
}

fn literal_numeric(lit: &Literal) -> Option<f64> {
    match lit {
        Literal::Int(i) => Some(*i as f64),
        Literal::Float(f) => Some(*f),
        Literal::Str(s) => {
            let t = s.trim();
            if t.is_empty() {
                None
            } else {
                t.parse::<f64>().ok().filter(|f| f.is_finite())
            }
        }
    }
}

fn literal_text(lit: &Literal) -> String {
    match lit {
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => f.to_string(),
        Literal::Str(s) => s.clone(),
    }
}

/// The comparison rule for predicates: numeric when both sides coerce,
/// else case-sensitive string comparison of rendered text.
pub fn compare_cell_literal(cell: &Value, lit: &Literal) -> Option<Ordering> {
    if cell.is_null() {
        return None;
    }
    if let (Some(a), Some(b)) = (numeric(cell), literal_numeric(lit)) {
        return a.partial_cmp(&b);
    }
    Some(cell.render().cmp(&literal_text(lit)))
}

/// `%` matches any run, `_` one character; case-sensitive.
pub fn like_match(pattern: &str, text: &str) -> bool {
    fn go(p: &[char], t: &[char]) -> bool {
        match p.first() {
            None => t.is_empty(),
            Some('%') => (0..=t.len()).any(|k| go(&p[1..], &t[k..])),
            Some('_') => !t.is_empty() && go(&p[1..], &t[1..]),
            Some(c) => t.first() == Some(c) && go(&p[1..], &t[1..]),
        }
    }
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    go(&p, &t)
}

pub fn eval_predicate(pred: &Predicate, cell: &Value) -> bool {
    if cell.is_null() {
        return false;
    }
    match pred {
        Predicate::Compare { op, literal, .. } => {
            let ord = match compare_cell_literal(cell, literal) {
                Some(o) => o,
                None => return false,
            };
            match op {
                SqlCmpOp::Eq => ord == Ordering::Equal,
                SqlCmpOp::Ne => ord != Ordering::Equal,
                SqlCmpOp::Lt => ord == Ordering::Less,
                SqlCmpOp::Le => ord != Ordering::Greater,
                SqlCmpOp::Gt => ord == Ordering::Greater,
                SqlCmpOp::Ge => ord != Ordering::Less,
            }
        }
        Predicate::Like { pattern, .. } => like_match(pattern, &cell.render()),
        Predicate::In { literals, .. } => literals
            .iter()
            .any(|lit| compare_cell_literal(cell, lit) == Some(Ordering::Equal)),
    }
}

/// Equality used for group keys: Nulls group together, numbers by value,
/// strings exactly.
pub fn group_key_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Null, Value::Null) => true,
        (Value::Str(x), Value::Str(y)) => x == y,
        _ => match (numeric_strict(a), numeric_strict(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

// Numeric family for grouping/ordering: no string coercion.
fn numeric_strict(v: &Value) -> Option<f64> {
    match v {
        Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        Value::Int(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

/// Total order for ORDER BY: Null < numeric < string.
pub fn order_cmp(a: &Value, b: &Value) -> Ordering {
    fn class(v: &Value) -> u8 {
        match v {
            Value::Null => 0,
            Value::Bool(_) | Value::Int(_) | Value::Float(_) => 1,
            Value::Str(_) => 2,
        }
    }
    match class(a).cmp(&class(b)) {
        Ordering::Equal => {}
        other => return other,
    }
    match (a, b) {
        (Value::Null, Value::Null) => Ordering::Equal,
        (Value::Str(x), Value::Str(y)) => x.cmp(y),
        _ => {
            let x = numeric_strict(a).expect("numeric class");
            let y = numeric_strict(b).expect("numeric class");
            x.partial_cmp(&y).unwrap_or(Ordering::Equal)
        }
    }
}

struct NumContribution {
    as_float: f64,
    as_int: Option<i64>,
}

fn coerce_aggregate(v: &Value, column: &str) -> Result<NumContribution, SqlError> {
    match v {
        Value::Bool(b) => Ok(NumContribution {
            as_float: *b as i64 as f64,
            as_int: Some(*b as i64),
        }),
        Value::Int(i) => Ok(NumContribution {
            as_float: *i as f64,
            as_int: Some(*i),
        }),
        Value::Float(f) => Ok(NumContribution {
            as_float: *f,
            as_int: None,
        }),
        Value::Str(s) => {
            let t = s.trim();
            if let Ok(i) = t.parse::<i64>() {
                return Ok(NumContribution {
                    as_float: i as f64,
                    as_int: Some(i),
                });
            }
            if let Ok(f) = t.parse::<f64>() {
                if f.is_finite() {
                    return Ok(NumContribution {
                        as_float: f,
                        as_int: None,
                    });
                }
            }
            Err(SqlError::TypeClash {
                column: column.to_string(),
                message: format!("cannot aggregate non-numeric value {s:?}"),
            })
        }
        Value::Null => unreachable!("nulls are skipped before coercion"),
    }
}

fn cells<'t>(t: &'t Table, column: &str) -> Result<&'t [Value], SqlError> {
    t.column(column)
        .map(|c| c.values.as_slice())
        .ok_or_else(|| SqlError::UnknownColumn {
            name: column.to_string(),
        })
}

fn compute_agg(agg: &Agg, t: &Table, rows: &[usize]) -> Result<Value, SqlError> {
    let column = match &agg.target {
        AggTarget::Star => {
            if agg.kind == AggKind::Count {
                return Ok(Value::Int(rows.len() as i64));
            }
            return Err(SqlError::UnsupportedQuery {
                message: format!("{}(*) is not supported", agg.kind.keyword()),
            });
        }
        AggTarget::Column(c) => c,
    };
    let values = cells(t, column)?;
    let non_null: Vec<&Value> = rows
        .iter()
        .map(|&r| &values[r])
        .filter(|v| !v.is_null())
        .collect();
    match agg.kind {
        AggKind::Count => Ok(Value::Int(non_null.len() as i64)),
        AggKind::Min | AggKind::Max => {
            let mut best: Option<&Value> = None;
            for v in non_null {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let ord = order_cmp(v, b);
                        let take = if agg.kind == AggKind::Min {
                            ord == Ordering::Less
                        } else {
                            ord == Ordering::Greater
                        };
                        if take {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best.cloned().unwrap_or(Value::Null))
        }
        AggKind::Sum => {
            if non_null.is_empty() {
                return Ok(Value::Null);
            }
            let mut int_sum: Option<i64> = Some(0);
            let mut float_sum = 0.0;
            for v in non_null {
                let c = coerce_aggregate(v, column)?;
                float_sum += c.as_float;
                int_sum = match (int_sum, c.as_int) {
                    (Some(acc), Some(i)) => acc.checked_add(i),
                    _ => None,
                };
            }
            Ok(match int_sum {
                Some(i) => Value::Int(i),
                None => Value::Float(float_sum),
            })
        }
        AggKind::Avg => {
            if non_null.is_empty() {
                return Ok(Value::Null);
            }
            let mut sum = 0.0;
            let n = non_null.len() as f64;
            for v in non_null {
                sum += coerce_aggregate(v, column)?.as_float;
            }
            Ok(Value::Float(sum / n))
        }
    }
}

fn dedup_names(names: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(names.len());
    for raw in names {
        if !out.iter().any(|n| *n == raw) {
            out.push(raw);
            continue;
        }
        let mut k = 2;
        loop {
            let candidate = format!("{raw}_{k}");
            if !out.iter().any(|n| *n == candidate) {
                out.push(candidate);
                break;
            }
            k += 1;
        }
    }
    out
}

/// Run an executable query over a table. Queries with UDF select items are
/// sketches, not executable.
pub fn execute(q: &SqlQuery, t: &Table) -> Result<Table, SqlError> {
    if q.has_udf() {
        return Err(SqlError::UnsupportedQuery {
            message: "query contains UDF select items; compile the sketch first".to_string(),
        });
    }
    // Validate referenced columns up front.
    for item in &q.select_items {
        match item {
            SelectItem::Column(c) => {
                cells(t, c)?;
            }
            SelectItem::Agg(a) => {
                if let AggTarget::Column(c) = &a.target {
                    cells(t, c)?;
                }
            }
            SelectItem::Udf(_) => unreachable!(),
        }
    }
    for p in &q.predicates {
        cells(t, p.column())?;
    }
    if let Some(g) = &q.group_by {
        cells(t, g)?;
    }
    if let Some((OrderKey::Column(c), _)) = &q.order_by {
        cells(t, c)?;
    }
    if let Some((OrderKey::Agg(a), _)) = &q.order_by {
        if let AggTarget::Column(c) = &a.target {
            cells(t, c)?;
        }
    }

    // WHERE
    let mut rows: Vec<usize> = Vec::new();
    'rows: for r in 0..t.n_rows() {
        for p in &q.predicates {
            let cell = &cells(t, p.column())?[r];
            if !eval_predicate(p, cell) {
                continue 'rows;
            }
        }
        rows.push(r);
    }

    let has_agg = q
        .select_items
        .iter()
        .any(|i| matches!(i, SelectItem::Agg(_)));

    if q.group_by.is_some() || has_agg {
        execute_aggregate(q, t, rows)
    } else {
        execute_plain(q, t, rows)
    }
}

fn execute_plain(q: &SqlQuery, t: &Table, mut rows: Vec<usize>) -> Result<Table, SqlError> {
    if let Some((key, dir)) = &q.order_by {
        let column = match key {
            OrderKey::Column(c) => c,
            OrderKey::Agg(_) => {
                return Err(SqlError::UnsupportedQuery {
                    message: "ORDER BY an aggregate requires GROUP BY or an aggregate select"
                        .to_string(),
                });
            }
        };
        let values = cells(t, column)?.to_vec();
        match dir {
            Direction::Asc => rows.sort_by(|&a, &b| order_cmp(&values[a], &values[b])),
            Direction::Desc => rows.sort_by(|&a, &b| order_cmp(&values[b], &values[a])),
        }
    }
    if let Some(n) = q.limit {
        rows.truncate(n);
    }
    let names: Vec<String> = q
        .select_items
        .iter()
        .map(|i| match i {
            SelectItem::Column(c) => c.clone(),
            _ => unreachable!("plain path has no aggregates"),
        })
        .collect();
    let mut columns = Vec::with_capacity(names.len());
    for (item, name) in q.select_items.iter().zip(dedup_names(names)) {
        let SelectItem::Column(c) = item else {
            unreachable!()
        };
        let values = cells(t, c)?;
        columns.push(Column {
            name,
            values: rows.iter().map(|&r| values[r].clone()).collect(),
        });
    }
    Ok(Table {
        name: t.name.clone(),
        columns,
    })
}

fn execute_aggregate(q: &SqlQuery, t: &Table, rows: Vec<usize>) -> Result<Table, SqlError> {
    // Build groups: with GROUP BY, keyed in first-occurrence order; without,
    // one group over all filtered rows.
    let groups: Vec<(Value, Vec<usize>)> = match &q.group_by {
        Some(g) => {
            let values = cells(t, g)?;
            let mut groups: Vec<(Value, Vec<usize>)> = Vec::new();
            for r in rows {
                let key = &values[r];
                match groups.iter_mut().find(|(k, _)| group_key_eq(k, key)) {
                    Some((_, members)) => members.push(r),
                    None => groups.push((key.clone(), vec![r])),
                }
            }
            groups
        }
        None => vec![(Value::Null, rows)],
    };

    // A select-column value for one group: the grouping key for the grouped
    // column, else the first row's cell (Null for an empty group).
    let column_value = |c: &str, key: &Value, members: &[usize]| -> Result<Value, SqlError> {
        if q.group_by.as_deref() == Some(c) {
            return Ok(key.clone());
        }
        let values = cells(t, c)?;
        Ok(members
            .first()
            .map(|&r| values[r].clone())
            .unwrap_or(Value::Null))
    };

    let mut order: Vec<usize> = (0..groups.len()).collect();
    if let Some((key, dir)) = &q.order_by {
        let mut sort_keys = Vec::with_capacity(groups.len());
        for (gkey, members) in &groups {
            let v = match key {
                OrderKey::Column(c) => column_value(c, gkey, members)?,
                OrderKey::Agg(a) => compute_agg(a, t, members)?,
            };
            sort_keys.push(v);
        }
        match dir {
            Direction::Asc => order.sort_by(|&a, &b| order_cmp(&sort_keys[a], &sort_keys[b])),
            Direction::Desc => order.sort_by(|&a, &b| order_cmp(&sort_keys[b], &sort_keys[a])),
        }
    }
    if let Some(n) = q.limit {
        order.truncate(n);
    }

    let names: Vec<String> = q
        .select_items
        .iter()
        .map(|i| match i {
            SelectItem::Column(c) => c.clone(),
            SelectItem::Agg(a) => a.output_name(),
            SelectItem::Udf(_) => unreachable!(),
        })
        .collect();
    let mut columns: Vec<Column> = dedup_names(names)
        .into_iter()
        .map(|name| Column {
            name,
            values: Vec::with_capacity(order.len()),
        })
        .collect();
    for &g in &order {
        let (gkey, members) = &groups[g];
        for (slot, item) in columns.iter_mut().zip(&q.select_items) {
            let v = match item {
                SelectItem::Column(c) => column_value(c, gkey, members)?,
                SelectItem::Agg(a) => compute_agg(a, t, members)?,
                SelectItem::Udf(_) => unreachable!(),
            };
            slot.values.push(v);
        }
    }
    Ok(Table {
        name: t.name.clone(),
        columns,
    })
}
