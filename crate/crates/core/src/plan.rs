//! Logical operation vocabulary, the physical function-pool registry with
//! typed signatures, and argument pre-validation (grammar pre-diagnosis).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sql::SqlQuery;
use crate::table::Table;
use crate::texpr::{self, Mode, TransformExpr};

/// A high-level data preparation operation suggested by the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LogicalOp {
    Augment {
        description: String,
        source_columns: Vec<String>,
        new_column: String,
    },
    Normalize {
        description: String,
        column: String,
    },
    Filter {
        columns: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    Augment,
    Normalize,
    Filter,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpKind::Augment => f.write_str("augment"),
            OpKind::Normalize => f.write_str("normalize"),
            OpKind::Filter => f.write_str("filter"),
        }
    }
}

impl LogicalOp {
    pub fn kind(&self) -> OpKind {
        match self {
            LogicalOp::Augment { .. } => OpKind::Augment,
            LogicalOp::Normalize { .. } => OpKind::Normalize,
            LogicalOp::Filter { .. } => OpKind::Filter,
        }
    }

    /// One-line rendering used in prompts and traces.
    pub fn describe(&self) -> String {
        match self {
            LogicalOp::Augment {
                description,
                source_columns,
                new_column,
            } => format!(
                "Augment(\"{description}\", [{}]) -> {new_column}",
                source_columns.join(", ")
            ),
            LogicalOp::Normalize {
                description,
                column,
            } => format!("Normalize(\"{description}\", {column})"),
            LogicalOp::Filter { columns } => format!("Filter([{}])", columns.join(", ")),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid logical op: {message}")]
    InvalidOp { message: String },
    #[error("plan has {count} Filter ops; at most one is allowed, in last position")]
    FilterPlacement { count: usize },
}

/// An ordered sequence of logical ops; at most one Filter, and if present it
/// is last so earlier ops may reference any original or augmented column.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LogicalPlan {
    pub ops: Vec<LogicalOp>,
    /// The Analysis Sketch the plan was derived from, when planned via
    /// Chain-of-Clauses.
    pub sketch: Option<SqlQuery>,
}

impl LogicalPlan {
    pub fn new(ops: Vec<LogicalOp>, sketch: Option<SqlQuery>) -> Result<LogicalPlan, PlanError> {
        let plan = LogicalPlan { ops, sketch };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        for op in &self.ops {
            match op {
                LogicalOp::Augment { new_column, .. } if new_column.is_empty() => {
                    return Err(PlanError::InvalidOp {
                        message: "Augment requires a new column name".to_string(),
                    });
                }
                LogicalOp::Normalize { column, .. } if column.is_empty() => {
                    return Err(PlanError::InvalidOp {
                        message: "Normalize requires a column".to_string(),
                    });
                }
                LogicalOp::Filter { columns } if columns.is_empty() => {
                    return Err(PlanError::InvalidOp {
                        message: "Filter requires at least one column".to_string(),
                    });
                }
                _ => {}
            }
        }
        let filters = self
            .ops
            .iter()
            .filter(|o| matches!(o, LogicalOp::Filter { .. }))
            .count();
        let filter_last = self
            .ops
            .last()
            .map(|o| matches!(o, LogicalOp::Filter { .. }))
            .unwrap_or(false);
        if filters > 1 || (filters == 1 && !filter_last) {
            return Err(PlanError::FilterPlacement { count: filters });
        }
        Ok(())
    }
}

/// Which function pool a pool function belongs to. The two `infer` entries
/// are distinguished by this tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pool {
    Aug,
    Norm,
    Filter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    ColumnName,
    ColumnList,
    Transform(Mode),
    FormatString,
    TransDict,
}

impl ArgKind {
    fn describe(&self) -> &'static str {
        match self {
            ArgKind::ColumnName => "a column name",
            ArgKind::ColumnList => "a non-empty list of column names",
            ArgKind::Transform(Mode::Scalar) => "a lambda over a single cell value",
            ArgKind::Transform(Mode::Row) => "a lambda over a row dictionary",
            ArgKind::FormatString => "a datetime format string",
            ArgKind::TransDict => "a replacement dictionary of strings",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ArgSpec {
    pub name: &'static str,
    pub kind: ArgKind,
}

#[derive(Debug, Clone, Copy)]
pub struct PoolFunction {
    pub pool: Pool,
    pub name: &'static str,
    pub signature: &'static [ArgSpec],
    /// Short usage text shown to the model when selecting a function.
    pub usage: &'static str,
}

impl PoolFunction {
    pub fn arg(&self, name: &str) -> Option<&'static ArgSpec> {
        self.signature.iter().find(|a| a.name == name)
    }

    /// `name(arg1, arg2)` rendering for prompts.
    pub fn signature_line(&self) -> String {
        let args: Vec<&str> = self.signature.iter().map(|a| a.name).collect();
        format!("{}({})", self.name, args.join(", "))
    }
}

pub const AUG_POOL: &[PoolFunction] = &[
    PoolFunction {
        pool: Pool::Aug,
        name: "extract",
        signature: &[
            ArgSpec { name: "column", kind: ArgKind::ColumnName },
            ArgSpec { name: "func", kind: ArgKind::Transform(Mode::Scalar) },
        ],
        usage: "build the new column by extracting a substring from each cell of a source column; func is a lambda over one cell, e.g. lambda x: re.search(r'pattern', x).group(1)",
    },
    PoolFunction {
        pool: Pool::Aug,
        name: "calculate",
        signature: &[
            ArgSpec { name: "columns", kind: ArgKind::ColumnList },
            ArgSpec { name: "func", kind: ArgKind::Transform(Mode::Row) },
        ],
        usage: "build the new column by arithmetic over existing columns; func is a lambda over a row dictionary, e.g. lambda x: (x['B']-x['A'])/x['A']",
    },
    PoolFunction {
        pool: Pool::Aug,
        name: "map_to_boolean",
        signature: &[
            ArgSpec { name: "columns", kind: ArgKind::ColumnList },
            ArgSpec { name: "func", kind: ArgKind::Transform(Mode::Row) },
        ],
        usage: "build a boolean column from existing columns; func is a lambda over a row dictionary returning True or False",
    },
    PoolFunction {
        pool: Pool::Aug,
        name: "concatenate",
        signature: &[
            ArgSpec { name: "columns", kind: ArgKind::ColumnList },
            ArgSpec { name: "func", kind: ArgKind::Transform(Mode::Row) },
        ],
        usage: "build a text column by joining existing columns; func is a lambda over a row dictionary returning a string",
    },
    PoolFunction {
        pool: Pool::Aug,
        name: "infer",
        signature: &[
            ArgSpec { name: "source_columns", kind: ArgKind::ColumnList },
            ArgSpec { name: "target_column", kind: ArgKind::ColumnName },
        ],
        usage: "fill the new column by model inference from the source columns, for values no deterministic function can produce",
    },
];

pub const NORM_POOL: &[PoolFunction] = &[
    PoolFunction {
        pool: Pool::Norm,
        name: "to_numerical",
        signature: &[
            ArgSpec { name: "column", kind: ArgKind::ColumnName },
            ArgSpec { name: "func", kind: ArgKind::Transform(Mode::Scalar) },
        ],
        usage: "convert a column to int or float; func is a lambda over one cell, e.g. lambda x: int(x.replace(',', ''))",
    },
    PoolFunction {
        pool: Pool::Norm,
        name: "format_datetime",
        signature: &[
            ArgSpec { name: "column", kind: ArgKind::ColumnName },
            ArgSpec { name: "format", kind: ArgKind::FormatString },
        ],
        usage: "rewrite date or time values into one format, e.g. format '%m-%d'; directives: %Y %y %m %d %b %B %H %M",
    },
    PoolFunction {
        pool: Pool::Norm,
        name: "clean_string",
        signature: &[
            ArgSpec { name: "column", kind: ArgKind::ColumnName },
            ArgSpec { name: "trans_dict", kind: ArgKind::TransDict },
        ],
        usage: "replace substrings per a dictionary, e.g. trans_dict {\"Italia\": \"ITA\"}; longest keys win, replacements do not overlap",
    },
    PoolFunction {
        pool: Pool::Norm,
        name: "infer",
        signature: &[ArgSpec { name: "column", kind: ArgKind::ColumnName }],
        usage: "normalize leftover cells by model inference, learning from the cells that already normalized cleanly",
    },
];

pub const FILTER_POOL: &[PoolFunction] = &[PoolFunction {
    pool: Pool::Filter,
    name: "filter_columns",
    signature: &[ArgSpec { name: "rel_columns", kind: ArgKind::ColumnList }],
    usage: "keep only the question-relevant columns, in the order listed",
}];

/// The function pool a logical op selects from.
pub fn pool_for(op: &LogicalOp) -> &'static [PoolFunction] {
    match op.kind() {
        OpKind::Augment => AUG_POOL,
        OpKind::Normalize => NORM_POOL,
        OpKind::Filter => FILTER_POOL,
    }
}

pub fn pool_tag(kind: OpKind) -> Pool {
    match kind {
        OpKind::Augment => Pool::Aug,
        OpKind::Normalize => Pool::Norm,
        OpKind::Filter => Pool::Filter,
    }
}

pub fn lookup(pool: &'static [PoolFunction], name: &str) -> Option<&'static PoolFunction> {
    pool.iter().find(|f| f.name == name)
}

/// The operation-type specification text given to the direct-prompting
/// planner, one per op kind.
#[derive(Debug, Clone, PartialEq)]
pub struct OpTypeSpec {
    pub op_kind: OpKind,
    pub purpose_text: &'static str,
}

pub fn op_type_specs() -> Vec<OpTypeSpec> {
    vec![
        OpTypeSpec {
            op_kind: OpKind::Augment,
            purpose_text: "An Augment operation adds one new column derived from existing columns when the question needs information that is not stored in its own column (extraction, arithmetic, inference).",
        },
        OpTypeSpec {
            op_kind: OpKind::Normalize,
            purpose_text: "A Normalize operation rewrites one column's values into a consistent type or format (numeric casts, date formats, spelling cleanups) so programs can compare and aggregate them.",
        },
        OpTypeSpec {
            op_kind: OpKind::Filter,
            purpose_text: "A Filter operation keeps only the columns relevant to the question and drops the rest.",
        },
    ]
}

/// A concrete argument value carried by a physical op. `Raw` holds values
/// that failed typing and exists so pre-diagnosis can report them.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Text(String),
    List(Vec<String>),
    Transform { src: String, expr: TransformExpr },
    Format(String),
    Dict(BTreeMap<String, String>),
    Raw(serde_json::Value),
}

impl ArgValue {
    fn to_json(&self) -> serde_json::Value {
        match self {
            ArgValue::Text(s) | ArgValue::Format(s) => serde_json::Value::String(s.clone()),
            ArgValue::Transform { src, .. } => serde_json::Value::String(src.clone()),
            ArgValue::List(items) => serde_json::Value::Array(
                items
                    .iter()
                    .map(|s| serde_json::Value::String(s.clone()))
                    .collect(),
            ),
            ArgValue::Dict(map) => serde_json::Value::Object(
                map.iter()
                    .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                    .collect(),
            ),
            ArgValue::Raw(v) => v.clone(),
        }
    }
}

/// How a physical op came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Selected,
    Repaired { round: u32 },
}

/// A function-pool call with typed arguments, realizing one logical op.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalOp {
    pub function: String,
    pub args: BTreeMap<String, ArgValue>,
    pub implements: LogicalOp,
    pub provenance: Provenance,
}

impl PhysicalOp {
    /// Wire encoding: `function: <name>` then `args: <single-line JSON>`.
    /// Transform args are JSON strings holding the lambda text.
    pub fn encode(&self) -> String {
        encode_call(&self.function, &self.args)
    }
}

pub fn encode_call(function: &str, args: &BTreeMap<String, ArgValue>) -> String {
    let map: serde_json::Map<String, serde_json::Value> = args
        .iter()
        .map(|(k, v)| (k.clone(), v.to_json()))
        .collect();
    let json = serde_json::Value::Object(map);
    format!("function: {function}\nargs: {json}")
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum WireError {
    #[error("missing 'function:' line")]
    MissingFunction,
    #[error("missing 'args:' line")]
    MissingArgs,
    #[error("args line is not a JSON object: {detail}")]
    BadArgsJson { detail: String },
}

/// Decode a wire-encoded call against the pool the logical op draws from.
/// Typing is best-effort: values that do not fit their declared kind are
/// kept as `Raw` so pre-diagnosis can classify the mismatch; unknown
/// function names keep all args `Raw`.
pub fn decode_call(
    text: &str,
    pool: &'static [PoolFunction],
) -> Result<(String, BTreeMap<String, ArgValue>), WireError> {
    let mut function = None;
    let mut args_json = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("function:") {
            if function.is_none() {
                function = Some(rest.trim().to_string());
            }
        } else if let Some(rest) = line.strip_prefix("args:") {
            if args_json.is_none() {
                args_json = Some(rest.trim().to_string());
            }
        }
    }
    let function = function.ok_or(WireError::MissingFunction)?;
    let args_json = args_json.ok_or(WireError::MissingArgs)?;
    let parsed: serde_json::Value =
        serde_json::from_str(&args_json).map_err(|e| WireError::BadArgsJson {
            detail: e.to_string(),
        })?;
    let obj = match parsed {
        serde_json::Value::Object(obj) => obj,
        other => {
            return Err(WireError::BadArgsJson {
                detail: format!("expected an object, found {other}"),
            });
        }
    };
    let spec = lookup(pool, &function);
    let mut args = BTreeMap::new();
    for (key, value) in obj {
        let typed = match spec.and_then(|f| f.arg(&key)) {
            Some(arg_spec) => type_arg(arg_spec.kind, &value),
            None => ArgValue::Raw(value.clone()),
        };
        args.insert(key, typed);
    }
    Ok((function, args))
}

fn type_arg(kind: ArgKind, value: &serde_json::Value) -> ArgValue {
    match kind {
        ArgKind::ColumnName => match value.as_str() {
            Some(s) => ArgValue::Text(s.to_string()),
            None => ArgValue::Raw(value.clone()),
        },
        ArgKind::FormatString => match value.as_str() {
            Some(s) => ArgValue::Format(s.to_string()),
            None => ArgValue::Raw(value.clone()),
        },
        ArgKind::ColumnList => {
            let Some(items) = value.as_array() else {
                return ArgValue::Raw(value.clone());
            };
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                match item.as_str() {
                    Some(s) => out.push(s.to_string()),
                    None => return ArgValue::Raw(value.clone()),
                }
            }
            ArgValue::List(out)
        }
        ArgKind::Transform(_) => {
            let Some(src) = value.as_str() else {
                return ArgValue::Raw(value.clone());
            };
            match texpr::parse_transform(src) {
                Ok(expr) => ArgValue::Transform {
                    src: src.to_string(),
                    expr,
                },
                Err(_) => ArgValue::Raw(value.clone()),
            }
        }
        ArgKind::TransDict => {
            let Some(obj) = value.as_object() else {
                return ArgValue::Raw(value.clone());
            };
            let mut map = BTreeMap::new();
            for (k, v) in obj {
                match v.as_str() {
                    Some(s) => {
                        map.insert(k.clone(), s.to_string());
                    }
                    None => return ArgValue::Raw(value.clone()),
                }
            }
            ArgValue::Dict(map)
        }
    }
}

/// Grammar-error class from pre-diagnosis: naming, type, or value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrammarErrorKind {
    Naming,
    Type,
    Value,
}

impl fmt::Display for GrammarErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrammarErrorKind::Naming => f.write_str("naming"),
            GrammarErrorKind::Type => f.write_str("type"),
            GrammarErrorKind::Value => f.write_str("value"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecheckItem {
    pub kind: GrammarErrorKind,
    pub message: String,
}

/// The pre-diagnosis result; empty means "passed".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrecheckReport {
    pub items: Vec<PrecheckItem>,
}

impl PrecheckReport {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn push(&mut self, kind: GrammarErrorKind, message: String) {
        self.items.push(PrecheckItem { kind, message });
    }
}

/// Static pre-diagnosis of a physical op against a table. Sound against
/// execution: an empty report means the executor will not raise naming,
/// type, or value errors for this op (per-cell evaluation errors remain
/// possible and are handled by the runtime repair step).
pub fn precheck(p: &PhysicalOp, t: &Table) -> PrecheckReport {
    let mut report = PrecheckReport::default();
    let pool = pool_for(&p.implements);
    let Some(func) = lookup(pool, &p.function) else {
        report.push(
            GrammarErrorKind::Naming,
            format!(
                "unknown function {:?} for a {} op; expected one of: {}",
                p.function,
                p.implements.kind(),
                pool.iter().map(|f| f.name).collect::<Vec<_>>().join(", ")
            ),
        );
        return report;
    };
    for spec in func.signature {
        if !p.args.contains_key(spec.name) {
            report.push(
                GrammarErrorKind::Naming,
                format!("missing argument {:?} for {}", spec.name, func.name),
            );
        }
    }
    for key in p.args.keys() {
        if func.arg(key).is_none() {
            report.push(
                GrammarErrorKind::Naming,
                format!("unknown argument {key:?} for {}", func.name),
            );
        }
    }
    let check_column = |report: &mut PrecheckReport, name: &str| {
        if !t.has_column(name) {
            report.push(
                GrammarErrorKind::Value,
                format!(
                    "column {name:?} does not exist in the table; available columns: {}",
                    t.column_names().join(", ")
                ),
            );
        }
    };
    for (key, value) in &p.args {
        let Some(spec) = func.arg(key) else { continue };
        match (spec.kind, value) {
            (ArgKind::ColumnName, ArgValue::Text(name)) => check_column(&mut report, name),
            (ArgKind::ColumnList, ArgValue::List(items)) => {
                if items.is_empty() {
                    report.push(
                        GrammarErrorKind::Type,
                        format!("argument {key:?} must list at least one column"),
                    );
                }
                for name in items {
                    check_column(&mut report, name);
                }
            }
            (ArgKind::Transform(mode), ArgValue::Transform { expr, .. }) => {
                if expr.mode != mode {
                    report.push(
                        GrammarErrorKind::Type,
                        format!(
                            "argument {key:?} must be {}; the given lambda is the other mode",
                            spec.kind.describe()
                        ),
                    );
                } else if mode == Mode::Row {
                    for col in texpr::referenced_keys(expr) {
                        if !t.has_column(&col) {
                            report.push(
                                GrammarErrorKind::Value,
                                format!(
                                    "the lambda reads column {col:?} which does not exist in the table"
                                ),
                            );
                        }
                    }
                }
            }
            (ArgKind::FormatString, ArgValue::Format(fmt_str)) => {
                if let Err(message) = crate::prep::validate_format(fmt_str) {
                    report.push(GrammarErrorKind::Value, message);
                }
            }
            (ArgKind::TransDict, ArgValue::Dict(map)) => {
                if map.is_empty() {
                    report.push(
                        GrammarErrorKind::Type,
                        format!("argument {key:?} must contain at least one replacement"),
                    );
                }
            }
            (_, ArgValue::Raw(raw)) => {
                let detail = if matches!(spec.kind, ArgKind::Transform(_)) {
                    match raw.as_str() {
                        Some(src) => match texpr::parse_transform(src) {
                            Err(e) => format!(": {e}"),
                            Ok(_) => String::new(),
                        },
                        None => String::new(),
                    }
                } else {
                    String::new()
                };
                report.push(
                    GrammarErrorKind::Type,
                    format!(
                        "argument {key:?} must be {}{detail}",
                        spec.kind.describe()
                    ),
                );
            }
            (_, _) => {
                report.push(
                    GrammarErrorKind::Type,
                    format!("argument {key:?} must be {}", spec.kind.describe()),
                );
            }
        }
    }
    // The executor appends the augmented column; a clash is a value error
    // the runtime would otherwise hit as a duplicate-column failure.
    if let LogicalOp::Augment { new_column, .. } = &p.implements {
        if t.has_column(new_column) {
            report.push(
                GrammarErrorKind::Value,
                format!("new column {new_column:?} already exists in the table"),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::from_rows;

    fn strs(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn cyclist_table() -> Table {
        from_rows(
            &strs(&["Date", "Cyclist", "Medal", "Age"]),
            &[
                strs(&["02-28", "Alej (ESP)", "\"2\"", "32"]),
                strs(&["10-19", "Dav. ITA", "1", "26"]),
            ],
            true,
        )
        .unwrap()
    }

    fn augment_country() -> LogicalOp {
        LogicalOp::Augment {
            description: "Extract country code".to_string(),
            source_columns: vec!["Cyclist".to_string()],
            new_column: "Country".to_string(),
        }
    }

    fn extract_op(column: &str, func: &str) -> PhysicalOp {
        let (function, args) = decode_call(
            &format!(
                "function: extract\nargs: {}",
                serde_json::json!({"column": column, "func": func})
            ),
            AUG_POOL,
        )
        .unwrap();
        PhysicalOp {
            function,
            args,
            implements: augment_country(),
            provenance: Provenance::Selected,
        }
    }

    #[test]
    fn pools_route_by_op_kind() {
        let aug = pool_for(&augment_country());
        assert_eq!(
            aug.iter().map(|f| f.name).collect::<Vec<_>>(),
            vec!["extract", "calculate", "map_to_boolean", "concatenate", "infer"]
        );
        let norm = pool_for(&LogicalOp::Normalize {
            description: "Cast to INT".to_string(),
            column: "Medal".to_string(),
        });
        assert_eq!(norm.len(), 4);
        assert!(norm.iter().any(|f| f.name == "infer"));
        let filter = pool_for(&LogicalOp::Filter {
            columns: vec!["Date".to_string()],
        });
        assert_eq!(
            filter.iter().map(|f| f.name).collect::<Vec<_>>(),
            vec!["filter_columns"]
        );
    }

    #[test]
    fn infer_names_are_distinguished_by_pool() {
        let aug = lookup(AUG_POOL, "infer").unwrap();
        let norm = lookup(NORM_POOL, "infer").unwrap();
        assert_eq!(aug.pool, Pool::Aug);
        assert_eq!(norm.pool, Pool::Norm);
        assert_ne!(aug.signature.len(), norm.signature.len());
    }

    #[test]
    fn plan_rejects_misplaced_filter() {
        let filter = LogicalOp::Filter {
            columns: vec!["A".to_string()],
        };
        let norm = LogicalOp::Normalize {
            description: "d".to_string(),
            column: "A".to_string(),
        };
        assert!(LogicalPlan::new(vec![filter.clone(), norm.clone()], None).is_err());
        assert!(LogicalPlan::new(vec![filter.clone(), filter.clone()], None).is_err());
        assert!(LogicalPlan::new(vec![norm, filter], None).is_ok());
    }

    #[test]
    fn wire_round_trip() {
        let op = extract_op("Cyclist", r"lambda x: re.search(r'\((.*?)\)',x).group(1)");
        let encoded = op.encode();
        let (function, args) = decode_call(&encoded, AUG_POOL).unwrap();
        assert_eq!(function, op.function);
        assert_eq!(args, op.args);
        assert!(encoded.starts_with("function: extract\nargs: {"));
    }

    #[test]
    fn wire_decodes_dict_and_list_args() {
        let text = "function: clean_string\nargs: {\"column\": \"Country\", \"trans_dict\": {\"Italia\": \"ITA\"}}";
        let (function, args) = decode_call(text, NORM_POOL).unwrap();
        assert_eq!(function, "clean_string");
        match &args["trans_dict"] {
            ArgValue::Dict(map) => assert_eq!(map["Italia"], "ITA"),
            other => panic!("expected dict, got {other:?}"),
        }
        let text = "function: filter_columns\nargs: {\"rel_columns\": [\"Date\", \"Medal\"]}";
        let (_, args) = decode_call(text, FILTER_POOL).unwrap();
        assert_eq!(
            args["rel_columns"],
            ArgValue::List(strs(&["Date", "Medal"]))
        );
    }

    #[test]
    fn wire_tolerates_surrounding_prose() {
        let text = "Here is the op:\nfunction: extract\nargs: {\"column\": \"Cyclist\", \"func\": \"lambda x: x\"}\nDone.";
        let (function, _) = decode_call(text, AUG_POOL).unwrap();
        assert_eq!(function, "extract");
    }

    #[test]
    fn precheck_passes_well_formed_extract() {
        let op = extract_op("Cyclist", "lambda x: x");
        assert!(precheck(&op, &cyclist_table()).is_empty());
    }

    #[test]
    fn precheck_flags_unknown_column_as_value_error() {
        let op = extract_op("Cyclists", "lambda x: x");
        let report = precheck(&op, &cyclist_table());
        assert_eq!(report.items.len(), 1);
        assert_eq!(report.items[0].kind, GrammarErrorKind::Value);
        assert!(report.items[0].message.contains("Cyclists"));
    }

    #[test]
    fn precheck_flags_malformed_transform_as_type_error() {
        let op = extract_op("Cyclist", "lambda x: x[");
        let report = precheck(&op, &cyclist_table());
        assert_eq!(report.items[0].kind, GrammarErrorKind::Type);
        assert!(report.items[0].message.contains("lambda"));
    }

    #[test]
    fn precheck_flags_unknown_function_as_naming_error() {
        let mut op = extract_op("Cyclist", "lambda x: x");
        op.function = "extrct".to_string();
        let report = precheck(&op, &cyclist_table());
        assert_eq!(report.items[0].kind, GrammarErrorKind::Naming);
    }

    #[test]
    fn precheck_flags_wrong_mode_as_type_error() {
        let op = extract_op("Cyclist", "lambda x: x['A']+x['B']");
        let report = precheck(&op, &cyclist_table());
        assert!(report
            .items
            .iter()
            .any(|i| i.kind == GrammarErrorKind::Type));
    }

    #[test]
    fn precheck_flags_missing_row_keys() {
        let text = "function: calculate\nargs: {\"columns\": [\"Medal\"], \"func\": \"lambda x: x['Medal']-x['Score']\"}";
        let (function, args) = decode_call(text, AUG_POOL).unwrap();
        let op = PhysicalOp {
            function,
            args,
            implements: LogicalOp::Augment {
                description: "diff".to_string(),
                source_columns: vec!["Medal".to_string()],
                new_column: "Diff".to_string(),
            },
            provenance: Provenance::Selected,
        };
        let report = precheck(&op, &cyclist_table());
        assert!(report
            .items
            .iter()
            .any(|i| i.kind == GrammarErrorKind::Value && i.message.contains("Score")));
    }

    #[test]
    fn precheck_flags_existing_new_column() {
        let mut op = extract_op("Cyclist", "lambda x: x");
        op.implements = LogicalOp::Augment {
            description: "dup".to_string(),
            source_columns: vec!["Cyclist".to_string()],
            new_column: "Medal".to_string(),
        };
        let report = precheck(&op, &cyclist_table());
        assert!(report
            .items
            .iter()
            .any(|i| i.kind == GrammarErrorKind::Value && i.message.contains("Medal")));
    }
}
