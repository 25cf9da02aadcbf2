//! Logical plan generation: the Chain-of-Clauses method (default) and the
//! direct-prompting baseline.
//!
//! Chain-of-Clauses runs in two phases. Phase I prompts for an Analysis
//! Sketch outlining how the table should be transformed; phase II walks
//! the sketch clause by clause, pairing each clause with the actual values
//! of the columns it touches, and asks for the operations that clause
//! needs. A trailing Filter over the sketch's referenced columns closes
//! the plan.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gateway::{ChatRequest, GatewayError, Message, Session};
use crate::plan::{LogicalOp, LogicalPlan, OpTypeSpec};
use crate::sql::{self, SketchClause, SqlQuery};
use crate::table::{serialize_markdown, Table};

/// How many table rows prompts show.
pub const EXCERPT_ROWS: usize = 5;
/// How many distinct column values phase II shows per clause.
pub const SAMPLE_VALUES: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("could not parse a sketch from the model response: {raw_response:?}")]
    SketchParseFailure { raw_response: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("bad prompt assets: {message}")]
    BadAssets { message: String },
}

/// One in-context example. For sketch exemplars `sketch` holds the
/// SQL-like sketch; for clause and analyzer exemplars it holds the
/// operations block or the SQL answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerExemplar {
    pub question: String,
    pub table_excerpt: String,
    pub sketch: String,
}

/// Prompt templates and exemplars, shipped as a plain-text asset
/// directory and embedded as defaults.
#[derive(Debug, Clone)]
pub struct PromptAssets {
    pub sketch_system: String,
    pub sketch_exemplars: Vec<PlannerExemplar>,
    pub clause_system: String,
    pub clause_exemplars: Vec<PlannerExemplar>,
    pub direct_system: String,
    pub programmer_system: String,
    pub analyzer_system: String,
    pub analyzer_exemplars: Vec<PlannerExemplar>,
}

impl PromptAssets {
    pub fn builtin() -> PromptAssets {
        let assets = PromptAssets {
            sketch_system: include_str!("../assets/planner_sketch_system.txt").to_string(),
            sketch_exemplars: serde_json::from_str(include_str!(
                "../assets/planner_sketch_exemplars.json"
            ))
            .expect("bundled sketch exemplars parse"),
            clause_system: include_str!("../assets/planner_clause_system.txt").to_string(),
            clause_exemplars: serde_json::from_str(include_str!(
                "../assets/planner_clause_exemplars.json"
            ))
            .expect("bundled clause exemplars parse"),
            direct_system: include_str!("../assets/planner_direct_system.txt").to_string(),
            programmer_system: include_str!("../assets/programmer_system.txt").to_string(),
            analyzer_system: include_str!("../assets/analyzer_system.txt").to_string(),
            analyzer_exemplars: serde_json::from_str(include_str!(
                "../assets/analyzer_exemplars.json"
            ))
            .expect("bundled analyzer exemplars parse"),
        };
        assets.validate().expect("bundled assets are valid");
        assets
    }

    /// Load from a directory with the same file names as the bundled set.
    pub fn from_dir(dir: &Path) -> Result<PromptAssets, PlannerError> {
        let read = |name: &str| -> Result<String, PlannerError> {
            std::fs::read_to_string(dir.join(name)).map_err(|e| PlannerError::BadAssets {
                message: format!("{name}: {e}"),
            })
        };
        let exemplars = |name: &str| -> Result<Vec<PlannerExemplar>, PlannerError> {
            serde_json::from_str(&read(name)?).map_err(|e| PlannerError::BadAssets {
                message: format!("{name}: {e}"),
            })
        };
        let assets = PromptAssets {
            sketch_system: read("planner_sketch_system.txt")?,
            sketch_exemplars: exemplars("planner_sketch_exemplars.json")?,
            clause_system: read("planner_clause_system.txt")?,
            clause_exemplars: exemplars("planner_clause_exemplars.json")?,
            direct_system: read("planner_direct_system.txt")?,
            programmer_system: read("programmer_system.txt")?,
            analyzer_system: read("analyzer_system.txt")?,
            analyzer_exemplars: exemplars("analyzer_exemplars.json")?,
        };
        assets.validate()?;
        Ok(assets)
    }

    /// Sketch exemplars must themselves parse as sketches.
    pub fn validate(&self) -> Result<(), PlannerError> {
        for ex in &self.sketch_exemplars {
            sql::parse_sketch(&ex.sketch).map_err(|e| PlannerError::BadAssets {
                message: format!("sketch exemplar {:?} does not parse: {e}", ex.question),
            })?;
        }
        Ok(())
    }
}

/// Header + first [`EXCERPT_ROWS`] rows + a row-count line. Prompts never
/// carry the full table.
pub fn table_excerpt(t: &Table, rows: usize) -> String {
    format!(
        "{}({} rows total)",
        serialize_markdown(t, Some(rows)),
        t.n_rows()
    )
}

/// First `k` distinct values of a column in row order, rendered as text.
pub fn distinct_samples(t: &Table, column: &str, k: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    if let Some(col) = t.column(column) {
        for v in &col.values {
            let text = v.render();
            if !out.contains(&text) {
                out.push(text);
                if out.len() == k {
                    break;
                }
            }
        }
    }
    out
}

/// Extract the payload of the first fenced code block, preferring a
/// ```sql fence; falls back to the whole trimmed text.
pub fn extract_fenced(text: &str) -> String {
    for marker in ["```sql", "```"] {
        if let Some(start) = text.find(marker) {
            let body = &text[start + marker.len()..];
            if let Some(end) = body.find("```") {
                return body[..end].trim().to_string();
            }
        }
    }
    text.trim().to_string()
}

/// The planner agent. Stateless given its assets and configuration.
#[derive(Debug, Clone)]
pub struct Planner<'a> {
    pub assets: &'a PromptAssets,
    /// Strict filter mode drops Augment source columns that the sketch
    /// only uses as UDF inputs; the default retains them.
    pub strict_filter: bool,
}

/// A produced plan plus non-fatal warnings for the run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: LogicalPlan,
    pub warnings: Vec<String>,
}

impl<'a> Planner<'a> {
    pub fn new(assets: &'a PromptAssets) -> Planner<'a> {
        Planner {
            assets,
            strict_filter: false,
        }
    }

    fn sketch_prompt(&self, question: &str, t: &Table) -> Vec<Message> {
        let mut user = String::new();
        for ex in &self.assets.sketch_exemplars {
            user.push_str(&format!(
                "Question: {}\nTable:\n{}\nSketch:\n```sql\n{}\n```\n\n",
                ex.question, ex.table_excerpt, ex.sketch
            ));
        }
        user.push_str(&format!(
            "Question: {}\nTable:\n{}\nSketch:\n",
            question,
            table_excerpt(t, EXCERPT_ROWS)
        ));
        vec![
            Message::system(self.assets.sketch_system.clone()),
            Message::user(user),
        ]
    }

    /// Phase I: generate the Analysis Sketch. One format-reminder retry,
    /// then failure.
    pub fn generate_sketch(
        &self,
        question: &str,
        t: &Table,
        session: &Session,
    ) -> Result<SqlQuery, PlannerError> {
        let messages = self.sketch_prompt(question, t);
        let first = session.complete(&ChatRequest::new("planner.sketch", messages.clone()))?;
        match sql::parse_sketch(&extract_fenced(&first)) {
            Ok(sketch) => Ok(sketch),
            Err(_) => {
                let mut retry_messages = messages;
                retry_messages.push(Message::assistant(first));
                retry_messages.push(Message::user(
                    "That was not a parseable sketch. Reply with exactly one SQL-like \
                     sketch in a ```sql fenced block and nothing else.",
                ));
                let second =
                    session.complete(&ChatRequest::new("planner.sketch.retry", retry_messages))?;
                sql::parse_sketch(&extract_fenced(&second)).map_err(|_| {
                    PlannerError::SketchParseFailure {
                        raw_response: second,
                    }
                })
            }
        }
    }

    fn clause_prompt(&self, clause: &SketchClause, t: &Table) -> Vec<Message> {
        let mut user = String::new();
        for ex in &self.assets.clause_exemplars {
            user.push_str(&format!(
                "Clause: {}\nValues: {}\nOperations:\n{}\n\n",
                ex.question, ex.table_excerpt, ex.sketch
            ));
        }
        let columns: Vec<String> = match clause {
            SketchClause::Udf(udf) => udf.inputs.clone(),
            SketchClause::Agg(agg) => match &agg.target {
                sql::AggTarget::Column(c) => vec![c.clone()],
                sql::AggTarget::Star => Vec::new(),
            },
            SketchClause::Pred(p) => vec![p.column().to_string()],
            SketchClause::Structural(_) => Vec::new(),
        };
        let mut values = String::new();
        for (i, col) in columns.iter().enumerate() {
            if i > 0 {
                values.push_str(" | ");
            }
            values.push_str(&format!(
                "{col}: {}",
                distinct_samples(t, col, SAMPLE_VALUES).join(", ")
            ));
        }
        user.push_str(&format!(
            "Clause: {}\nValues: {}\nOperations:\n",
            clause.describe(),
            values
        ));
        vec![
            Message::system(self.assets.clause_system.clone()),
            Message::user(user),
        ]
    }

    /// Phase II for one clause. UDF clauses are expected to yield an
    /// Augment, aggregate/predicate clauses zero or one Normalize, but any
    /// op kind is accepted. Structural clauses need no model call.
    /// Degrades to an empty suggestion list with a warning.
    pub fn suggest_ops_for_clause(
        &self,
        clause: &SketchClause,
        index: usize,
        t: &Table,
        session: &Session,
    ) -> Result<(Vec<LogicalOp>, Vec<String>), PlannerError> {
        if matches!(clause, SketchClause::Structural(_)) {
            return Ok((Vec::new(), Vec::new()));
        }
        let messages = self.clause_prompt(clause, t);
        let tag = format!("planner.clause.{index}");
        let first = session.complete(&ChatRequest::new(tag.clone(), messages.clone()))?;
        let (ops, warnings, parsed_any) = parse_op_lines(&first);
        if parsed_any {
            return Ok((ops, warnings));
        }
        let mut retry_messages = messages;
        retry_messages.push(Message::assistant(first));
        retry_messages.push(Message::user(
            "Reply only with operation lines in the required format, or the word None.",
        ));
        let second = session.complete(&ChatRequest::new(format!("{tag}.retry"), retry_messages))?;
        let (ops, mut warnings, parsed_any) = parse_op_lines(&second);
        if !parsed_any {
            warnings.push(format!(
                "clause {index} ({}) produced no parseable operations; continuing without",
                clause.describe()
            ));
            return Ok((Vec::new(), warnings));
        }
        Ok((ops, warnings))
    }

    /// The trailing Filter: the sketch's referenced columns with base
    /// columns in SQL evaluation order (WHERE, GROUP BY, SELECT, ORDER BY)
    /// and derived aliases last. Strict mode drops UDF source columns not
    /// referenced anywhere else. `None` when the sketch names no columns.
    pub fn derive_filter(&self, sketch: &SqlQuery) -> Option<LogicalOp> {
        let mut ordered: Vec<String> = Vec::new();
        let mut derived: Vec<String> = Vec::new();
        let push_base = |name: &str, ordered: &mut Vec<String>| {
            let name = name.to_string();
            if !ordered.contains(&name) {
                ordered.push(name);
            }
        };
        let refs = sql::referenced_columns(sketch);
        let is_derived = |name: &str| refs.iter().any(|r| r.name == name && r.derived);
        // WHERE, then GROUP BY, then SELECT, then ORDER BY.
        let mention = |name: &str, ordered: &mut Vec<String>, derived: &mut Vec<String>| {
            if is_derived(name) {
                let name = name.to_string();
                if !derived.contains(&name) {
                    derived.push(name);
                }
            } else {
                push_base(name, ordered);
            }
        };
        for p in &sketch.predicates {
            mention(p.column(), &mut ordered, &mut derived);
        }
        if let Some(g) = &sketch.group_by {
            mention(g, &mut ordered, &mut derived);
        }
        for item in &sketch.select_items {
            match item {
                sql::SelectItem::Column(c) => mention(c, &mut ordered, &mut derived),
                sql::SelectItem::Agg(agg) => {
                    if let sql::AggTarget::Column(c) = &agg.target {
                        mention(c, &mut ordered, &mut derived);
                    }
                }
                sql::SelectItem::Udf(udf) => {
                    for input in &udf.inputs {
                        mention(input, &mut ordered, &mut derived);
                    }
                    mention(&udf.alias, &mut ordered, &mut derived);
                }
            }
        }
        if let Some((key, _)) = &sketch.order_by {
            match key {
                sql::OrderKey::Column(c) => mention(c, &mut ordered, &mut derived),
                sql::OrderKey::Agg(agg) => {
                    if let sql::AggTarget::Column(c) = &agg.target {
                        mention(c, &mut ordered, &mut derived);
                    }
                }
            }
        }
        if self.strict_filter {
            // Drop UDF inputs that appear nowhere outside their UDF.
            let consumed: Vec<&str> = sketch
                .select_items
                .iter()
                .filter_map(|i| match i {
                    sql::SelectItem::Udf(udf) => Some(udf),
                    _ => None,
                })
                .flat_map(|udf| udf.inputs.iter().map(|s| s.as_str()))
                .filter(|input| {
                    let outside = sketch.predicates.iter().any(|p| p.column() == *input)
                        || sketch.group_by.as_deref() == Some(*input)
                        || sketch.select_items.iter().any(|i| match i {
                            sql::SelectItem::Column(c) => c == input,
                            sql::SelectItem::Agg(agg) => {
                                matches!(&agg.target, sql::AggTarget::Column(c) if c == input)
                            }
                            sql::SelectItem::Udf(_) => false,
                        })
                        || matches!(&sketch.order_by, Some((sql::OrderKey::Column(c), _)) if c == input);
                    !outside
                })
                .collect();
            ordered.retain(|c| !consumed.contains(&c.as_str()));
        }
        ordered.extend(derived);
        if ordered.is_empty() {
            None
        } else {
            Some(LogicalOp::Filter { columns: ordered })
        }
    }

    /// Chain-of-Clauses planning: sketch, per-clause suggestions in clause
    /// order (deduplicated), derived Filter last.
    pub fn plan_coc(
        &self,
        question: &str,
        t: &Table,
        session: &Session,
    ) -> Result<PlanOutcome, PlannerError> {
        let sketch = self.generate_sketch(question, t, session)?;
        let mut ops: Vec<LogicalOp> = Vec::new();
        let mut warnings = Vec::new();
        for (index, clause) in sql::clauses(&sketch).iter().enumerate() {
            let (suggested, mut clause_warnings) =
                self.suggest_ops_for_clause(clause, index, t, session)?;
            warnings.append(&mut clause_warnings);
            for op in suggested {
                if matches!(op, LogicalOp::Filter { .. }) {
                    warnings.push(format!(
                        "clause {index} suggested a Filter; dropped (the Filter is derived from the sketch)"
                    ));
                    continue;
                }
                if !ops.iter().any(|existing| same_suggestion(existing, &op)) {
                    ops.push(op);
                }
            }
        }
        if let Some(filter) = self.derive_filter(&sketch) {
            ops.push(filter);
        }
        let plan = LogicalPlan::new(ops, Some(sketch)).map_err(|e| PlannerError::BadAssets {
            message: format!("planner produced an invalid plan: {e}"),
        })?;
        Ok(PlanOutcome { plan, warnings })
    }

    /// The direct-prompting baseline: one prompt with the operation-type
    /// specifications, exemplars, table excerpt, and question; the Filter
    /// (if any) is normalized to last position.
    pub fn plan_direct(
        &self,
        question: &str,
        t: &Table,
        specs: &[OpTypeSpec],
        session: &Session,
    ) -> Result<PlanOutcome, PlannerError> {
        let mut system = self.assets.direct_system.clone();
        system.push_str("\nOperation types:\n");
        for spec in specs {
            system.push_str(&format!("- {}\n", spec.purpose_text));
        }
        let mut user = String::new();
        for ex in &self.assets.clause_exemplars {
            // Clause exemplars double as compact operation-format examples.
            user.push_str(&format!(
                "Need: {}\nValues: {}\nOperations:\n{}\n\n",
                ex.question, ex.table_excerpt, ex.sketch
            ));
        }
        user.push_str(&format!(
            "Question: {}\nTable:\n{}\nOperations:\n",
            question,
            table_excerpt(t, EXCERPT_ROWS)
        ));
        let messages = vec![Message::system(system), Message::user(user)];
        let first = session.complete(&ChatRequest::new("planner.direct", messages.clone()))?;
        let (mut ops, mut warnings, parsed_any) = parse_op_lines(&first);
        if !parsed_any {
            let mut retry_messages = messages;
            retry_messages.push(Message::assistant(first));
            retry_messages.push(Message::user(
                "Reply only with operation lines in the required format, or the word None.",
            ));
            let second =
                session.complete(&ChatRequest::new("planner.direct.retry", retry_messages))?;
            let (second_ops, mut second_warnings, parsed_any) = parse_op_lines(&second);
            warnings.append(&mut second_warnings);
            if !parsed_any {
                warnings.push("direct planner produced no parseable operations".to_string());
                return Ok(PlanOutcome {
                    plan: LogicalPlan::default(),
                    warnings,
                });
            }
            ops = second_ops;
        }
        // Keep the first Filter, move it last, drop any extras.
        let mut filter: Option<LogicalOp> = None;
        let mut rest = Vec::new();
        for op in ops {
            if matches!(op, LogicalOp::Filter { .. }) {
                if filter.is_none() {
                    filter = Some(op);
                } else {
                    warnings.push("extra Filter line dropped".to_string());
                }
            } else {
                rest.push(op);
            }
        }
        if let Some(f) = filter {
            rest.push(f);
        }
        let plan = LogicalPlan::new(rest, None).map_err(|e| PlannerError::BadAssets {
            message: format!("planner produced an invalid plan: {e}"),
        })?;
        Ok(PlanOutcome { plan, warnings })
    }
}

/// Whether two suggestions are duplicates: same kind, same target column,
/// same description.
fn same_suggestion(a: &LogicalOp, b: &LogicalOp) -> bool {
    match (a, b) {
        (
            LogicalOp::Augment {
                description: da,
                new_column: na,
                ..
            },
            LogicalOp::Augment {
                description: db,
                new_column: nb,
                ..
            },
        ) => da == db && na == nb,
        (
            LogicalOp::Normalize {
                description: da,
                column: ca,
            },
            LogicalOp::Normalize {
                description: db,
                column: cb,
            },
        ) => da == db && ca == cb,
        (LogicalOp::Filter { columns: ca }, LogicalOp::Filter { columns: cb }) => ca == cb,
        _ => false,
    }
}

fn strip_decoration(line: &str) -> &str {
    let line = line.trim();
    let line = line.strip_prefix("- ").unwrap_or(line);
    let line = line.strip_prefix("* ").unwrap_or(line);
    line.trim()
}

fn parse_column_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(|c| {
            c.trim()
                .trim_matches(|ch| ch == '"' || ch == '\'' || ch == '`')
                .to_string()
        })
        .filter(|c| !c.is_empty())
        .collect()
}

/// Parse operation lines. Returns (ops, warnings, parsed_any) where
/// `parsed_any` is true when at least one line parsed (including a bare
/// `None`), i.e. the response followed the format at all.
pub fn parse_op_lines(text: &str) -> (Vec<LogicalOp>, Vec<String>, bool) {
    let text = extract_fenced(text);
    let mut ops = Vec::new();
    let mut warnings = Vec::new();
    let mut parsed_any = false;
    let augment = regex::Regex::new(r#"^Augment\(\s*"([^"]*)"\s*,\s*\[([^\]]*)\]\s*\)\s*->\s*(.+?)\s*$"#)
        .expect("static regex");
    let normalize =
        regex::Regex::new(r#"^Normalize\(\s*"([^"]*)"\s*,\s*(.+?)\s*\)\s*$"#).expect("static regex");
    let filter = regex::Regex::new(r"^Filter\(\s*\[([^\]]*)\]\s*\)\s*$").expect("static regex");
    for raw in text.lines() {
        let line = strip_decoration(raw);
        if line.is_empty() {
            continue;
        }
        if line.eq_ignore_ascii_case("none") {
            parsed_any = true;
            continue;
        }
        if let Some(caps) = augment.captures(line) {
            let new_column = caps[3]
                .trim()
                .trim_matches(|ch| ch == '"' || ch == '\'' || ch == '`')
                .to_string();
            let op = LogicalOp::Augment {
                description: caps[1].to_string(),
                source_columns: parse_column_list(&caps[2]),
                new_column,
            };
            if matches!(&op, LogicalOp::Augment { new_column, .. } if new_column.is_empty()) {
                warnings.push(format!("skipped Augment with empty target: {line:?}"));
                continue;
            }
            ops.push(op);
            parsed_any = true;
            continue;
        }
        if let Some(caps) = normalize.captures(line) {
            let column = caps[2]
                .trim()
                .trim_matches(|ch| ch == '"' || ch == '\'' || ch == '`')
                .to_string();
            if column.is_empty() {
                warnings.push(format!("skipped Normalize with empty column: {line:?}"));
                continue;
            }
            ops.push(LogicalOp::Normalize {
                description: caps[1].to_string(),
                column,
            });
            parsed_any = true;
            continue;
        }
        if let Some(caps) = filter.captures(line) {
            let columns = parse_column_list(&caps[1]);
            if columns.is_empty() {
                warnings.push(format!("skipped Filter with no columns: {line:?}"));
                continue;
            }
            ops.push(LogicalOp::Filter { columns });
            parsed_any = true;
            continue;
        }
        warnings.push(format!("skipped unrecognized operation line: {line:?}"));
    }
    (ops, warnings, parsed_any)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{FnProvider, ReplayProvider, Transcript, TranscriptEntry};
    use crate::plan::op_type_specs;
    use crate::table::from_rows;

    fn strs(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn cyclist_table() -> Table {
        from_rows(
            &strs(&["Date", "Cyclist", "Medal", "Age"]),
            &[
                strs(&["02-28", "Alej (ESP)", "\"2\"", "32"]),
                strs(&["02-14", "Dav. ITA", "1", "26"]),
                strs(&["9-Feb", "Alex (ITA)", "3*", "30"]),
                strs(&["19-Oct", "Mar (FRA)", "5", "28"]),
            ],
            true,
        )
        .unwrap()
    }

    const FIG5_SKETCH: &str = "SELECT f(Cyclist) AS Country, SUM(Medal) FROM w WHERE Date LIKE '02-%' GROUP BY Country ORDER BY SUM(Medal) DESC LIMIT 1";

    fn scripted(entries: &[(&str, &str)]) -> ReplayProvider {
        ReplayProvider::new(Transcript {
            entries: entries
                .iter()
                .map(|(tag, response)| TranscriptEntry {
                    tag: tag.to_string(),
                    request_digest: String::new(),
                    response: response.to_string(),
                })
                .collect(),
        })
    }

    #[test]
    fn generate_sketch_parses_fenced_response() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[(
            "planner.sketch",
            &format!("```sql\n{FIG5_SKETCH}\n```"),
        )]);
        let session = Session::new(&provider);
        let sketch = planner
            .generate_sketch("Which country has the most medals in total in February?", &cyclist_table(), &session)
            .unwrap();
        assert!(sketch.has_udf());
        assert_eq!(sketch.limit, Some(1));
    }

    #[test]
    fn generate_sketch_falls_back_to_whole_text() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[("planner.sketch", "SELECT A FROM w")]);
        let session = Session::new(&provider);
        let sketch = planner
            .generate_sketch("q", &cyclist_table(), &session)
            .unwrap();
        assert_eq!(sketch.select_items.len(), 1);
    }

    #[test]
    fn generate_sketch_retries_then_fails() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[
            ("planner.sketch", "I cannot"),
            ("planner.sketch.retry", "I still cannot"),
        ]);
        let session = Session::new(&provider);
        let err = planner
            .generate_sketch("q", &cyclist_table(), &session)
            .unwrap_err();
        assert!(matches!(err, PlannerError::SketchParseFailure { .. }));
    }

    #[test]
    fn derive_filter_matches_evaluation_order() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let sketch = sql::parse_sketch(FIG5_SKETCH).unwrap();
        let filter = planner.derive_filter(&sketch).unwrap();
        assert_eq!(
            filter,
            LogicalOp::Filter {
                columns: strs(&["Date", "Cyclist", "Medal", "Country"])
            }
        );
    }

    #[test]
    fn derive_filter_strict_drops_consumed_sources() {
        let assets = PromptAssets::builtin();
        let mut planner = Planner::new(&assets);
        planner.strict_filter = true;
        let sketch = sql::parse_sketch(FIG5_SKETCH).unwrap();
        let filter = planner.derive_filter(&sketch).unwrap();
        assert_eq!(
            filter,
            LogicalOp::Filter {
                columns: strs(&["Date", "Medal", "Country"])
            }
        );
    }

    #[test]
    fn derive_filter_trivial_cases() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let sketch = sql::parse_sketch("SELECT A FROM w").unwrap();
        assert_eq!(
            planner.derive_filter(&sketch).unwrap(),
            LogicalOp::Filter {
                columns: strs(&["A"])
            }
        );
        let sketch = sql::parse_sketch("SELECT A FROM w ORDER BY B ASC").unwrap();
        assert_eq!(
            planner.derive_filter(&sketch).unwrap(),
            LogicalOp::Filter {
                columns: strs(&["A", "B"])
            }
        );
        let sketch = sql::parse_sketch("SELECT COUNT(*) FROM w").unwrap();
        assert!(planner.derive_filter(&sketch).is_none());
    }

    #[test]
    fn plan_coc_produces_the_worked_plan() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[
            ("planner.sketch", &format!("```sql\n{FIG5_SKETCH}\n```")),
            (
                "planner.clause.0",
                "Augment(\"Extract country code\", [Cyclist]) -> Country",
            ),
            ("planner.clause.1", "Normalize(\"Cast to INT\", Medal)"),
            (
                "planner.clause.2",
                "Normalize(\"Format date as %m-%d\", Date)",
            ),
        ]);
        let session = Session::new(&provider);
        let outcome = planner
            .plan_coc(
                "Which country has the most medals in total in February?",
                &cyclist_table(),
                &session,
            )
            .unwrap();
        assert!(outcome.warnings.is_empty());
        let plan = outcome.plan;
        assert_eq!(plan.ops.len(), 4);
        assert_eq!(
            plan.ops[0],
            LogicalOp::Augment {
                description: "Extract country code".to_string(),
                source_columns: strs(&["Cyclist"]),
                new_column: "Country".to_string(),
            }
        );
        assert_eq!(
            plan.ops[1],
            LogicalOp::Normalize {
                description: "Cast to INT".to_string(),
                column: "Medal".to_string(),
            }
        );
        assert_eq!(
            plan.ops[2],
            LogicalOp::Normalize {
                description: "Format date as %m-%d".to_string(),
                column: "Date".to_string(),
            }
        );
        assert_eq!(
            plan.ops[3],
            LogicalOp::Filter {
                columns: strs(&["Date", "Cyclist", "Medal", "Country"])
            }
        );
        assert!(plan.sketch.is_some());
        // exactly 1 + three clause calls
        assert_eq!(session.stats().calls, 4);
        let tags: Vec<String> = session
            .recording()
            .entries
            .iter()
            .map(|e| e.tag.clone())
            .collect();
        let mut unique = tags.clone();
        unique.dedup();
        assert_eq!(tags, unique);
    }

    #[test]
    fn plan_coc_sketch_without_clauses_yields_filter_only() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[("planner.sketch", "SELECT A FROM w")]);
        let session = Session::new(&provider);
        let table = from_rows(&strs(&["A"]), &[strs(&["1"])], true).unwrap();
        let outcome = planner.plan_coc("q", &table, &session).unwrap();
        assert_eq!(
            outcome.plan.ops,
            vec![LogicalOp::Filter {
                columns: strs(&["A"])
            }]
        );
        assert_eq!(session.stats().calls, 1);
    }

    #[test]
    fn plan_coc_dedups_repeated_suggestions() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[
            (
                "planner.sketch",
                "SELECT SUM(Medal) FROM w WHERE Medal > 1",
            ),
            ("planner.clause.0", "Normalize(\"Cast to INT\", Medal)"),
            ("planner.clause.1", "Normalize(\"Cast to INT\", Medal)"),
        ]);
        let session = Session::new(&provider);
        let outcome = planner.plan_coc("q", &cyclist_table(), &session).unwrap();
        let normalizes = outcome
            .plan
            .ops
            .iter()
            .filter(|o| matches!(o, LogicalOp::Normalize { .. }))
            .count();
        assert_eq!(normalizes, 1);
    }

    #[test]
    fn clause_prompts_carry_samples_not_tables() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let sketch = sql::parse_sketch(FIG5_SKETCH).unwrap();
        let clauses = sql::clauses(&sketch);
        let msgs = planner.clause_prompt(&clauses[1], &cyclist_table());
        let text: String = msgs.iter().map(|m| m.content.clone()).collect();
        assert!(text.contains("SUM(Medal)"));
        assert!(text.contains("\"2\""));
        // no markdown table header from the live table
        assert!(!text.contains("| Date | Cyclist |"));
    }

    #[test]
    fn unparseable_clause_response_degrades_to_empty() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[
            ("planner.sketch", "SELECT SUM(Medal) FROM w"),
            ("planner.clause.0", "I think the medals should be ints."),
            ("planner.clause.0.retry", "Still prose."),
        ]);
        let session = Session::new(&provider);
        let outcome = planner.plan_coc("q", &cyclist_table(), &session).unwrap();
        assert!(outcome
            .warnings
            .iter()
            .any(|w| w.contains("no parseable operations")));
        assert_eq!(
            outcome.plan.ops,
            vec![LogicalOp::Filter {
                columns: strs(&["Medal"])
            }]
        );
    }

    #[test]
    fn plan_direct_normalizes_filter_to_last() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[(
            "planner.direct",
            "Filter([Date, Medal])\nNormalize(\"Cast to INT\", Medal)",
        )]);
        let session = Session::new(&provider);
        let outcome = planner
            .plan_direct("q", &cyclist_table(), &op_type_specs(), &session)
            .unwrap();
        assert_eq!(outcome.plan.ops.len(), 2);
        assert!(matches!(outcome.plan.ops[0], LogicalOp::Normalize { .. }));
        assert!(matches!(outcome.plan.ops[1], LogicalOp::Filter { .. }));
    }

    #[test]
    fn plan_direct_none_yields_empty_plan() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[("planner.direct", "None")]);
        let session = Session::new(&provider);
        let outcome = planner
            .plan_direct("q", &cyclist_table(), &op_type_specs(), &session)
            .unwrap();
        assert!(outcome.plan.ops.is_empty());
        assert!(outcome.warnings.is_empty());
    }

    #[test]
    fn plan_direct_skips_unknown_ops_with_warning() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let provider = scripted(&[(
            "planner.direct",
            "Transpose(\"flip it\")\nNormalize(\"Cast to INT\", Medal)",
        )]);
        let session = Session::new(&provider);
        let outcome = planner
            .plan_direct("q", &cyclist_table(), &op_type_specs(), &session)
            .unwrap();
        assert_eq!(outcome.plan.ops.len(), 1);
        assert!(outcome.warnings.iter().any(|w| w.contains("Transpose")));
    }

    #[test]
    fn replay_determinism_same_transcript_same_plan() {
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let entries = [
            ("planner.sketch", "SELECT SUM(Medal) FROM w"),
            ("planner.clause.0", "Normalize(\"Cast to INT\", Medal)"),
        ];
        let run = || {
            let provider = scripted(&entries);
            let session = Session::new(&provider);
            planner
                .plan_coc("q", &cyclist_table(), &session)
                .unwrap()
                .plan
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn exemplar_assets_are_valid() {
        let assets = PromptAssets::builtin();
        assert_eq!(assets.sketch_exemplars.len(), 3);
        assert_eq!(assets.clause_exemplars.len(), 6);
        assert!(!assets.analyzer_exemplars.is_empty());
    }

    #[test]
    fn fn_provider_backed_session_works() {
        let provider = FnProvider(|_: &ChatRequest| Ok("None".to_string()));
        let session = Session::new(&provider);
        let assets = PromptAssets::builtin();
        let planner = Planner::new(&assets);
        let outcome = planner
            .plan_direct("q", &cyclist_table(), &op_type_specs(), &session)
            .unwrap();
        assert!(outcome.plan.ops.is_empty());
    }
}
