//! Physical plan generation: per-operation function selection and argument
//! inference, repair on error reports (step 2 of the debugging protocol),
//! and the model-backed `infer` fallback for cells no deterministic
//! function could process.
//!
//! Prompts never embed the full table serialization; they carry only the
//! first 20 distinct values of the columns the operation touches, so the
//! prompt size is independent of the table's row count.

use serde::{Deserialize, Serialize};

use crate::gateway::{ChatRequest, GatewayError, Message, Session};
use crate::memory::{MemoryPool, RetrievalMode};
use crate::plan::{
    decode_call, pool_for, ArgKind, ArgValue, GrammarErrorKind, LogicalOp, PhysicalOp, Pool,
    PoolFunction, PrecheckReport, Provenance,
};
use crate::planner::{distinct_samples, PromptAssets, SAMPLE_VALUES};
use crate::table::{Table, Value};
use crate::texpr;

/// Demonstrations retrieved from memory per generation prompt.
pub const DEMO_COUNT: usize = 2;
/// Succeeded (input, output) pairs shown to the infer fallback.
pub const INFER_DEMO_LIMIT: usize = 8;
/// Offending cell samples carried per report item.
pub const SAMPLE_LIMIT: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum ProgrammerError {
    #[error("could not parse a physical op from the model response: {raw:?}")]
    PhysicalParseFailure { raw: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Precheck,
    Runtime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Naming,
    Type,
    Value,
    Eval,
}

impl From<GrammarErrorKind> for ReportKind {
    fn from(kind: GrammarErrorKind) -> ReportKind {
        match kind {
            GrammarErrorKind::Naming => ReportKind::Naming,
            GrammarErrorKind::Type => ReportKind::Type,
            GrammarErrorKind::Value => ReportKind::Value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleInput {
    pub row: usize,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportItem {
    pub kind: ReportKind,
    pub message: String,
    pub sample_inputs: Vec<SampleInput>,
}

/// Summarized feedback handed back to the programmer: what failed, why,
/// and up to five offending cell values with their row indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub phase: Phase,
    pub items: Vec<ReportItem>,
}

impl ErrorReport {
    pub fn from_precheck(report: &PrecheckReport) -> ErrorReport {
        ErrorReport {
            phase: Phase::Precheck,
            items: report
                .items
                .iter()
                .map(|i| ReportItem {
                    kind: i.kind.into(),
                    message: i.message.clone(),
                    sample_inputs: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&format!("- [{:?}] {}", item.kind, item.message));
            if !item.sample_inputs.is_empty() {
                let samples: Vec<String> = item
                    .sample_inputs
                    .iter()
                    .map(|s| format!("row {}: {:?}", s.row, s.value))
                    .collect();
                out.push_str(&format!(" (failing cells: {})", samples.join(", ")));
            }
            out.push('\n');
        }
        out
    }
}

/// Memory key for an op over a table: description, primary column, and up
/// to 3 sample values of that column.
pub fn memory_key(op: &LogicalOp, t: &Table) -> String {
    let (description, column) = match op {
        LogicalOp::Augment {
            description,
            source_columns,
            new_column,
        } => (
            description.clone(),
            source_columns.first().cloned().unwrap_or_else(|| new_column.clone()),
        ),
        LogicalOp::Normalize {
            description,
            column,
        } => (description.clone(), column.clone()),
        LogicalOp::Filter { columns } => (
            "filter columns".to_string(),
            columns.first().cloned().unwrap_or_default(),
        ),
    };
    let samples = distinct_samples(t, &column, 3);
    format!("{description} | {column} | {}", samples.join(", "))
}

/// The programmer agent for all three pools.
#[derive(Debug, Clone)]
pub struct Programmer<'a> {
    pub assets: &'a PromptAssets,
    /// Demonstration retrieval mode; `None` disables memory use.
    pub memory_mode: Option<RetrievalMode>,
    pub demo_count: usize,
}

impl<'a> Programmer<'a> {
    pub fn new(assets: &'a PromptAssets) -> Programmer<'a> {
        Programmer {
            assets,
            memory_mode: Some(RetrievalMode::Lexical),
            demo_count: DEMO_COUNT,
        }
    }

    fn sample_columns(op: &LogicalOp) -> Vec<String> {
        match op {
            LogicalOp::Augment { source_columns, .. } => source_columns.clone(),
            LogicalOp::Normalize { column, .. } => vec![column.clone()],
            LogicalOp::Filter { .. } => Vec::new(),
        }
    }

    fn pool_text(pool: &[PoolFunction]) -> String {
        pool.iter()
            .map(|f| format!("- {}: {}", f.signature_line(), f.usage))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// The generation prompt. Public surface is the returned messages so
    /// the token-economy property (row-count independence) is testable.
    pub fn generation_prompt(
        &self,
        op: &LogicalOp,
        question: &str,
        t: &Table,
        memory: &MemoryPool,
    ) -> Vec<Message> {
        let pool = pool_for(op);
        let mut user = String::new();
        user.push_str(&format!("Operation: {}\n", op.describe()));
        user.push_str(&format!("Question: {question}\n"));
        user.push_str(&format!(
            "Available columns: {}\n",
            t.column_names().join(", ")
        ));
        for col in Self::sample_columns(op) {
            user.push_str(&format!(
                "Values of {col}: {}\n",
                distinct_samples(t, &col, SAMPLE_VALUES).join(", ")
            ));
        }
        user.push_str(&format!("Function pool:\n{}\n", Self::pool_text(pool)));
        if let Some(mode) = self.memory_mode {
            let demos = memory.retrieve(&memory_key(op, t), self.demo_count, mode);
            for demo in demos {
                user.push_str(&format!(
                    "Past success for a similar need ({}):\n{}\n",
                    demo.key, demo.payload
                ));
            }
        }
        user.push_str("Reply with the two-line encoding.\n");
        vec![
            Message::system(self.assets.programmer_system.clone()),
            Message::user(user),
        ]
    }

    fn decode_response(
        op: &LogicalOp,
        provenance: Provenance,
        response: &str,
    ) -> Option<PhysicalOp> {
        let (function, args) = decode_call(response, pool_for(op)).ok()?;
        let physical = PhysicalOp {
            function,
            args,
            implements: op.clone(),
            provenance,
        };
        // A transform argument that is raw text failing the expression
        // grammar is a format failure, not a repairable op.
        let pool = pool_for(op);
        if let Some(func) = crate::plan::lookup(pool, &physical.function) {
            for (key, value) in &physical.args {
                if let (Some(spec), ArgValue::Raw(raw)) = (func.arg(key), value) {
                    if matches!(spec.kind, ArgKind::Transform(_)) {
                        if let Some(src) = raw.as_str() {
                            if texpr::parse_transform(src).is_err() {
                                return None;
                            }
                        }
                    }
                }
            }
        }
        Some(physical)
    }

    /// Select a pool function and infer its arguments for one logical op.
    /// One format retry on an unparseable response.
    pub fn generate_physical(
        &self,
        op: &LogicalOp,
        question: &str,
        t: &Table,
        memory: &MemoryPool,
        session: &Session,
        tag: &str,
    ) -> Result<PhysicalOp, ProgrammerError> {
        let messages = self.generation_prompt(op, question, t, memory);
        let first = session.complete(&ChatRequest::new(tag, messages.clone()))?;
        if let Some(p) = Self::decode_response(op, Provenance::Selected, &first) {
            return Ok(p);
        }
        let mut retry_messages = messages;
        retry_messages.push(Message::assistant(first));
        retry_messages.push(Message::user(
            "That did not follow the two-line encoding. Reply with exactly:\n\
             function: <name>\nargs: <single-line JSON object>",
        ));
        let second =
            session.complete(&ChatRequest::new(format!("{tag}.retry"), retry_messages))?;
        Self::decode_response(op, Provenance::Selected, &second)
            .ok_or(ProgrammerError::PhysicalParseFailure { raw: second })
    }

    /// Re-emit a corrected op in response to an error report. The function
    /// may change within the same pool; the logical op never changes.
    pub fn repair(
        &self,
        p: &PhysicalOp,
        report: &ErrorReport,
        question: &str,
        t: &Table,
        session: &Session,
        round: u32,
        tag: &str,
    ) -> Result<PhysicalOp, ProgrammerError> {
        let pool = pool_for(&p.implements);
        let mut user = String::new();
        user.push_str(&format!("Operation: {}\n", p.implements.describe()));
        user.push_str(&format!("Question: {question}\n"));
        user.push_str(&format!(
            "Available columns: {}\n",
            t.column_names().join(", ")
        ));
        for col in Self::sample_columns(&p.implements) {
            user.push_str(&format!(
                "Values of {col}: {}\n",
                distinct_samples(t, &col, SAMPLE_VALUES).join(", ")
            ));
        }
        user.push_str(&format!(
            "This attempt:\n{}\nfailed {} with:\n{}",
            p.encode(),
            match report.phase {
                Phase::Precheck => "pre-diagnosis",
                Phase::Runtime => "during execution",
            },
            report.render()
        ));
        user.push_str(&format!("Function pool:\n{}\n", Self::pool_text(pool)));
        user.push_str(
            "Re-emit a corrected operation in the same two-line encoding. You may pick a \
             different function from the pool.\n",
        );
        let messages = vec![
            Message::system(self.assets.programmer_system.clone()),
            Message::user(user),
        ];
        let provenance = Provenance::Repaired { round };
        let first = session.complete(&ChatRequest::new(tag, messages.clone()))?;
        if let Some(fixed) = Self::decode_response(&p.implements, provenance, &first) {
            return Ok(fixed);
        }
        let mut retry_messages = messages;
        retry_messages.push(Message::assistant(first));
        retry_messages.push(Message::user(
            "That did not follow the two-line encoding. Reply with exactly:\n\
             function: <name>\nargs: <single-line JSON object>",
        ));
        let second =
            session.complete(&ChatRequest::new(format!("{tag}.retry"), retry_messages))?;
        Self::decode_response(&p.implements, provenance, &second)
            .ok_or(ProgrammerError::PhysicalParseFailure { raw: second })
    }

    /// Model-complete the cells deterministic functions could not process.
    /// One prompt carries up to 8 succeeded (input -> output) pairs plus
    /// the failed inputs; the response format is one `row <idx>: <value>`
    /// line per failed row. Unmatched rows stay Null and are reported.
    pub fn infer_cells(
        &self,
        request: &InferRequest,
        session: &Session,
        tag: &str,
    ) -> Result<InferOutcome, ProgrammerError> {
        let mut user = String::new();
        user.push_str(&format!(
            "Deduce the {} value for each remaining row of column {:?}.\n",
            match request.pool {
                Pool::Norm => "normalized",
                _ => "new",
            },
            request.column_label,
        ));
        if !request.succeeded.is_empty() {
            user.push_str("Rows already processed successfully (input -> output):\n");
            for (input, output) in request.succeeded.iter().take(INFER_DEMO_LIMIT) {
                user.push_str(&format!("  {:?} -> {:?}\n", input, output.render()));
            }
        }
        user.push_str("Rows to complete:\n");
        for (row, input) in request.failed {
            user.push_str(&format!("  row {row}: {input:?}\n"));
        }
        user.push_str("Reply with one line per row, formatted exactly as: row <idx>: <value>\n");
        let messages = vec![Message::user(user)];
        let response = session.complete(&ChatRequest::new(tag, messages))?;
        Ok(parse_infer_response(&response, request))
    }
}

/// Numeric expectation for inferred values, derived from the outputs that
/// already succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericHint {
    None,
    Int,
    Float,
}

pub fn numeric_hint(succeeded: &[(String, Value)]) -> NumericHint {
    if succeeded.is_empty() {
        return NumericHint::None;
    }
    let mut hint = NumericHint::Int;
    for (_, v) in succeeded {
        match v {
            Value::Int(_) => {}
            Value::Float(_) => hint = NumericHint::Float,
            _ => return NumericHint::None,
        }
    }
    hint
}

#[derive(Debug, Clone)]
pub struct InferRequest<'x> {
    pub pool: Pool,
    pub column_label: String,
    /// Rendered input and the produced output value, for demonstrations.
    pub succeeded: &'x [(String, Value)],
    /// (row index, rendered input) for each cell to complete.
    pub failed: &'x [(usize, String)],
    pub hint: NumericHint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferOutcome {
    /// Parsed values for the rows the response covered.
    pub values: Vec<(usize, Value)>,
    /// Failed rows the response did not cover; they stay Null.
    pub unmatched: Vec<usize>,
}

fn parse_infer_value(text: &str, hint: NumericHint) -> Value {
    let text = text.trim();
    let unquoted = text.trim_matches(|c| c == '"' || c == '\'');
    match hint {
        NumericHint::Int => {
            if let Ok(i) = unquoted.parse::<i64>() {
                return Value::Int(i);
            }
            if let Ok(f) = unquoted.parse::<f64>() {
                if f.is_finite() {
                    return Value::Float(f);
                }
            }
            Value::Str(unquoted.to_string())
        }
        NumericHint::Float => {
            if let Ok(f) = unquoted.parse::<f64>() {
                if f.is_finite() {
                    return Value::Float(f);
                }
            }
            Value::Str(unquoted.to_string())
        }
        NumericHint::None => Value::Str(unquoted.to_string()),
    }
}

fn parse_infer_response(response: &str, request: &InferRequest) -> InferOutcome {
    let line_re = regex::Regex::new(r"(?i)^row\s+(\d+)\s*:\s*(.*)$").expect("static regex");
    let mut provided: Vec<(usize, Value)> = Vec::new();
    for raw in response.lines() {
        let line = raw.trim().trim_start_matches(['-', '*']).trim();
        if let Some(caps) = line_re.captures(line) {
            if let Ok(row) = caps[1].parse::<usize>() {
                provided.push((row, parse_infer_value(&caps[2], request.hint)));
            }
        }
    }
    let mut values = Vec::new();
    let mut unmatched = Vec::new();
    for (row, _) in request.failed {
        match provided.iter().find(|(r, _)| r == row) {
            Some((_, v)) => values.push((*row, v.clone())),
            None => unmatched.push(*row),
        }
    }
    InferOutcome { values, unmatched }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ReplayProvider, Transcript, TranscriptEntry};
    use crate::plan::precheck;
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
            ],
            true,
        )
        .unwrap()
    }

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

    fn augment_country() -> LogicalOp {
        LogicalOp::Augment {
            description: "Extract country code".to_string(),
            source_columns: vec!["Cyclist".to_string()],
            new_column: "Country".to_string(),
        }
    }

    const EXTRACT_RESPONSE: &str = "function: extract\nargs: {\"column\": \"Cyclist\", \"func\": \"lambda x: re.search(r'\\\\((.*?)\\\\)',x).group(1)\"}";

    #[test]
    fn generate_physical_decodes_extract() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let provider = scripted(&[("programmer.augment.0", EXTRACT_RESPONSE)]);
        let session = Session::new(&provider);
        let memory = MemoryPool::new();
        let op = programmer
            .generate_physical(
                &augment_country(),
                "q",
                &cyclist_table(),
                &memory,
                &session,
                "programmer.augment.0",
            )
            .unwrap();
        assert_eq!(op.function, "extract");
        assert_eq!(op.provenance, Provenance::Selected);
        assert!(precheck(&op, &cyclist_table()).is_empty());
        match &op.args["func"] {
            ArgValue::Transform { expr, .. } => assert_eq!(expr.mode, texpr::Mode::Scalar),
            other => panic!("expected parsed transform, got {other:?}"),
        }
    }

    #[test]
    fn generate_physical_retries_on_format_failure() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let provider = scripted(&[
            ("programmer.augment.0", "I suggest using extract."),
            ("programmer.augment.0.retry", EXTRACT_RESPONSE),
        ]);
        let session = Session::new(&provider);
        let memory = MemoryPool::new();
        let op = programmer
            .generate_physical(
                &augment_country(),
                "q",
                &cyclist_table(),
                &memory,
                &session,
                "programmer.augment.0",
            )
            .unwrap();
        assert_eq!(op.function, "extract");
        assert_eq!(session.stats().calls, 2);
    }

    #[test]
    fn generate_physical_fails_after_retry() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let provider = scripted(&[
            ("programmer.augment.0", "no"),
            ("programmer.augment.0.retry", "still no"),
        ]);
        let session = Session::new(&provider);
        let memory = MemoryPool::new();
        let err = programmer
            .generate_physical(
                &augment_country(),
                "q",
                &cyclist_table(),
                &memory,
                &session,
                "programmer.augment.0",
            )
            .unwrap_err();
        assert!(matches!(err, ProgrammerError::PhysicalParseFailure { .. }));
    }

    #[test]
    fn malformed_transform_counts_as_format_failure() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let bad = "function: extract\nargs: {\"column\": \"Cyclist\", \"func\": \"lambda x: x[\"}";
        let provider = scripted(&[
            ("programmer.augment.0", bad),
            ("programmer.augment.0.retry", EXTRACT_RESPONSE),
        ]);
        let session = Session::new(&provider);
        let memory = MemoryPool::new();
        let op = programmer
            .generate_physical(
                &augment_country(),
                "q",
                &cyclist_table(),
                &memory,
                &session,
                "programmer.augment.0",
            )
            .unwrap();
        // parse failures never escape this module
        match &op.args["func"] {
            ArgValue::Transform { .. } => {}
            other => panic!("expected parsed transform, got {other:?}"),
        }
    }

    #[test]
    fn repair_keeps_logical_op_and_sets_provenance() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let provider = scripted(&[("programmer.augment.0", EXTRACT_RESPONSE)]);
        let session = Session::new(&provider);
        let memory = MemoryPool::new();
        let op = programmer
            .generate_physical(
                &augment_country(),
                "q",
                &cyclist_table(),
                &memory,
                &session,
                "programmer.augment.0",
            )
            .unwrap();

        let guarded = "function: extract\nargs: {\"column\": \"Cyclist\", \"func\": \"lambda x: re.search(r'\\\\((.*?)\\\\)',x).group(1) if '(' in x and ')' in x else x.split(' ')[-1]\"}";
        let provider = scripted(&[("programmer.augment.0.repair1", guarded)]);
        let session = Session::new(&provider);
        let report = ErrorReport {
            phase: Phase::Runtime,
            items: vec![ReportItem {
                kind: ReportKind::Eval,
                message: "cannot call method 'group' on None".to_string(),
                sample_inputs: vec![SampleInput {
                    row: 1,
                    value: "Dav. ITA".to_string(),
                }],
            }],
        };
        let fixed = programmer
            .repair(
                &op,
                &report,
                "q",
                &cyclist_table(),
                &session,
                1,
                "programmer.augment.0.repair1",
            )
            .unwrap();
        assert_eq!(fixed.implements, op.implements);
        assert_eq!(fixed.provenance, Provenance::Repaired { round: 1 });
    }

    #[test]
    fn repair_prompt_carries_samples_and_original_op() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let provider = scripted(&[("p", EXTRACT_RESPONSE)]);
        let session = Session::new(&provider);
        let memory = MemoryPool::new();
        let op = programmer
            .generate_physical(&augment_country(), "q", &cyclist_table(), &memory, &session, "p")
            .unwrap();
        let report = ErrorReport {
            phase: Phase::Runtime,
            items: vec![ReportItem {
                kind: ReportKind::Eval,
                message: "boom".to_string(),
                sample_inputs: vec![SampleInput {
                    row: 1,
                    value: "Dav. ITA".to_string(),
                }],
            }],
        };
        // capture the prompt through the recording session
        let echo = crate::gateway::FnProvider(|r: &ChatRequest| {
            Ok(format!("saw:{}", r.messages.last().unwrap().content.len()))
        });
        let session2 = Session::new(&echo);
        let _ = programmer.repair(&op, &report, "q", &cyclist_table(), &session2, 1, "r");
        let recorded = session2.recording();
        // the request was recorded; inspect the prompt we sent
        assert_eq!(recorded.entries.len(), 2); // first + format retry (echo response is unparseable)
        let digest_differs = recorded.entries[0].request_digest != recorded.entries[1].request_digest;
        assert!(digest_differs);
    }

    #[test]
    fn infer_parses_row_lines_with_numeric_hint() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let provider = scripted(&[("programmer.normalize.1.infer", "row 2: 2")]);
        let session = Session::new(&provider);
        let succeeded = vec![
            ("\"2\"".to_string(), Value::Int(2)),
            ("1".to_string(), Value::Int(1)),
        ];
        let failed = vec![(2usize, "2*".to_string())];
        let request = InferRequest {
            pool: Pool::Norm,
            column_label: "Medal".to_string(),
            succeeded: &succeeded,
            failed: &failed,
            hint: numeric_hint(&succeeded),
        };
        let outcome = programmer
            .infer_cells(&request, &session, "programmer.normalize.1.infer")
            .unwrap();
        assert_eq!(outcome.values, vec![(2, Value::Int(2))]);
        assert!(outcome.unmatched.is_empty());
    }

    #[test]
    fn infer_with_no_demos_still_prompts() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let provider = scripted(&[("t.infer", "row 0: 0")]);
        let session = Session::new(&provider);
        let failed = vec![(0usize, "?".to_string())];
        let request = InferRequest {
            pool: Pool::Aug,
            column_label: "X".to_string(),
            succeeded: &[],
            failed: &failed,
            hint: NumericHint::None,
        };
        let outcome = programmer.infer_cells(&request, &session, "t.infer").unwrap();
        assert_eq!(outcome.values, vec![(0, Value::Str("0".to_string()))]);
        assert_eq!(session.stats().calls, 1);
    }

    #[test]
    fn infer_reports_unmatched_rows() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let provider = scripted(&[("t.infer", "row 1: fine\ngarbage line")]);
        let session = Session::new(&provider);
        let failed = vec![(1usize, "a".to_string()), (3usize, "b".to_string())];
        let request = InferRequest {
            pool: Pool::Norm,
            column_label: "C".to_string(),
            succeeded: &[],
            failed: &failed,
            hint: NumericHint::None,
        };
        let outcome = programmer.infer_cells(&request, &session, "t.infer").unwrap();
        assert_eq!(outcome.values.len(), 1);
        assert_eq!(outcome.unmatched, vec![3]);
    }

    #[test]
    fn generation_prompt_is_row_count_independent() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let memory = MemoryPool::new();
        let small = from_rows(
            &strs(&["Cyclist"]),
            &(0..5)
                .map(|i| strs(&[&format!("rider {i}")]))
                .collect::<Vec<_>>(),
            true,
        )
        .unwrap();
        let mut rows: Vec<Vec<String>> = Vec::new();
        for i in 0..500 {
            // same 20 distinct values, repeated
            rows.push(strs(&[&format!("rider {}", i % 5)]));
        }
        let large = from_rows(&strs(&["Cyclist"]), &rows, true).unwrap();
        let op = augment_country();
        let p_small = programmer.generation_prompt(&op, "q", &small, &memory);
        let p_large = programmer.generation_prompt(&op, "q", &large, &memory);
        assert_eq!(
            crate::gateway::estimate_tokens(&p_small),
            crate::gateway::estimate_tokens(&p_large)
        );
    }

    #[test]
    fn memory_demos_enter_the_prompt() {
        let assets = PromptAssets::builtin();
        let programmer = Programmer::new(&assets);
        let mut memory = MemoryPool::new();
        memory.admit(crate::memory::MemoryRecord {
            key: "Extract country code | Cyclist | Alej (ESP)".to_string(),
            payload: EXTRACT_RESPONSE.to_string(),
            outcome: crate::memory::Outcome::Succeeded,
            timestamp: 1,
        });
        let msgs = programmer.generation_prompt(&augment_country(), "q", &cyclist_table(), &memory);
        let text: String = msgs.iter().map(|m| m.content.clone()).collect();
        assert!(text.contains("Past success"));
        assert!(text.contains("function: extract"));
    }
}
