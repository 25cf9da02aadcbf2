//! Question-aware data preparation engine for tabular question answering.
//!
//! Given a natural-language question and a table, the pipeline plans
//! high-level prep operations (Augment / Normalize / Filter), compiles them
//! into typed function-pool calls, executes them with a bounded repair loop,
//! and answers the question by running a generated SQL query over the
//! prepared table.

pub mod gateway;
pub mod memory;
pub mod plan;
pub mod planner;
pub mod programmer;
pub mod prep;
pub mod sql;
pub mod table;
pub mod texpr;
pub mod tokens;
