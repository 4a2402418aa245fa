//! The formalization pipeline: a formalizer writes a data structure and a
//! validator, the front end compiles them, the solver fills in the solution
//! and the result is formatted. Any failure restarts from the data structure
//! step without feedback to the formalizer.

mod evaluate;
mod llm;
mod transcript;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::frontend::{compile, FrontendError, SourceText};
use crate::model::{decode, lower, Cell, SolutionTable};
use crate::solver::{find_second, solve, Budget, SolveError, SolveStatus};

pub use evaluate::{check_solution, ShapeError};
pub use llm::{extract_code_block, LlmClientConfig, LlmFormalizer};
pub use transcript::{
    Fault, FaultInjector, RecordingFormalizer, ReplayFormalizer, Response as TranscriptResponse,
    Step as TranscriptStep, TranscriptEntry, TranscriptError,
};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FormalizerError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no code block in reply")]
    Extraction,
    #[error("formalizer has no more responses")]
    Exhausted,
}

/// Turns puzzle prose into Logic.py source, in two steps.
pub trait Formalizer: Send + Sync {
    fn gen_data_structure(
        &self,
        puzzle: &str,
        format: &OutputFormat,
    ) -> Result<SourceText, FormalizerError>;

    fn gen_constraints(
        &self,
        data_structure: &SourceText,
        puzzle: &str,
    ) -> Result<SourceText, FormalizerError>;
}

impl<F: Formalizer + ?Sized> Formalizer for &F {
    fn gen_data_structure(&self, puzzle: &str, format: &OutputFormat) -> Result<SourceText, FormalizerError> {
        (**self).gen_data_structure(puzzle, format)
    }

    fn gen_constraints(&self, data_structure: &SourceText, puzzle: &str) -> Result<SourceText, FormalizerError> {
        (**self).gen_constraints(data_structure, puzzle)
    }
}

/// Expected output columns, in order. Empty means "the table's own columns".
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFormat {
    #[serde(default)]
    pub columns: Vec<String>,
}

impl OutputFormat {
    pub fn columns<I: IntoIterator<Item = S>, S: Into<String>>(columns: I) -> Self {
        OutputFormat {
            columns: columns.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub max_attempts: u32,
    pub budget: Budget,
    pub ambiguity_check: bool,
    pub format: OutputFormat,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_attempts: 5,
            budget: Budget::default(),
            ambiguity_check: false,
            format: OutputFormat::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PipelineStatus {
    Solved,
    FailedSyntax,
    FailedSemantic,
    FailedUnsat,
    FailedBudget,
    FailedAmbiguous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    DataStructure,
    Constraints,
    Compile,
    Lower,
    Solve,
    Ambiguity,
    Format,
    Solved,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub status: PipelineStatus,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionTable>,
    /// The formatted answer document, present iff solved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
    pub log: Vec<AttemptLog>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("expected output column `{0}` is not in the solution")]
pub struct FormatError(pub String);

/// `{"rows": [{column: value, ...}, ...]}`, rows in table order (by position),
/// columns in descriptor order.
pub fn format_output(table: &SolutionTable, format: &OutputFormat) -> Result<Value, FormatError> {
    let columns: Vec<&String> = if format.columns.is_empty() {
        table.columns.iter().collect()
    } else {
        format.columns.iter().collect()
    };
    let indices: Vec<usize> = columns
        .iter()
        .map(|c| table.column_index(c).ok_or_else(|| FormatError((*c).clone())))
        .collect::<Result<_, _>>()?;
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (name, &i) in columns.iter().zip(&indices) {
                let v = match &row[i] {
                    Cell::Int(v) => Value::from(*v),
                    Cell::Str(s) => Value::from(s.clone()),
                };
                obj.insert((*name).clone(), v);
            }
            Value::Object(obj)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("rows".into(), Value::Array(rows));
    Ok(Value::Object(doc))
}

/// Data structure first, validator second.
pub fn merge_sources(data_structure: &SourceText, constraints: &SourceText) -> SourceText {
    let mut text = data_structure.text.trim_end().to_string();
    text.push_str("\n\n");
    text.push_str(&constraints.text);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    SourceText::new("formalized.py", text)
}

struct Failure {
    stage: Stage,
    status: PipelineStatus,
    error: String,
}

impl Failure {
    fn new(stage: Stage, status: PipelineStatus, error: impl ToString) -> Self {
        Failure {
            stage,
            status,
            error: error.to_string(),
        }
    }
}

pub fn run_pipeline(
    puzzle: &str,
    formalizer: &dyn Formalizer,
    config: &PipelineConfig,
) -> PipelineResult {
    let max_attempts = config.max_attempts.max(1);
    let mut log = Vec::new();
    let mut last = PipelineStatus::FailedSyntax;
    for attempt in 1..=max_attempts {
        match attempt_once(puzzle, formalizer, config) {
            Ok((table, output)) => {
                log.push(AttemptLog {
                    stage: Stage::Solved,
                    error: None,
                });
                return PipelineResult {
                    status: PipelineStatus::Solved,
                    attempts: attempt,
                    solution: Some(table),
                    output: Some(output),
                    log,
                };
            }
            Err(f) => {
                last = f.status;
                log.push(AttemptLog {
                    stage: f.stage,
                    error: Some(f.error),
                });
            }
        }
    }
    PipelineResult {
        status: last,
        attempts: max_attempts,
        solution: None,
        output: None,
        log,
    }
}

fn attempt_once(
    puzzle: &str,
    formalizer: &dyn Formalizer,
    config: &PipelineConfig,
) -> Result<(SolutionTable, Value), Failure> {
    use PipelineStatus::*;
    let data = formalizer
        .gen_data_structure(puzzle, &config.format)
        .map_err(|e| Failure::new(Stage::DataStructure, FailedSyntax, e))?;
    let constraints = formalizer
        .gen_constraints(&data, puzzle)
        .map_err(|e| Failure::new(Stage::Constraints, FailedSyntax, e))?;
    let source = merge_sources(&data, &constraints);
    let checked = compile(&source).map_err(|e| {
        let status = match e {
            FrontendError::Syntax(_) => FailedSyntax,
            FrontendError::Semantic(_) => FailedSemantic,
        };
        Failure::new(Stage::Compile, status, e)
    })?;
    let model = lower(&checked).map_err(|e| Failure::new(Stage::Lower, FailedSemantic, e))?;
    let solve_failure = |e: SolveError| match e {
        SolveError::BudgetExceeded { .. } => Failure::new(Stage::Solve, FailedBudget, e),
        other => Failure::new(Stage::Solve, FailedSemantic, other),
    };
    let outcome = solve(&model, config.budget).map_err(solve_failure)?;
    let assignment = match (outcome.status, outcome.assignment) {
        (SolveStatus::Sat, Some(a)) => a,
        _ => return Err(Failure::new(Stage::Solve, FailedUnsat, "UNSAT")),
    };
    if config.ambiguity_check {
        let report = find_second(&model, &assignment, config.budget).map_err(|e| {
            let mut f = solve_failure(e);
            f.stage = Stage::Ambiguity;
            f
        })?;
        if report.second.is_some() {
            return Err(Failure::new(Stage::Ambiguity, FailedAmbiguous, "a second solution exists"));
        }
    }
    let table = decode(&model, &assignment.vars).map_err(|e| Failure::new(Stage::Solve, FailedSemantic, e))?;
    let output =
        format_output(&table, &config.format).map_err(|e| Failure::new(Stage::Format, FailedSemantic, e))?;
    Ok((table, output))
}
