//! Formalizer wrappers: transcript recording, transcript replay, and fault
//! injection for exercising the retry edges.

use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Formalizer, FormalizerError, OutputFormat};
use crate::frontend::SourceText;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    DataStructure,
    Constraints,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Source { origin: String, text: String },
    Transport(String),
    Extraction,
    Exhausted,
}

impl From<&Result<SourceText, FormalizerError>> for Response {
    fn from(r: &Result<SourceText, FormalizerError>) -> Self {
        match r {
            Ok(s) => Response::Source {
                origin: s.origin.clone(),
                text: s.text.clone(),
            },
            Err(FormalizerError::Transport(m)) => Response::Transport(m.clone()),
            Err(FormalizerError::Extraction) => Response::Extraction,
            Err(FormalizerError::Exhausted) => Response::Exhausted,
        }
    }
}

impl From<Response> for Result<SourceText, FormalizerError> {
    fn from(r: Response) -> Self {
        match r {
            Response::Source { origin, text } => Ok(SourceText::new(origin, text)),
            Response::Transport(m) => Err(FormalizerError::Transport(m)),
            Response::Extraction => Err(FormalizerError::Extraction),
            Response::Exhausted => Err(FormalizerError::Exhausted),
        }
    }
}

/// One formalizer call. `input` is the puzzle text for the data-structure
/// step and the data-structure source for the constraints step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: Step,
    pub input: String,
    pub response: Response,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Appends every call of the wrapped formalizer to a JSONL sink.
pub struct RecordingFormalizer<F> {
    inner: F,
    sink: Mutex<Box<dyn Write + Send>>,
}

impl<F: Formalizer> RecordingFormalizer<F> {
    pub fn new(inner: F, sink: Box<dyn Write + Send>) -> Self {
        RecordingFormalizer {
            inner,
            sink: Mutex::new(sink),
        }
    }

    fn record(&self, step: Step, input: &str, result: &Result<SourceText, FormalizerError>) {
        let entry = TranscriptEntry {
            step,
            input: input.to_string(),
            response: result.into(),
        };
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        if let Ok(line) = serde_json::to_string(&entry) {
            let _ = writeln!(sink, "{line}");
            let _ = sink.flush();
        }
    }
}

impl<F: Formalizer> Formalizer for RecordingFormalizer<F> {
    fn gen_data_structure(&self, puzzle: &str, format: &OutputFormat) -> Result<SourceText, FormalizerError> {
        let r = self.inner.gen_data_structure(puzzle, format);
        self.record(Step::DataStructure, puzzle, &r);
        r
    }

    fn gen_constraints(&self, data_structure: &SourceText, puzzle: &str) -> Result<SourceText, FormalizerError> {
        let r = self.inner.gen_constraints(data_structure, puzzle);
        self.record(Step::Constraints, &data_structure.text, &r);
        r
    }
}

/// Serves recorded responses in order. A call whose step does not match the
/// next entry, or a call past the end, gets `Exhausted`.
pub struct ReplayFormalizer {
    entries: Mutex<VecDeque<TranscriptEntry>>,
}

impl ReplayFormalizer {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        ReplayFormalizer {
            entries: Mutex::new(entries.into()),
        }
    }

    pub fn from_jsonl(reader: impl BufRead) -> Result<Self, TranscriptError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line).map_err(|e| TranscriptError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(ReplayFormalizer::new(entries))
    }

    fn next(&self, step: Step) -> Result<SourceText, FormalizerError> {
        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        match entries.front() {
            Some(e) if e.step == step => entries.pop_front().expect("front exists").response.into(),
            _ => Err(FormalizerError::Exhausted),
        }
    }
}

impl Formalizer for ReplayFormalizer {
    fn gen_data_structure(&self, _: &str, _: &OutputFormat) -> Result<SourceText, FormalizerError> {
        self.next(Step::DataStructure)
    }

    fn gen_constraints(&self, _: &SourceText, _: &str) -> Result<SourceText, FormalizerError> {
        self.next(Step::Constraints)
    }
}

/// A corruption applied to one attempt's validator source.
#[derive(Clone)]
pub enum Fault {
    /// Pass the inner formalizer's output through.
    None,
    /// Replace the validator with text that does not parse.
    Garbage,
    /// Fail the call as a transport error.
    Transport,
    /// Rewrite the validator source.
    Rewrite(Arc<dyn Fn(&str) -> String + Send + Sync>),
}

impl std::fmt::Debug for Fault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Fault::None => "None",
            Fault::Garbage => "Garbage",
            Fault::Transport => "Transport",
            Fault::Rewrite(_) => "Rewrite",
        })
    }
}

/// Applies one queued fault per attempt (per `gen_constraints` call), then
/// `then` for every later attempt.
pub struct FaultInjector<F> {
    inner: F,
    queue: Mutex<VecDeque<Fault>>,
    then: Fault,
}

impl<F: Formalizer> FaultInjector<F> {
    pub fn new(inner: F, faults: Vec<Fault>, then: Fault) -> Self {
        FaultInjector {
            inner,
            queue: Mutex::new(faults.into()),
            then,
        }
    }

    /// Fails the first `n` attempts with `fault`, then behaves like `inner`.
    pub fn first(inner: F, n: usize, fault: Fault) -> Self {
        FaultInjector::new(inner, vec![fault; n], Fault::None)
    }

    pub fn always(inner: F, fault: Fault) -> Self {
        FaultInjector::new(inner, Vec::new(), fault)
    }
}

impl<F: Formalizer> Formalizer for FaultInjector<F> {
    fn gen_data_structure(&self, puzzle: &str, format: &OutputFormat) -> Result<SourceText, FormalizerError> {
        self.inner.gen_data_structure(puzzle, format)
    }

    fn gen_constraints(&self, data_structure: &SourceText, puzzle: &str) -> Result<SourceText, FormalizerError> {
        let fault = {
            let mut q = self.queue.lock().unwrap_or_else(|e| e.into_inner());
            q.pop_front().unwrap_or_else(|| self.then.clone())
        };
        let source = self.inner.gen_constraints(data_structure, puzzle)?;
        match fault {
            Fault::None => Ok(source),
            Fault::Garbage => Ok(SourceText::new(
                source.origin,
                "def validate(solution PuzzleSolution) -> None\n  assert (\n",
            )),
            Fault::Transport => Err(FormalizerError::Transport("injected".into())),
            Fault::Rewrite(f) => {
                let text = f(&source.text);
                Ok(SourceText::new(source.origin, text))
            }
        }
    }
}
