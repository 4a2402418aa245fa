use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::OutputFormat;
use crate::model::SolutionTable;

/// One benchmark task, one JSON object per line of a dataset file:
/// `{"id", "size": "4x4", "puzzle", "format": {"columns": [...]}, "truth"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuzzleTask {
    pub id: String,
    pub size: String,
    pub puzzle: String,
    #[serde(default)]
    pub format: OutputFormat,
    pub truth: SolutionTable,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no line of the dataset is valid; first error: {}", .0[0])]
    AllLinesFailed(Vec<SchemaError>),
}

/// Tasks from the well-formed lines plus one error per malformed line.
pub fn parse_dataset(text: &str) -> Result<(Vec<PuzzleTask>, Vec<SchemaError>), DatasetError> {
    let mut tasks = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PuzzleTask>(line) {
            Ok(task) => tasks.push(task),
            Err(e) => errors.push(SchemaError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    if tasks.is_empty() && !errors.is_empty() {
        return Err(DatasetError::AllLinesFailed(errors));
    }
    Ok((tasks, errors))
}

pub fn load_dataset(path: &Path) -> Result<(Vec<PuzzleTask>, Vec<SchemaError>), DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text)
}
