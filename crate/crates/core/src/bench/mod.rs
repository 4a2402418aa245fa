//! Logic-grid puzzles: generation with certified uniqueness, rendering to
//! prose and to Logic.py, dataset loading, scoring and the benchmark runner.

mod dataset;
mod generate;
mod render;
mod run;
mod score;

use serde::{Deserialize, Serialize};

use crate::model::SolutionTable;

pub use dataset::{load_dataset, parse_dataset, DatasetError, PuzzleTask, SchemaError};
pub use generate::{generate_puzzle, paper_instance, GenerationError, FEATURE_POOLS};
pub use render::{parse_text, render_dsl, render_dsl_parts, render_text, OracleFormalizer, ParseError};
pub use run::{results_path, run_bench, BenchConfig, BenchError, FormalizerChoice, GenSpec, TaskSource};
pub use score::{classify, score, EmptyInput, EvalReport, ShapeClass, SplitReport, TaskResult};

/// Name of the position column in generated puzzles.
pub const POSITION: &str = "house";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub values: Vec<String>,
}

/// `feature = value`, identifying one entity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attr {
    pub feature: String,
    pub value: String,
}

impl Attr {
    pub fn new(feature: impl Into<String>, value: impl Into<String>) -> Self {
        Attr {
            feature: feature.into(),
            value: value.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Clue {
    SamePerson { a: Attr, b: Attr },
    AtPosition { attr: Attr, pos: i64 },
    NotAtPosition { attr: Attr, pos: i64 },
    DirectlyLeft { a: Attr, b: Attr },
    LeftOf { a: Attr, b: Attr },
    NextTo { a: Attr, b: Attr },
}

impl Clue {
    /// Whether the clue holds in `table` (rows carry the position column).
    pub fn holds(&self, table: &SolutionTable) -> bool {
        let pos_of = |a: &Attr| -> Option<i64> {
            let f = table.column_index(&a.feature)?;
            let p = table.position_index()?;
            let row = table
                .rows
                .iter()
                .find(|r| matches!(&r[f], crate::model::Cell::Str(s) if *s == a.value))?;
            match row[p] {
                crate::model::Cell::Int(v) => Some(v),
                _ => None,
            }
        };
        let pair = |a: &Attr, b: &Attr| pos_of(a).zip(pos_of(b));
        match self {
            Clue::SamePerson { a, b } => pair(a, b).is_some_and(|(x, y)| x == y),
            Clue::AtPosition { attr, pos } => pos_of(attr) == Some(*pos),
            Clue::NotAtPosition { attr, pos } => pos_of(attr).is_some_and(|x| x != *pos),
            Clue::DirectlyLeft { a, b } => pair(a, b).is_some_and(|(x, y)| x == y - 1),
            Clue::LeftOf { a, b } => pair(a, b).is_some_and(|(x, y)| x < y),
            Clue::NextTo { a, b } => pair(a, b).is_some_and(|(x, y)| (x - y).abs() == 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuzzleInstance {
    pub id: String,
    pub n_entities: usize,
    pub n_features: usize,
    pub features: Vec<Feature>,
    pub clues: Vec<Clue>,
    pub text: String,
    pub truth: SolutionTable,
}

impl PuzzleInstance {
    pub fn size(&self) -> String {
        format!("{}x{}", self.n_entities, self.n_features)
    }

    /// Expected output columns: position first, then the features.
    pub fn columns(&self) -> Vec<String> {
        std::iter::once(POSITION.to_string())
            .chain(self.features.iter().map(|f| f.name.clone()))
            .collect()
    }

    pub fn to_task(&self) -> PuzzleTask {
        PuzzleTask {
            id: self.id.clone(),
            size: self.size(),
            puzzle: self.text.clone(),
            format: crate::agent::OutputFormat {
                columns: self.columns(),
            },
            truth: self.truth.clone(),
        }
    }
}

/// Parses `"4x4"` (also accepts `×`) into (entities, features).
pub fn parse_size(size: &str) -> Option<(usize, usize)> {
    let (e, f) = size.split_once(['x', 'X', '×'])?;
    Some((e.trim().parse().ok()?, f.trim().parse().ok()?))
}
