use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::parse_size;
use crate::agent::PipelineStatus;
use crate::model::{Cell, SolutionTable};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskResult {
    pub id: String,
    pub size: String,
    pub status: PipelineStatus,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<SolutionTable>,
    pub truth: SolutionTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    Easy,
    Hard,
}

const EASY: &[(usize, usize)] = &[(2, 3), (2, 4), (2, 5), (2, 6), (3, 2), (3, 3)];

/// Easy/hard class of an `entities x features` size; sizes on neither list
/// (such as 2x2) are unclassified.
pub fn classify(entities: usize, features: usize) -> Option<ShapeClass> {
    if EASY.contains(&(entities, features)) {
        return Some(ShapeClass::Easy);
    }
    let hard = match entities {
        3 => (4..=6).contains(&features),
        4..=6 => (2..=6).contains(&features),
        _ => false,
    };
    hard.then_some(ShapeClass::Hard)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub tasks: usize,
    pub puzzle_accuracy: f64,
    pub cell_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tasks: usize,
    pub puzzle_accuracy: f64,
    pub cell_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub easy: Option<SplitReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard: Option<SplitReport>,
    /// Task count per pipeline status.
    pub statuses: BTreeMap<String, usize>,
    pub wall_clock_secs: f64,
    pub results: Vec<TaskResult>,
}

impl EvalReport {
    /// The report with timing zeroed, for comparing runs.
    pub fn without_timing(&self) -> EvalReport {
        EvalReport {
            wall_clock_secs: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("cannot score an empty result list")]
pub struct EmptyInput;

/// Cells keyed by (position value, column), excluding the position column;
/// without a position column rows are keyed by index.
fn cells(table: &SolutionTable) -> HashMap<(Cell, String), Cell> {
    let pos = table.position_index();
    let mut out = HashMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        let key = match pos {
            Some(p) => row[p].clone(),
            None => Cell::Int(i as i64),
        };
        for (c, name) in table.columns.iter().enumerate() {
            if Some(c) != pos {
                if let Some(v) = row.get(c) {
                    out.insert((key.clone(), name.clone()), v.clone());
                }
            }
        }
    }
    out
}

/// (correct cells, total cells)
fn cell_counts(r: &TaskResult) -> (usize, usize) {
    let truth = cells(&r.truth);
    let correct = match &r.predicted {
        None => 0,
        Some(p) => {
            let pred = cells(p);
            truth.iter().filter(|(k, v)| pred.get(*k) == Some(*v)).count()
        }
    };
    (correct, truth.len())
}

fn accuracies<'a>(results: impl Iterator<Item = &'a TaskResult>) -> Option<SplitReport> {
    let (mut n, mut solved, mut correct, mut total) = (0, 0, 0, 0);
    for r in results {
        let (c, t) = cell_counts(r);
        n += 1;
        solved += (c == t && r.predicted.is_some()) as usize;
        correct += c;
        total += t;
    }
    (n > 0).then(|| SplitReport {
        tasks: n,
        puzzle_accuracy: solved as f64 / n as f64,
        cell_accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
    })
}

pub fn score(results: &[TaskResult]) -> Result<EvalReport, EmptyInput> {
    let all = accuracies(results.iter()).ok_or(EmptyInput)?;
    let class = |r: &TaskResult| parse_size(&r.size).and_then(|(e, f)| classify(e, f));
    let mut statuses = BTreeMap::new();
    for r in results {
        *statuses.entry(format!("{:?}", r.status)).or_insert(0) += 1;
    }
    Ok(EvalReport {
        tasks: all.tasks,
        puzzle_accuracy: all.puzzle_accuracy,
        cell_accuracy: all.cell_accuracy,
        easy: accuracies(results.iter().filter(|r| class(r) == Some(ShapeClass::Easy))),
        hard: accuracies(results.iter().filter(|r| class(r) == Some(ShapeClass::Hard))),
        statuses,
        wall_clock_secs: 0.0,
        results: results.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_lists() {
        assert_eq!(classify(3, 3), Some(ShapeClass::Easy));
        assert_eq!(classify(3, 4), Some(ShapeClass::Hard));
        assert_eq!(classify(2, 6), Some(ShapeClass::Easy));
        assert_eq!(classify(4, 2), Some(ShapeClass::Hard));
        assert_eq!(classify(6, 6), Some(ShapeClass::Hard));
        assert_eq!(classify(2, 2), None);
        assert_eq!(classify(3, 1), None);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(score(&[]), Err(EmptyInput));
    }
}
