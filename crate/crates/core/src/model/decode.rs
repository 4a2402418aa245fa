use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConstraintModel, VarDomain};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Str(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Str(s) => f.write_str(s),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

/// One row per record, one column per record field.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SolutionTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Column that orders the rows and identifies them for cell scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_column: Option<String>,
}

impl SolutionTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn position_index(&self) -> Option<usize> {
        self.column_index(self.position_column.as_deref()?)
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.column_index(column)?)
    }
}

impl fmt::Display for SolutionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|c| c.to_string()).collect())
            .collect();
        for row in &rendered {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            writeln!(f, "| {} |", parts.join(" | "))
        };
        line(f, &self.columns)?;
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        writeln!(f, "|-{}-|", rule.join("-|-"))?;
        for row in &rendered {
            line(f, row)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("assignment has no value for var {0}")]
    MissingVar(usize),
    #[error("value {value} is outside the domain of `{var}`")]
    OutOfDomain { var: String, value: i64 },
    #[error("table does not match the model: {0}")]
    Shape(String),
}

/// Decodes regular-var values into a table. Rows are ordered by the position
/// field when the model has one, else by instance index.
pub fn decode(model: &ConstraintModel, values: &[i64]) -> Result<SolutionTable, DecodeError> {
    if values.len() < model.vars.len() {
        return Err(DecodeError::MissingVar(values.len()));
    }
    let layout = &model.layout;
    let mut rows = Vec::with_capacity(layout.instances.len());
    for instance in &layout.instances {
        let mut row = Vec::with_capacity(instance.len());
        for var_id in instance {
            let var = &model.vars[var_id.0];
            let value = values[var_id.0];
            if !var.domain.contains(value) {
                return Err(DecodeError::OutOfDomain {
                    var: var.name.clone(),
                    value,
                });
            }
            row.push(match &var.domain {
                VarDomain::IntRange { .. } => Cell::Int(value),
                VarDomain::Enum(names) => Cell::Str(names[value as usize].clone()),
            });
        }
        rows.push(row);
    }
    if let Some(pos) = layout.position_field {
        rows.sort_by(|a, b| a[pos].cmp(&b[pos]));
    }
    Ok(SolutionTable {
        columns: layout.fields.clone(),
        rows,
        position_column: layout.position_field.map(|p| layout.fields[p].clone()),
    })
}

/// Inverse of [`decode`]: row `i` of the table becomes instance `i`.
///
/// `encode(decode(a)) == a` holds for assignments whose instances are already
/// in row order (positions ascending), which every table has exactly one of.
pub fn encode(model: &ConstraintModel, table: &SolutionTable) -> Result<Vec<i64>, DecodeError> {
    let layout = &model.layout;
    if table.rows.len() != layout.instances.len() {
        return Err(DecodeError::Shape(format!(
            "expected {} rows, found {}",
            layout.instances.len(),
            table.rows.len()
        )));
    }
    let column_of: Vec<usize> = layout
        .fields
        .iter()
        .map(|f| {
            table
                .column_index(f)
                .ok_or_else(|| DecodeError::Shape(format!("missing column `{f}`")))
        })
        .collect::<Result<_, _>>()?;
    let mut values = vec![0; model.vars.len()];
    for (instance, row) in layout.instances.iter().zip(&table.rows) {
        for (field, var_id) in instance.iter().enumerate() {
            let var = &model.vars[var_id.0];
            let cell = row
                .get(column_of[field])
                .ok_or_else(|| DecodeError::Shape("short row".into()))?;
            let value = match (&var.domain, cell) {
                (VarDomain::IntRange { .. }, Cell::Int(v)) if var.domain.contains(*v) => *v,
                (VarDomain::Enum(names), Cell::Str(s)) => names
                    .iter()
                    .position(|n| n == s)
                    .ok_or_else(|| DecodeError::Shape(format!("{s:?} not in domain of `{}`", var.name)))?
                    as i64,
                _ => {
                    return Err(DecodeError::Shape(format!(
                        "cell {cell} does not fit `{}`",
                        var.name
                    )))
                }
            };
            values[var_id.0] = value;
        }
    }
    Ok(values)
}
