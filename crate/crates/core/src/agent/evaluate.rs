//! Direct evaluation of a validator against a candidate table, independent of
//! the constraint model and the solver.

use std::collections::HashMap;

use thiserror::Error;

use crate::frontend::ast::{BoolOp, Stmt};
use crate::frontend::{CheckedProgram, ScalarKind, TExpr, TExprKind};
use crate::model::{Cell, SolutionTable};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("candidate does not match the result class: {0}")]
pub struct ShapeError(pub String);

#[derive(Clone, Debug, PartialEq, Eq)]
enum Val {
    Int(i64),
    Bool(bool),
    Str(String),
    /// A record, by row of the candidate.
    Row(usize),
    Root,
    List,
}

/// True iff some choice for every `nondet` makes all assumptions and
/// assertions hold, and the `Unique` fields are distinct and in domain.
///
/// Statements run in order; a statement with `nondet` calls is tried once
/// per combination of element choices, backtracking on failure. Rows are
/// unordered records, so when the validator indexes the list directly every
/// arrangement of the rows as list elements is tried.
pub fn check_solution(program: &CheckedProgram, candidate: &SolutionTable) -> Result<bool, ShapeError> {
    let shape = &program.shape;
    if candidate.rows.len() != shape.instance_count() {
        return Err(ShapeError(format!(
            "expected {} rows, found {}",
            shape.instance_count(),
            candidate.rows.len()
        )));
    }
    let mut columns = Vec::with_capacity(shape.fields.len());
    for field in &shape.fields {
        let col = candidate
            .column_index(&field.name)
            .ok_or_else(|| ShapeError(format!("missing column `{}`", field.name)))?;
        columns.push(col);
    }
    let mut values: Vec<Vec<Cell>> = Vec::with_capacity(candidate.rows.len());
    for row in &candidate.rows {
        let mut out = Vec::with_capacity(columns.len());
        for (field, &col) in shape.fields.iter().zip(&columns) {
            let cell = row
                .get(col)
                .ok_or_else(|| ShapeError("short row".into()))?
                .clone();
            match (&field.kind, &cell) {
                (ScalarKind::Int { .. }, Cell::Int(_)) | (ScalarKind::Str { .. }, Cell::Str(_)) => {}
                _ => return Err(ShapeError(format!("cell {cell} has the wrong type for `{}`", field.name))),
            }
            out.push(cell);
        }
        values.push(out);
    }

    for (f, field) in shape.fields.iter().enumerate() {
        for row in &values {
            let ok = match (&field.kind, &row[f]) {
                (ScalarKind::Int { lo, hi }, Cell::Int(v)) => lo <= v && v < hi,
                (ScalarKind::Str { values }, Cell::Str(s)) => values.contains(s),
                _ => false,
            };
            if !ok {
                return Ok(false);
            }
        }
        if field.unique {
            let mut seen: Vec<&Cell> = values.iter().map(|r| &r[f]).collect();
            seen.sort();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Ok(false);
            }
        }
    }

    let mut indexed = false;
    for stmt in &program.body {
        let (Stmt::Assign { value: e, .. } | Stmt::Assume { cond: e, .. } | Stmt::Assert { cond: e, .. }) = stmt;
        visit(e, &mut |x| indexed |= matches!(x.kind, TExprKind::Index(..)));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    loop {
        let eval = Eval {
            program,
            values: &values,
            order: &order,
            root_is_list: shape.list.is_some(),
        };
        let mut env = HashMap::new();
        env.insert(program.entry_fn().param_name.clone(), eval.root());
        if eval.run(0, &mut env) {
            return Ok(true);
        }
        if !indexed || !next_permutation(&mut order) {
            return Ok(false);
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

struct Eval<'a> {
    program: &'a CheckedProgram,
    values: &'a [Vec<Cell>],
    /// List index -> candidate row.
    order: &'a [usize],
    root_is_list: bool,
}

impl Eval<'_> {
    fn root(&self) -> Val {
        if self.root_is_list {
            Val::Root
        } else {
            Val::Row(0)
        }
    }

    fn run(&self, i: usize, env: &mut HashMap<String, Val>) -> bool {
        let Some(stmt) = self.program.body.get(i) else {
            return true;
        };
        let expr = match stmt {
            Stmt::Assign { value, .. } => value,
            Stmt::Assume { cond, .. } | Stmt::Assert { cond, .. } => cond,
        };
        let mut slots = 0;
        count_nondet(expr, &mut slots);
        let mut choice = vec![0usize; slots];
        loop {
            let mut next = 0;
            let v = self.expr(expr, env, &choice, &mut next);
            let ok = match stmt {
                Stmt::Assign { target, .. } => {
                    let saved = env.insert(target.clone(), v);
                    let ok = self.run(i + 1, env);
                    match saved {
                        Some(old) => env.insert(target.clone(), old),
                        None => env.remove(target),
                    };
                    ok
                }
                _ => v == Val::Bool(true) && self.run(i + 1, env),
            };
            if ok {
                return true;
            }
            // advance the choice odometer
            let mut k = slots;
            loop {
                if k == 0 {
                    return false;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < self.values.len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }

    /// Evaluates without short-circuiting, so nondet slots are consumed in a
    /// fixed order.
    fn expr(&self, e: &TExpr, env: &HashMap<String, Val>, choice: &[usize], next: &mut usize) -> Val {
        let int = |v: Val| match v {
            Val::Int(i) => i,
            _ => 0,
        };
        match &e.kind {
            TExprKind::Int(v) => Val::Int(*v),
            TExprKind::Str { value, .. } => Val::Str(value.clone()),
            TExprKind::Local(name) => env.get(name).cloned().unwrap_or(Val::Int(0)),
            TExprKind::Field(base, idx) => match self.expr(base, env, choice, next) {
                Val::Row(r) => match &self.values[r][*idx] {
                    Cell::Int(v) => Val::Int(*v),
                    Cell::Str(s) => Val::Str(s.clone()),
                },
                _ => Val::Int(0),
            },
            TExprKind::ListField(base) => {
                self.expr(base, env, choice, next);
                Val::List
            }
            TExprKind::Index(base, i) => {
                self.expr(base, env, choice, next);
                Val::Row(self.order[*i])
            }
            TExprKind::Nondet(list) => {
                self.expr(list, env, choice, next);
                let k = choice[*next];
                *next += 1;
                Val::Row(k)
            }
            TExprKind::Abs(inner) => Val::Int(int(self.expr(inner, env, choice, next)).saturating_abs()),
            TExprKind::Binary(op, a, b) => {
                let a = int(self.expr(a, env, choice, next));
                let b = int(self.expr(b, env, choice, next));
                Val::Int(op.apply(a, b))
            }
            TExprKind::Compare(op, a, b) => {
                let a = self.expr(a, env, choice, next);
                let b = self.expr(b, env, choice, next);
                let ord = match (&a, &b) {
                    (Val::Int(x), Val::Int(y)) => x.cmp(y),
                    (Val::Str(x), Val::Str(y)) => x.cmp(y),
                    (Val::Row(x), Val::Row(y)) => x.cmp(y),
                    (Val::Bool(x), Val::Bool(y)) => x.cmp(y),
                    _ => std::cmp::Ordering::Equal,
                };
                let (x, y) = (ord as i64, 0);
                Val::Bool(op.holds(x, y))
            }
            TExprKind::BoolOp(op, parts) => {
                let vals: Vec<bool> = parts
                    .iter()
                    .map(|p| self.expr(p, env, choice, next) == Val::Bool(true))
                    .collect();
                Val::Bool(match op {
                    BoolOp::And => vals.iter().all(|&b| b),
                    BoolOp::Or => vals.iter().any(|&b| b),
                })
            }
            TExprKind::Not(inner) => Val::Bool(self.expr(inner, env, choice, next) != Val::Bool(true)),
        }
    }
}

fn count_nondet(e: &TExpr, n: &mut usize) {
    visit(e, &mut |x| *n += matches!(x.kind, TExprKind::Nondet(_)) as usize);
}

fn visit(e: &TExpr, f: &mut impl FnMut(&TExpr)) {
    f(e);
    match &e.kind {
        TExprKind::Int(_) | TExprKind::Str { .. } | TExprKind::Local(_) => {}
        TExprKind::Nondet(inner)
        | TExprKind::Field(inner, _)
        | TExprKind::ListField(inner)
        | TExprKind::Index(inner, _)
        | TExprKind::Abs(inner)
        | TExprKind::Not(inner) => visit(inner, f),
        TExprKind::Binary(_, a, b) | TExprKind::Compare(_, a, b) => {
            visit(a, f);
            visit(b, f);
        }
        TExprKind::BoolOp(_, parts) => parts.iter().for_each(|p| visit(p, f)),
    }
}
