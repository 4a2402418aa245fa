//! Finite-domain search over a [`ConstraintModel`].
//!
//! Depth-first search with propagation at every node. Regular vars are chosen
//! by minimum remaining values (lowest id on ties), values ascending;
//! selectors are decided only once every regular var is fixed.

mod brute;
mod domains;
mod propagate;
mod search;

use std::io::Write;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Assignment, ConstraintModel, ModelError};
use search::Search;

pub use brute::{brute_force, BruteForce, CapExceeded, BRUTE_FORCE_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_decisions: u64,
    pub max_time: Duration,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_decisions: 10_000_000,
            max_time: Duration::from_secs(30),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Sat,
    Unsat,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub decisions: u64,
    pub propagations: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub stats: SolveStats,
}

#[derive(Clone, Debug)]
pub struct AmbiguityReport {
    pub first: Assignment,
    pub second: Option<Assignment>,
    pub stats: SolveStats,
}

#[derive(Clone, Debug, Error)]
pub enum SolveError {
    #[error("search budget exhausted after {} decisions", stats.decisions)]
    BudgetExceeded { stats: SolveStats },
    #[error(transparent)]
    InvalidModel(#[from] ModelError),
    #[error("solver produced an assignment that fails verification: {0}")]
    Internal(String),
}

/// Re-evaluates every constraint and alldiff group on a full assignment.
pub fn verify(model: &ConstraintModel, a: &Assignment) -> Result<(), String> {
    if a.vars.len() != model.vars.len() || a.selectors.len() != model.selectors.len() {
        return Err("assignment size does not match the model".into());
    }
    for var in &model.vars {
        if !var.domain.contains(a.vars[var.id.0]) {
            return Err(format!("{} = {} is outside its domain", var.name, a.vars[var.id.0]));
        }
    }
    for sel in &model.selectors {
        if a.selectors[sel.id.0] >= sel.list_len {
            return Err(format!("selector {} out of range", sel.name));
        }
    }
    for group in &model.alldiff_groups {
        for (i, x) in group.iter().enumerate() {
            for y in &group[i + 1..] {
                if a.vars[x.0] == a.vars[y.0] {
                    return Err(format!(
                        "{} and {} share a value",
                        model.vars[x.0].name, model.vars[y.0].name
                    ));
                }
            }
        }
    }
    for (i, c) in model.constraints.iter().enumerate() {
        if !model.holds(c, a) {
            return Err(format!("constraint {i} is violated"));
        }
    }
    Ok(())
}

pub fn solve(model: &ConstraintModel, budget: Budget) -> Result<SolveOutcome, SolveError> {
    solve_traced(model, budget, None)
}

/// As [`solve`], streaming decide/fail/backtrack lines to `trace`.
pub fn solve_traced(
    model: &ConstraintModel,
    budget: Budget,
    trace: Option<&mut dyn Write>,
) -> Result<SolveOutcome, SolveError> {
    model.validate()?;
    let mut search = Search::new(model, budget).with_trace(trace);
    let found = search.run()?;
    Ok(SolveOutcome {
        status: if found.is_some() {
            SolveStatus::Sat
        } else {
            SolveStatus::Unsat
        },
        assignment: found,
        stats: search.stats,
    })
}

/// Identity of the solution table an assignment decodes to: its rows as a
/// multiset, plus any vars outside the instance layout. Selector values and
/// the order of instances do not matter.
pub fn table_key(model: &ConstraintModel, vars: &[i64]) -> (Vec<Vec<i64>>, Vec<i64>) {
    let layout = &model.layout;
    let mut rows: Vec<Vec<i64>> = layout
        .instances
        .iter()
        .map(|row| row.iter().map(|v| vars[v.0]).collect())
        .collect();
    rows.sort();
    let mut in_layout = vec![false; model.vars.len()];
    for v in layout.instances.iter().flatten() {
        in_layout[v.0] = true;
    }
    let extra = (0..model.vars.len())
        .filter(|&i| !in_layout[i])
        .map(|i| vars[i])
        .collect();
    (rows, extra)
}

/// Searches for a satisfying assignment whose solution table differs from
/// the one `first` decodes to.
pub fn find_second(
    model: &ConstraintModel,
    first: &Assignment,
    budget: Budget,
) -> Result<AmbiguityReport, SolveError> {
    model.validate()?;
    verify(model, first).map_err(SolveError::Internal)?;
    let blocked = table_key(model, &first.vars);
    let filter = move |vars: &[i64]| table_key(model, vars) != blocked;
    let mut search = Search::new(model, budget).with_filter(&filter);
    let second = search.run()?;
    Ok(AmbiguityReport {
        first: first.clone(),
        second,
        stats: search.stats,
    })
}

/// Domains left after propagating the root node, one list per var followed
/// by one per selector; `None` when propagation alone refutes the model.
pub fn root_domains(model: &ConstraintModel) -> Result<Option<Vec<Vec<i64>>>, SolveError> {
    model.validate()?;
    Ok(Search::new(model, Budget::default()).root_domains())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CExpr, InstanceLayout, Var, VarDomain, VarId};
    use crate::frontend::ast::{ArithOp, CmpOp};

    fn int_model(domains: &[(i64, i64)], alldiff: Vec<Vec<usize>>, constraints: Vec<CExpr>) -> ConstraintModel {
        let vars: Vec<Var> = domains
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| Var {
                id: VarId(i),
                name: format!("v{i}"),
                domain: VarDomain::IntRange { lo, hi },
            })
            .collect();
        ConstraintModel {
            layout: InstanceLayout {
                list_name: None,
                record_class: "R".into(),
                fields: (0..vars.len()).map(|i| format!("v{i}")).collect(),
                instances: vec![(0..vars.len()).map(VarId).collect()],
                position_field: None,
            },
            vars,
            selectors: vec![],
            alldiff_groups: alldiff
                .into_iter()
                .map(|g| g.into_iter().map(VarId).collect())
                .collect(),
            constraints,
        }
    }

    fn v(i: usize) -> Box<CExpr> {
        Box::new(CExpr::Var(VarId(i)))
    }

    fn eq(i: usize, c: i64) -> CExpr {
        CExpr::Cmp(CmpOp::Eq, v(i), Box::new(CExpr::Const(c)))
    }

    #[test]
    fn contradiction_is_unsat() {
        let m = int_model(&[(1, 3)], vec![], vec![eq(0, 1), eq(0, 2)]);
        assert_eq!(solve(&m, Budget::default()).unwrap().status, SolveStatus::Unsat);
    }

    #[test]
    fn pigeonhole_is_unsat() {
        let m = int_model(&[(1, 3), (1, 3), (1, 3)], vec![vec![0, 1, 2]], vec![]);
        assert_eq!(solve(&m, Budget::default()).unwrap().status, SolveStatus::Unsat);
    }

    #[test]
    fn less_than_bounds() {
        // a in 3..=6, b in 1..=4, a < b
        let m = int_model(&[(3, 7), (1, 5)], vec![], vec![CExpr::Cmp(CmpOp::Lt, v(0), v(1))]);
        let doms = root_domains(&m).unwrap().unwrap();
        assert_eq!(doms, vec![vec![3], vec![4]]);
    }

    #[test]
    fn alldiff_removes_fixed_value() {
        let m = int_model(&[(1, 4), (1, 4), (1, 4)], vec![vec![0, 1, 2]], vec![eq(0, 1)]);
        let doms = root_domains(&m).unwrap().unwrap();
        assert_eq!(doms, vec![vec![1], vec![2, 3], vec![2, 3]]);
    }

    #[test]
    fn underconstrained_has_second() {
        let m = int_model(&[(1, 3), (1, 3)], vec![], vec![]);
        let first = solve(&m, Budget::default()).unwrap().assignment.unwrap();
        assert_eq!(first.vars, vec![1, 1]);
        let report = find_second(&m, &first, Budget::default()).unwrap();
        let second = report.second.unwrap();
        assert_ne!(second.vars, first.vars);
        verify(&m, &second).unwrap();
    }

    #[test]
    fn budget_is_distinct_from_unsat() {
        let m = int_model(&[(1, 9), (1, 9), (1, 9)], vec![], vec![eq(0, 5), CExpr::Cmp(CmpOp::Ne, v(1), v(1))]);
        assert_eq!(solve(&m, Budget::default()).unwrap().status, SolveStatus::Unsat);
        // Six-way sum: too wide to enumerate at the root, refuted after one decision.
        let sum = (1..6).fold(*v(0), |acc, i| CExpr::Arith(ArithOp::Add, Box::new(acc), v(i)));
        let m = int_model(
            &[(1, 9); 6],
            vec![],
            vec![CExpr::Cmp(CmpOp::Eq, Box::new(sum), Box::new(CExpr::Const(100)))],
        );
        assert_eq!(solve(&m, Budget::default()).unwrap().status, SolveStatus::Unsat);
        let tight = Budget {
            max_decisions: 5,
            max_time: Duration::from_secs(30),
        };
        assert!(matches!(solve(&m, tight), Err(SolveError::BudgetExceeded { .. })));
    }
}
