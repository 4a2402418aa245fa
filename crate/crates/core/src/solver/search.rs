use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use super::domains::{Domains, Layout};
use super::propagate::Propagation;
use super::{verify, Budget, SolveError, SolveStats};
use crate::model::{Assignment, ConstraintModel};

/// Accepts or rejects a complete regular-var valuation before selectors are
/// branched on. Used to block an already known solution table.
pub(crate) type LeafFilter<'a> = dyn Fn(&[i64]) -> bool + 'a;

pub(crate) struct Search<'m, 'f> {
    model: &'m ConstraintModel,
    prop: Propagation<'m>,
    layout: Arc<Layout>,
    bounds: Vec<(i64, i64)>,
    budget: Budget,
    started: Instant,
    pub stats: SolveStats,
    filter: Option<&'f LeafFilter<'f>>,
    trace: Option<&'f mut dyn Write>,
}

enum Step {
    Found(Assignment),
    Exhausted,
}

impl<'m, 'f> Search<'m, 'f> {
    pub fn new(model: &'m ConstraintModel, budget: Budget) -> Self {
        let mut bounds: Vec<(i64, i64)> = model.vars.iter().map(|v| v.domain.bounds()).collect();
        bounds.extend(model.selectors.iter().map(|s| (0, s.list_len as i64 - 1)));
        Search {
            model,
            prop: Propagation::new(model),
            layout: Arc::new(Layout::new(&bounds)),
            bounds,
            budget,
            started: Instant::now(),
            stats: SolveStats::default(),
            filter: None,
            trace: None,
        }
    }

    pub fn with_filter(mut self, filter: &'f LeafFilter<'f>) -> Self {
        self.filter = Some(filter);
        self
    }

    pub fn with_trace(mut self, trace: Option<&'f mut dyn Write>) -> Self {
        self.trace = trace;
        self
    }

    fn emit(&mut self, line: std::fmt::Arguments<'_>) {
        if let Some(out) = self.trace.as_mut() {
            let _ = writeln!(out, "{line}");
        }
    }

    fn name(&self, x: usize) -> &str {
        let nvars = self.model.vars.len();
        if x < nvars {
            &self.model.vars[x].name
        } else {
            &self.model.selectors[x - nvars].name
        }
    }

    /// Root propagation only; `None` on contradiction.
    pub fn root_domains(&mut self) -> Option<Vec<Vec<i64>>> {
        let mut doms = Domains::full(self.layout.clone(), &self.bounds);
        let mut count = 0;
        self.prop.run(&mut doms, None, &mut count).ok()?;
        Some((0..doms.var_count()).map(|x| doms.values(x)).collect())
    }

    pub fn run(&mut self) -> Result<Option<Assignment>, SolveError> {
        self.started = Instant::now();
        let mut doms = Domains::full(self.layout.clone(), &self.bounds);
        let result = if self
            .prop
            .run(&mut doms, None, &mut self.stats.propagations)
            .is_err()
        {
            Ok(Step::Exhausted)
        } else {
            self.dfs(doms, 0)
        };
        self.stats.elapsed = self.started.elapsed();
        let decisions = self.stats.decisions;
        match result? {
            Step::Found(a) => {
                self.emit(format_args!("solution decisions={decisions}"));
                Ok(Some(a))
            }
            Step::Exhausted => {
                self.emit(format_args!("exhausted decisions={decisions}"));
                Ok(None)
            }
        }
    }

    /// Minimum-remaining-values among unfixed vars in `range`, lowest id on ties.
    fn pick(doms: &Domains, range: std::ops::Range<usize>) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for x in range {
            let size = doms.size(x);
            if size > 1 && best.is_none_or(|(_, s)| size < s) {
                best = Some((x, size));
            }
        }
        best.map(|(x, _)| x)
    }

    fn dfs(&mut self, doms: Domains, depth: usize) -> Result<Step, SolveError> {
        let nvars = self.model.vars.len();
        let total = doms.var_count();
        let var = match Self::pick(&doms, 0..nvars) {
            Some(x) => x,
            None => {
                let values: Vec<i64> = (0..nvars).map(|x| doms.min(x).expect("non-empty")).collect();
                if let Some(filter) = self.filter {
                    if !filter(&values) {
                        self.emit(format_args!("{:indent$}blocked", "", indent = depth));
                        return Ok(Step::Exhausted);
                    }
                }
                match Self::pick(&doms, nvars..total) {
                    Some(x) => x,
                    None => {
                        let selectors = (nvars..total)
                            .map(|x| doms.min(x).expect("non-empty") as usize)
                            .collect();
                        let assignment = Assignment {
                            vars: values,
                            selectors,
                        };
                        verify(self.model, &assignment).map_err(SolveError::Internal)?;
                        return Ok(Step::Found(assignment));
                    }
                }
            }
        };
        for value in doms.values(var) {
            self.stats.decisions += 1;
            if self.stats.decisions > self.budget.max_decisions
                || self.started.elapsed() > self.budget.max_time
            {
                self.stats.elapsed = self.started.elapsed();
                return Err(SolveError::BudgetExceeded {
                    stats: self.stats.clone(),
                });
            }
            if self.trace.is_some() {
                let name = self.name(var).to_string();
                self.emit(format_args!("{:indent$}decide {name} = {value}", "", indent = depth));
            }
            let mut child = doms.clone();
            child.fix(var, value);
            if self
                .prop
                .run(&mut child, Some(&[var]), &mut self.stats.propagations)
                .is_err()
            {
                self.emit(format_args!("{:indent$}fail", "", indent = depth));
                continue;
            }
            if let Step::Found(a) = self.dfs(child, depth + 1)? {
                return Ok(Step::Found(a));
            }
            self.emit(format_args!("{:indent$}backtrack", "", indent = depth));
        }
        Ok(Step::Exhausted)
    }
}
