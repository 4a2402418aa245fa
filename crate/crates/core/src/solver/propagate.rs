//! Propagation to fixpoint over constraint expressions and alldiff groups.
//!
//! Expression constraints are filtered by support enumeration: every selector
//! combination is tried, each `elem` access resolves to one concrete var, and
//! the resolved var scope is enumerated. A value survives iff it takes part in
//! some satisfying combination. Constraints whose enumeration would exceed
//! [`ENUMERATION_LIMIT`] are skipped until their domains shrink; at a full
//! assignment the enumeration is a single point, so no constraint is ever
//! skipped at a leaf.

use std::collections::VecDeque;

use super::domains::Domains;
use crate::model::{CExpr, ConstraintModel, SelectorId, Valuation, VarId};

pub(crate) const ENUMERATION_LIMIT: u64 = 50_000;

/// Alldiff groups up to this size get full Hall-set detection.
const HALL_SUBSET_LIMIT: usize = 8;

#[derive(Debug)]
pub(crate) enum Propagator {
    Expr {
        index: usize,
        selectors: Vec<SelectorId>,
        direct: Vec<VarId>,
        /// Distinct `(selector, field)` pairs accessed through `elem`.
        elems: Vec<(SelectorId, usize)>,
    },
    AllDiff(Vec<usize>),
}

pub(crate) struct Propagation<'m> {
    pub model: &'m ConstraintModel,
    pub props: Vec<Propagator>,
    /// Search var -> propagators watching it.
    watchers: Vec<Vec<usize>>,
    scratch: Point,
}

/// Scratch valuation over search vars (regular vars first, then selectors).
struct Point {
    values: Vec<i64>,
    nvars: usize,
}

impl Valuation for Point {
    fn var(&self, id: VarId) -> i64 {
        self.values[id.0]
    }

    fn selector(&self, id: SelectorId) -> usize {
        self.values[self.nvars + id.0] as usize
    }
}

pub(crate) struct Contradiction;

impl<'m> Propagation<'m> {
    pub fn new(model: &'m ConstraintModel) -> Self {
        let nvars = model.vars.len();
        let total = nvars + model.selectors.len();
        let mut props = Vec::new();
        for (index, c) in model.constraints.iter().enumerate() {
            let mut elems = Vec::new();
            c.visit(&mut |e| {
                if let CExpr::Elem { selector, field } = e {
                    elems.push((*selector, *field));
                }
            });
            elems.sort();
            elems.dedup();
            props.push(Propagator::Expr {
                index,
                selectors: c.selectors(),
                direct: c.direct_vars(),
                elems,
            });
        }
        for group in &model.alldiff_groups {
            props.push(Propagator::AllDiff(group.iter().map(|v| v.0).collect()));
        }
        let mut watchers = vec![Vec::new(); total];
        for (p, prop) in props.iter().enumerate() {
            let mut watched = Vec::new();
            match prop {
                Propagator::Expr {
                    selectors,
                    direct,
                    elems,
                    ..
                } => {
                    watched.extend(selectors.iter().map(|s| nvars + s.0));
                    watched.extend(direct.iter().map(|v| v.0));
                    for &(_, field) in elems {
                        watched.extend(model.layout.instances.iter().map(|row| row[field].0));
                    }
                }
                Propagator::AllDiff(vars) => watched.extend(vars.iter().copied()),
            }
            watched.sort_unstable();
            watched.dedup();
            for x in watched {
                watchers[x].push(p);
            }
        }
        Propagation {
            model,
            props,
            watchers,
            scratch: Point {
                values: vec![0; total],
                nvars,
            },
        }
    }

    fn nvars(&self) -> usize {
        self.model.vars.len()
    }

    /// Runs propagators to fixpoint. `seed` lists the search vars that changed
    /// since the last fixpoint; `None` schedules every propagator.
    pub fn run(
        &mut self,
        doms: &mut Domains,
        seed: Option<&[usize]>,
        count: &mut u64,
    ) -> Result<(), Contradiction> {
        let mut queued = vec![false; self.props.len()];
        let mut queue = VecDeque::new();
        match seed {
            None => {
                for p in 0..self.props.len() {
                    queued[p] = true;
                    queue.push_back(p);
                }
            }
            Some(vars) => {
                for &x in vars {
                    for &p in &self.watchers[x] {
                        if !queued[p] {
                            queued[p] = true;
                            queue.push_back(p);
                        }
                    }
                }
            }
        }
        let mut changed = Vec::new();
        while let Some(p) = queue.pop_front() {
            queued[p] = false;
            *count += 1;
            changed.clear();
            match &self.props[p] {
                Propagator::AllDiff(vars) => alldiff(doms, vars, &mut changed)?,
                Propagator::Expr { .. } => self.expr(p, doms, &mut changed)?,
            }
            for &x in &changed {
                if doms.is_empty(x) {
                    return Err(Contradiction);
                }
                for &q in &self.watchers[x] {
                    if q != p && !queued[q] {
                        queued[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        Ok(())
    }

    fn expr(
        &mut self,
        p: usize,
        doms: &mut Domains,
        changed: &mut Vec<usize>,
    ) -> Result<(), Contradiction> {
        let nvars = self.nvars();
        let model = self.model;
        let Propagator::Expr {
            index,
            selectors,
            direct,
            elems,
        } = &self.props[p]
        else {
            unreachable!()
        };
        let constraint = &model.constraints[*index];

        let sel_values: Vec<Vec<i64>> = selectors.iter().map(|s| doms.values(nvars + s.0)).collect();
        let mut combos: u64 = 1;
        for vals in &sel_values {
            combos = combos.saturating_mul(vals.len() as u64);
        }
        if combos == 0 {
            return Err(Contradiction);
        }
        if combos > ENUMERATION_LIMIT {
            return Ok(());
        }

        // Every var the constraint may touch under the current selector domains.
        let mut involved: Vec<usize> = direct.iter().map(|v| v.0).collect();
        for (s, field) in elems {
            let si = selectors.iter().position(|x| x == s).expect("elem selector listed");
            for &k in &sel_values[si] {
                involved.push(model.elem_var(k as usize, *field).0);
            }
        }
        involved.sort_unstable();
        involved.dedup();
        let involved_values: Vec<Vec<i64>> = involved.iter().map(|&x| doms.values(x)).collect();
        let mut supported: Vec<Vec<bool>> =
            involved_values.iter().map(|v| vec![false; v.len()]).collect();
        let mut free = vec![false; involved.len()];
        let mut sel_supported: Vec<Vec<bool>> =
            sel_values.iter().map(|v| vec![false; v.len()]).collect();

        let mut any_sat = false;
        let mut work: u64 = 0;
        let mut sel_idx = vec![0usize; selectors.len()];
        let mut scope: Vec<usize> = Vec::new();
        loop {
            for (i, s) in selectors.iter().enumerate() {
                self.scratch.values[nvars + s.0] = sel_values[i][sel_idx[i]];
            }
            scope.clear();
            scope.extend(direct.iter().map(|v| v.0));
            for (s, field) in elems {
                let k = self.scratch.values[nvars + s.0] as usize;
                scope.push(model.elem_var(k, *field).0);
            }
            scope.sort_unstable();
            scope.dedup();
            // positions of scope vars within `involved`
            let slots: Vec<usize> = scope
                .iter()
                .map(|x| involved.binary_search(x).expect("scope within involved"))
                .collect();
            let mut points: u64 = 1;
            for &slot in &slots {
                points = points.saturating_mul(involved_values[slot].len() as u64);
            }
            work = work.saturating_add(points);
            if work > ENUMERATION_LIMIT {
                return Ok(());
            }

            let mut val_idx = vec![0usize; slots.len()];
            let mut combo_sat = false;
            loop {
                for (j, &slot) in slots.iter().enumerate() {
                    self.scratch.values[involved[slot]] = involved_values[slot][val_idx[j]];
                }
                if model.holds(constraint, &self.scratch) {
                    combo_sat = true;
                    for (j, &slot) in slots.iter().enumerate() {
                        supported[slot][val_idx[j]] = true;
                    }
                }
                if !odometer(&mut val_idx, |j| involved_values[slots[j]].len()) {
                    break;
                }
            }
            if combo_sat {
                any_sat = true;
                for (i, &k) in sel_idx.iter().enumerate() {
                    sel_supported[i][k] = true;
                }
                for (slot, f) in free.iter_mut().enumerate() {
                    if !slots.contains(&slot) {
                        *f = true;
                    }
                }
            }
            if !odometer(&mut sel_idx, |i| sel_values[i].len()) {
                break;
            }
        }

        if !any_sat {
            return Err(Contradiction);
        }
        for (i, s) in selectors.iter().enumerate() {
            for (k, &ok) in sel_supported[i].iter().enumerate() {
                if !ok && doms.remove(nvars + s.0, sel_values[i][k]) {
                    changed.push(nvars + s.0);
                }
            }
        }
        for (slot, &x) in involved.iter().enumerate() {
            if free[slot] {
                continue;
            }
            let mut removed = false;
            for (j, &ok) in supported[slot].iter().enumerate() {
                if !ok {
                    removed |= doms.remove(x, involved_values[slot][j]);
                }
            }
            if removed {
                changed.push(x);
            }
        }
        Ok(())
    }
}

/// Advances a mixed-radix counter. Returns false after the last combination.
fn odometer(idx: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < radix(i) {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// Value elimination from fixed vars, then Hall-set pruning.
fn alldiff(doms: &mut Domains, vars: &[usize], changed: &mut Vec<usize>) -> Result<(), Contradiction> {
    let n = vars.len();
    loop {
        let mut progress = false;
        for i in 0..n {
            let Some(v) = doms.value(vars[i]) else { continue };
            for (j, &y) in vars.iter().enumerate() {
                if j != i && doms.remove(y, v) {
                    if doms.is_empty(y) {
                        changed.push(y);
                        return Err(Contradiction);
                    }
                    changed.push(y);
                    progress = true;
                }
            }
        }
        if n <= HALL_SUBSET_LIMIT {
            progress |= hall_subsets(doms, vars, changed)?;
        } else {
            let mut union = doms.words(vars[0]).to_vec();
            for &x in &vars[1..] {
                for (u, w) in union.iter_mut().zip(doms.words(x)) {
                    *u |= w;
                }
            }
            let count: usize = union.iter().map(|w| w.count_ones() as usize).sum();
            if count < n {
                return Err(Contradiction);
            }
        }
        if !progress {
            return Ok(());
        }
    }
}

fn hall_subsets(
    doms: &mut Domains,
    vars: &[usize],
    changed: &mut Vec<usize>,
) -> Result<bool, Contradiction> {
    let n = vars.len();
    let mut progress = false;
    let words = doms.words(vars[0]).len();
    let mut union = vec![0u64; words];
    for mask in 1u32..(1 << n) {
        union.iter_mut().for_each(|u| *u = 0);
        for (i, &x) in vars.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for (u, w) in union.iter_mut().zip(doms.words(x)) {
                    *u |= w;
                }
            }
        }
        let count: u32 = union.iter().map(|w| w.count_ones()).sum();
        let members = mask.count_ones();
        if count < members {
            return Err(Contradiction);
        }
        if count == members {
            for (i, &x) in vars.iter().enumerate() {
                if mask & (1 << i) == 0 && doms.remove_mask(x, &union) {
                    if doms.is_empty(x) {
                        changed.push(x);
                        return Err(Contradiction);
                    }
                    changed.push(x);
                    progress = true;
                }
            }
        }
    }
    Ok(progress)
}
