//! Exhaustive enumeration, used as a test oracle for the search.
//!
//! Tables are enumerated block by block: the position group (if any) as an
//! increasing sequence, so each table is visited in exactly one instance
//! order; every other alldiff group as an arrangement of its domain; every
//! remaining var over its full domain. A table is a solution when some
//! selector assignment satisfies all constraints.

use std::collections::HashSet;

use thiserror::Error;

use super::table_key;
use crate::model::{Assignment, ConstraintModel};

pub const BRUTE_FORCE_CAP: u64 = 10_000_000;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("brute force would enumerate {needed} tables, cap is {cap}")]
pub struct CapExceeded {
    pub needed: u64,
    pub cap: u64,
}

#[derive(Clone, Debug)]
pub struct BruteForce {
    /// One assignment per distinct solution table, in enumeration order.
    pub solutions: Vec<Assignment>,
    /// Number of candidate tables visited.
    pub enumerated: u64,
}

#[derive(Debug)]
enum Block {
    Increasing(Vec<usize>, Vec<i64>),
    Arrangement(Vec<usize>, Vec<i64>),
    Free(usize, Vec<i64>),
}

impl Block {
    fn count(&self) -> u64 {
        let (k, n) = match self {
            Block::Free(_, d) => return d.len() as u64,
            Block::Increasing(v, d) | Block::Arrangement(v, d) => (v.len() as u64, d.len() as u64),
        };
        if k > n {
            return 0;
        }
        let mut c: u64 = 1;
        for i in 0..k {
            c = c.saturating_mul(n - i);
        }
        if matches!(self, Block::Increasing(..)) {
            for i in 1..=k {
                c /= i;
            }
        }
        c
    }
}

pub fn brute_force(model: &ConstraintModel, cap: u64) -> Result<BruteForce, CapExceeded> {
    let nvars = model.vars.len();
    let position_vars: Option<Vec<usize>> = model.layout.position_field.map(|f| {
        let mut vs: Vec<usize> = model.layout.instances.iter().map(|row| row[f].0).collect();
        vs.sort_unstable();
        vs
    });
    let mut taken = vec![false; nvars];
    let mut blocks = Vec::new();
    for group in &model.alldiff_groups {
        let vars: Vec<usize> = group.iter().map(|v| v.0).filter(|&x| !taken[x]).collect();
        if vars.is_empty() {
            continue;
        }
        for &x in &vars {
            taken[x] = true;
        }
        let domain: Vec<i64> = model.vars[vars[0]].domain.values().collect();
        let mut sorted = vars.clone();
        sorted.sort_unstable();
        if position_vars.as_ref() == Some(&sorted) {
            // instance order follows the layout, so positions ascend with it
            let ordered = model
                .layout
                .instances
                .iter()
                .map(|row| row[model.layout.position_field.unwrap()].0)
                .collect();
            blocks.push(Block::Increasing(ordered, domain));
        } else {
            blocks.push(Block::Arrangement(vars, domain));
        }
    }
    for x in 0..nvars {
        if !taken[x] {
            blocks.push(Block::Free(x, model.vars[x].domain.values().collect()));
        }
    }
    let needed = blocks.iter().fold(1u64, |acc, b| acc.saturating_mul(b.count()));
    if needed > cap {
        return Err(CapExceeded { needed, cap });
    }

    let mut by_selector: Vec<Vec<usize>> = vec![Vec::new(); model.selectors.len() + 1];
    for (i, c) in model.constraints.iter().enumerate() {
        let slot = c.selectors().iter().map(|s| s.0 + 1).max().unwrap_or(0);
        by_selector[slot].push(i);
    }
    let mut state = Enum {
        model,
        blocks: &blocks,
        by_selector: &by_selector,
        vars: vec![0; nvars],
        selectors: vec![0; model.selectors.len()],
        seen: HashSet::new(),
        out: BruteForce {
            solutions: Vec::new(),
            enumerated: 0,
        },
    };
    state.blocks(0);
    Ok(state.out)
}

struct Enum<'a> {
    model: &'a ConstraintModel,
    blocks: &'a [Block],
    by_selector: &'a [Vec<usize>],
    vars: Vec<i64>,
    selectors: Vec<usize>,
    seen: HashSet<(Vec<Vec<i64>>, Vec<i64>)>,
    out: BruteForce,
}

impl Enum<'_> {
    fn blocks(&mut self, b: usize) {
        let Some(block) = self.blocks.get(b) else {
            self.leaf();
            return;
        };
        match block {
            Block::Free(x, domain) => {
                for &v in domain {
                    self.vars[*x] = v;
                    self.blocks(b + 1);
                }
            }
            Block::Increasing(vars, domain) => self.increasing(b, vars, domain, 0, 0),
            Block::Arrangement(vars, domain) => {
                let mut used = vec![false; domain.len()];
                self.arrange(b, vars, domain, &mut used, 0);
            }
        }
    }

    fn increasing(&mut self, b: usize, vars: &[usize], domain: &[i64], i: usize, from: usize) {
        if i == vars.len() {
            self.blocks(b + 1);
            return;
        }
        let remaining = vars.len() - i;
        for k in from..=domain.len().saturating_sub(remaining) {
            self.vars[vars[i]] = domain[k];
            self.increasing(b, vars, domain, i + 1, k + 1);
        }
    }

    fn arrange(&mut self, b: usize, vars: &[usize], domain: &[i64], used: &mut [bool], i: usize) {
        if i == vars.len() {
            self.blocks(b + 1);
            return;
        }
        for k in 0..domain.len() {
            if !used[k] {
                used[k] = true;
                self.vars[vars[i]] = domain[k];
                self.arrange(b, vars, domain, used, i + 1);
                used[k] = false;
            }
        }
    }

    fn leaf(&mut self) {
        self.out.enumerated += 1;
        if !self.alldiff_ok() || !self.selectors_from(0) {
            return;
        }
        let key = table_key(self.model, &self.vars);
        if self.seen.insert(key) {
            self.out.solutions.push(Assignment {
                vars: self.vars.clone(),
                selectors: self.selectors.clone(),
            });
        }
    }

    fn alldiff_ok(&self) -> bool {
        self.model.alldiff_groups.iter().all(|g| {
            let mut vals: Vec<i64> = g.iter().map(|v| self.vars[v.0]).collect();
            vals.sort_unstable();
            vals.windows(2).all(|w| w[0] != w[1])
        })
    }

    /// Checks constraints whose highest selector is `s - 1`, then tries every
    /// value of selector `s`.
    fn selectors_from(&mut self, s: usize) -> bool {
        let point = Assignment {
            vars: std::mem::take(&mut self.vars),
            selectors: std::mem::take(&mut self.selectors),
        };
        let ok = self.by_selector[s]
            .iter()
            .all(|&c| self.model.holds(&self.model.constraints[c], &point));
        self.vars = point.vars;
        self.selectors = point.selectors;
        if !ok {
            return false;
        }
        if s == self.model.selectors.len() {
            return true;
        }
        for k in 0..self.model.selectors[s].list_len {
            self.selectors[s] = k;
            if self.selectors_from(s + 1) {
                return true;
            }
        }
        self.selectors[s] = 0;
        false
    }
}
