//! Finite-domain constraint model lowered from a checked Logic.py program.
//!
//! Records of the result data structure become instances whose scalar fields
//! are integer variables; string fields are coded by their index in the
//! declared domain. `nondet` call sites become selector variables and field
//! accesses through them stay symbolic as [`CExpr::Elem`].

mod decode;
mod dump;
mod lower;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{ArithOp, CmpOp};

pub use decode::{decode, encode, Cell, DecodeError, SolutionTable};
pub use dump::dump;
pub use lower::{lower, rewrite_assert_as_assume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SelectorId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarDomain {
    /// Half-open `[lo, hi)`.
    IntRange { lo: i64, hi: i64 },
    /// Ordered distinct strings, coded `0..len`.
    Enum(Vec<String>),
}

impl VarDomain {
    pub fn size(&self) -> usize {
        match self {
            VarDomain::IntRange { lo, hi } => (hi - lo).max(0) as usize,
            VarDomain::Enum(values) => values.len(),
        }
    }

    /// Smallest and largest integer value (codes for enums).
    pub fn bounds(&self) -> (i64, i64) {
        match self {
            VarDomain::IntRange { lo, hi } => (*lo, hi - 1),
            VarDomain::Enum(values) => (0, values.len() as i64 - 1),
        }
    }

    pub fn contains(&self, value: i64) -> bool {
        let (lo, hi) = self.bounds();
        lo <= value && value <= hi
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        let (lo, hi) = self.bounds();
        lo..=hi
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Var {
    pub id: VarId,
    pub name: String,
    pub domain: VarDomain,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectorVar {
    pub id: SelectorId,
    /// Domain is `0..list_len`.
    pub list_len: usize,
    pub element_class: String,
    /// Local name bound to the call site, or a positional label.
    pub name: String,
}

/// Boolean results evaluate to 0/1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CExpr {
    Const(i64),
    Var(VarId),
    /// Field `field` of the record chosen by `selector`.
    Elem { selector: SelectorId, field: usize },
    /// The list index chosen by a selector.
    Index(SelectorId),
    Abs(Box<CExpr>),
    Arith(ArithOp, Box<CExpr>, Box<CExpr>),
    Cmp(CmpOp, Box<CExpr>, Box<CExpr>),
    And(Vec<CExpr>),
    Or(Vec<CExpr>),
    Not(Box<CExpr>),
}

impl CExpr {
    pub fn cmp(op: CmpOp, a: CExpr, b: CExpr) -> CExpr {
        CExpr::Cmp(op, Box::new(a), Box::new(b))
    }

    /// Calls `f` on every node, parents first.
    pub fn visit(&self, f: &mut impl FnMut(&CExpr)) {
        f(self);
        match self {
            CExpr::Const(_) | CExpr::Var(_) | CExpr::Elem { .. } | CExpr::Index(_) => {}
            CExpr::Abs(e) | CExpr::Not(e) => e.visit(f),
            CExpr::Arith(_, a, b) | CExpr::Cmp(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            CExpr::And(es) | CExpr::Or(es) => es.iter().for_each(|e| e.visit(f)),
        }
    }

    /// Selectors referenced, sorted and deduplicated.
    pub fn selectors(&self) -> Vec<SelectorId> {
        let mut out = Vec::new();
        self.visit(&mut |e| match e {
            CExpr::Elem { selector, .. } | CExpr::Index(selector) => out.push(*selector),
            _ => {}
        });
        out.sort();
        out.dedup();
        out
    }

    /// Variables referenced directly (not through a selector).
    pub fn direct_vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let CExpr::Var(v) = e {
                out.push(*v)
            }
        });
        out.sort();
        out.dedup();
        out
    }
}

/// Read access to a (possibly partial) point of the search space.
pub trait Valuation {
    fn var(&self, id: VarId) -> i64;
    fn selector(&self, id: SelectorId) -> usize;
}

/// Row-major placement of variables: instance `i`, record field `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceLayout {
    /// Name of the list field holding the records, if the result is a list.
    pub list_name: Option<String>,
    pub record_class: String,
    pub fields: Vec<String>,
    pub instances: Vec<Vec<VarId>>,
    /// Field ordering decoded rows, see `ResultShape::position_field`.
    pub position_field: Option<usize>,
}

impl InstanceLayout {
    pub fn var(&self, instance: usize, field: &str) -> Option<VarId> {
        let f = self.fields.iter().position(|name| name == field)?;
        self.instances.get(instance).map(|row| row[f])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintModel {
    pub vars: Vec<Var>,
    pub selectors: Vec<SelectorVar>,
    pub alldiff_groups: Vec<Vec<VarId>>,
    pub constraints: Vec<CExpr>,
    pub layout: InstanceLayout,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("internal lowering error: {0}")]
    Internal(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

impl ConstraintModel {
    /// The variable behind `elem(selector = index, field)`.
    pub fn elem_var(&self, index: usize, field: usize) -> VarId {
        self.layout.instances[index][field]
    }

    /// Evaluates an expression at a point; booleans come back as 0/1.
    pub fn eval(&self, expr: &CExpr, at: &impl Valuation) -> i64 {
        match expr {
            CExpr::Const(v) => *v,
            CExpr::Var(v) => at.var(*v),
            CExpr::Elem { selector, field } => at.var(self.elem_var(at.selector(*selector), *field)),
            CExpr::Index(s) => at.selector(*s) as i64,
            CExpr::Abs(e) => self.eval(e, at).saturating_abs(),
            CExpr::Arith(op, a, b) => op.apply(self.eval(a, at), self.eval(b, at)),
            CExpr::Cmp(op, a, b) => op.holds(self.eval(a, at), self.eval(b, at)) as i64,
            CExpr::And(es) => es.iter().all(|e| self.eval(e, at) != 0) as i64,
            CExpr::Or(es) => es.iter().any(|e| self.eval(e, at) != 0) as i64,
            CExpr::Not(e) => (self.eval(e, at) == 0) as i64,
        }
    }

    pub fn holds(&self, expr: &CExpr, at: &impl Valuation) -> bool {
        self.eval(expr, at) != 0
    }

    /// Structural validation: ids resolve, alldiff groups share one domain.
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |msg: String| Err(ModelError::Invalid(msg));
        for (i, var) in self.vars.iter().enumerate() {
            if var.id != VarId(i) {
                return invalid(format!("var {} has id {:?}", i, var.id));
            }
            if var.domain.size() == 0 {
                return invalid(format!("var {} has an empty domain", var.name));
            }
        }
        for (i, sel) in self.selectors.iter().enumerate() {
            if sel.id != SelectorId(i) || sel.list_len != self.layout.instances.len() || sel.list_len == 0 {
                return invalid(format!("selector {i} does not match the instance list"));
            }
        }
        let nfields = self.layout.fields.len();
        for row in &self.layout.instances {
            if row.len() != nfields || row.iter().any(|v| v.0 >= self.vars.len()) {
                return invalid("instance layout references unknown vars".into());
            }
        }
        for group in &self.alldiff_groups {
            let Some(first) = group.first() else {
                return invalid("empty alldiff group".into());
            };
            for v in group {
                if v.0 >= self.vars.len() {
                    return invalid(format!("alldiff references unknown var {}", v.0));
                }
                if self.vars[v.0].domain != self.vars[first.0].domain {
                    return invalid("alldiff group mixes domains".into());
                }
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let mut bad = None;
            c.visit(&mut |e| match e {
                CExpr::Var(v) if v.0 >= self.vars.len() => bad = Some(format!("var {}", v.0)),
                CExpr::Elem { selector, field } => {
                    if selector.0 >= self.selectors.len() || *field >= nfields {
                        bad = Some(format!("elem({}, {field})", selector.0));
                    }
                }
                CExpr::Index(s) if s.0 >= self.selectors.len() => {
                    bad = Some(format!("selector {}", s.0))
                }
                _ => {}
            });
            if let Some(what) = bad {
                return invalid(format!("constraint {i} references unknown {what}"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for VarDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarDomain::IntRange { lo, hi } => write!(f, "[{lo}, {hi})"),
            VarDomain::Enum(values) => {
                f.write_str("{")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v:?}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// A complete point: values for every regular var and every selector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub vars: Vec<i64>,
    pub selectors: Vec<usize>,
}

impl Valuation for Assignment {
    fn var(&self, id: VarId) -> i64 {
        self.vars[id.0]
    }

    fn selector(&self, id: SelectorId) -> usize {
        self.selectors[id.0]
    }
}
