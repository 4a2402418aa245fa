use std::collections::HashMap;

use super::*;
use crate::frontend::{CheckedProgram, ScalarKind, Stmt, TExpr, TExprKind};

/// Replaces every `assert` with an `assume`; order and duplicates are kept.
pub fn rewrite_assert_as_assume<E: Clone>(stmts: &[Stmt<E>]) -> Vec<Stmt<E>> {
    stmts
        .iter()
        .map(|stmt| match stmt {
            Stmt::Assert { cond, span } => Stmt::Assume {
                cond: cond.clone(),
                span: *span,
            },
            other => other.clone(),
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
enum Record {
    Fixed(usize),
    Selected(SelectorId),
}

#[derive(Clone, Debug)]
enum Value {
    Scalar(CExpr),
    Record(Record),
    /// The root object holding the list, or the list itself.
    Root,
    List,
}

struct Lowerer<'a> {
    program: &'a CheckedProgram,
    model: ConstraintModel,
    env: HashMap<String, Value>,
}

pub fn lower(program: &CheckedProgram) -> Result<ConstraintModel, ModelError> {
    let shape = &program.shape;
    let count = shape.instance_count();
    let mut vars = Vec::with_capacity(count * shape.fields.len());
    let mut instances = Vec::with_capacity(count);
    for i in 0..count {
        let mut row = Vec::with_capacity(shape.fields.len());
        for field in &shape.fields {
            let id = VarId(vars.len());
            let name = match &shape.list {
                Some((list, _)) => format!("{list}[{i}].{}", field.name),
                None => field.name.clone(),
            };
            let domain = match &field.kind {
                ScalarKind::Int { lo, hi } => VarDomain::IntRange { lo: *lo, hi: *hi },
                ScalarKind::Str { values } => VarDomain::Enum(values.clone()),
            };
            vars.push(Var { id, name, domain });
            row.push(id);
        }
        instances.push(row);
    }
    let alldiff_groups = shape
        .fields
        .iter()
        .enumerate()
        .filter(|(_, f)| f.unique)
        .map(|(f, _)| instances.iter().map(|row| row[f]).collect())
        .collect();

    let layout = InstanceLayout {
        list_name: shape.list.as_ref().map(|(name, _)| name.clone()),
        record_class: program.record_class().name.clone(),
        fields: shape.fields.iter().map(|f| f.name.clone()).collect(),
        instances,
        position_field: shape.position_field(),
    };
    let mut lowerer = Lowerer {
        program,
        model: ConstraintModel {
            vars,
            selectors: Vec::new(),
            alldiff_groups,
            constraints: Vec::new(),
            layout,
        },
        env: HashMap::new(),
    };
    let root = if shape.list.is_some() {
        Value::Root
    } else {
        Value::Record(Record::Fixed(0))
    };
    lowerer.env.insert(program.entry_fn().param_name.clone(), root);

    for stmt in rewrite_assert_as_assume(&program.body) {
        match stmt {
            Stmt::Assign { target, value, .. } => {
                let label = match value.kind {
                    TExprKind::Nondet(_) => Some(target.clone()),
                    _ => None,
                };
                let lowered = lowerer.expr(&value, label)?;
                lowerer.env.insert(target, lowered);
            }
            Stmt::Assume { cond, .. } => {
                let c = lowerer.scalar(&cond)?;
                lowerer.model.constraints.push(c);
            }
            Stmt::Assert { .. } => unreachable!("asserts were rewritten"),
        }
    }
    lowerer.model.validate()?;
    Ok(lowerer.model)
}

impl Lowerer<'_> {
    fn internal(&self, msg: impl Into<String>) -> ModelError {
        ModelError::Internal(msg.into())
    }

    fn scalar(&mut self, expr: &TExpr) -> Result<CExpr, ModelError> {
        match self.expr(expr, None)? {
            Value::Scalar(c) => Ok(c),
            other => Err(self.internal(format!("expected a scalar, got {other:?}"))),
        }
    }

    fn record(&mut self, expr: &TExpr) -> Result<Record, ModelError> {
        match self.expr(expr, None)? {
            Value::Record(r) => Ok(r),
            other => Err(self.internal(format!("expected a record, got {other:?}"))),
        }
    }

    fn expr(&mut self, expr: &TExpr, label: Option<String>) -> Result<Value, ModelError> {
        Ok(match &expr.kind {
            TExprKind::Int(v) => Value::Scalar(CExpr::Const(*v)),
            TExprKind::Str { code, .. } => Value::Scalar(CExpr::Const(*code as i64)),
            TExprKind::Local(name) => self
                .env
                .get(name)
                .cloned()
                .ok_or_else(|| self.internal(format!("unbound local `{name}`")))?,
            TExprKind::Field(base, field) => match self.record(base)? {
                Record::Fixed(i) => Value::Scalar(CExpr::Var(self.model.elem_var(i, *field))),
                Record::Selected(selector) => Value::Scalar(CExpr::Elem {
                    selector,
                    field: *field,
                }),
            },
            TExprKind::ListField(base) => match self.expr(base, None)? {
                Value::Root => Value::List,
                other => return Err(self.internal(format!("list access on {other:?}"))),
            },
            TExprKind::Index(base, i) => match self.expr(base, None)? {
                Value::List => Value::Record(Record::Fixed(*i)),
                other => return Err(self.internal(format!("index on {other:?}"))),
            },
            TExprKind::Nondet(arg) => {
                match self.expr(arg, None)? {
                    Value::List => {}
                    other => return Err(self.internal(format!("nondet on {other:?}"))),
                }
                let id = SelectorId(self.model.selectors.len());
                let name = label.unwrap_or_else(|| {
                    format!("nondet@{}:{}", expr.span.line, expr.span.col)
                });
                self.model.selectors.push(SelectorVar {
                    id,
                    list_len: self.program.shape.instance_count(),
                    element_class: self.model.layout.record_class.clone(),
                    name,
                });
                Value::Record(Record::Selected(id))
            }
            TExprKind::Abs(arg) => Value::Scalar(CExpr::Abs(Box::new(self.scalar(arg)?))),
            TExprKind::Binary(op, a, b) => {
                let a = self.scalar(a)?;
                let b = self.scalar(b)?;
                Value::Scalar(CExpr::Arith(*op, Box::new(a), Box::new(b)))
            }
            TExprKind::Compare(op, a, b) => {
                let a = self.expr(a, None)?;
                let b = self.expr(b, None)?;
                let (a, b) = match (a, b) {
                    (Value::Scalar(a), Value::Scalar(b)) => (a, b),
                    (Value::Record(a), Value::Record(b)) => (record_index(a), record_index(b)),
                    (a, b) => {
                        return Err(self.internal(format!("cannot compare {a:?} with {b:?}")))
                    }
                };
                Value::Scalar(CExpr::cmp(*op, a, b))
            }
            TExprKind::BoolOp(op, operands) => {
                let parts = operands
                    .iter()
                    .map(|e| self.scalar(e))
                    .collect::<Result<Vec<_>, _>>()?;
                Value::Scalar(match op {
                    crate::frontend::BoolOp::And => CExpr::And(parts),
                    crate::frontend::BoolOp::Or => CExpr::Or(parts),
                })
            }
            TExprKind::Not(inner) => Value::Scalar(CExpr::Not(Box::new(self.scalar(inner)?))),
        })
    }
}

fn record_index(record: Record) -> CExpr {
    match record {
        Record::Fixed(i) => CExpr::Const(i as i64),
        Record::Selected(s) => CExpr::Index(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{compile, Expr, ExprKind, Literal, SourceText, Span};

    fn lit(v: i64) -> Expr {
        Expr::new(ExprKind::Lit(Literal::Int(v)), Span::default())
    }

    #[test]
    fn rewrite_examples() {
        let assume = |v| Stmt::Assume { cond: lit(v), span: Span::default() };
        let assert = |v| Stmt::Assert { cond: lit(v), span: Span::default() };
        assert_eq!(
            rewrite_assert_as_assume(&[assume(1), assert(2)]),
            vec![assume(1), assume(2)]
        );
        assert_eq!(rewrite_assert_as_assume::<Expr>(&[]), vec![]);
        assert_eq!(
            rewrite_assert_as_assume(&[assert(1), assert(1)]),
            vec![assume(1), assume(1)]
        );
    }

    fn lower_src(src: &str) -> ConstraintModel {
        lower(&compile(&SourceText::new("t", src)).unwrap()).unwrap()
    }

    #[test]
    fn minimal_model() {
        let model = lower_src("class X:\n  f: Domain[int, range(1, 2)]\ndef v(x: X):\n  assume(x.f == 1)\n");
        assert_eq!(model.vars.len(), 1);
        assert_eq!(model.vars[0].domain, VarDomain::IntRange { lo: 1, hi: 2 });
        assert_eq!(model.constraints.len(), 1);
        assert!(model.selectors.is_empty());
        assert!(model.alldiff_groups.is_empty());
    }

    #[test]
    fn paper_data_structure_and_first_clue() {
        let src = r#"
class House:
  house_number: Unique[Domain[int, range(1, 7)]]
  name: Unique[Domain[str, "Alice", "Eric", "Peter", "Bob", "Carol", "Dan"]]
  phone: Unique[Domain[str, "iphone 13", "xiaomi mi 11", "pixel 6", "galaxy s21", "oneplus 9", "nokia 8"]]

class PuzzleSolution:
  houses: list[House, 6]

def validate(solution: PuzzleSolution) -> None:
  bob = nondet(solution.houses)
  assume(bob.name == "Bob")
  assert bob.phone == "xiaomi mi 11"
"#;
        let model = lower_src(src);
        assert_eq!(model.vars.len(), 6 * 3);
        assert_eq!(model.alldiff_groups.len(), 3);
        assert!(model.alldiff_groups.iter().all(|g| g.len() == 6));
        assert_eq!(model.selectors.len(), 1);
        assert_eq!(model.selectors[0].list_len, 6);
        assert_eq!(model.selectors[0].name, "bob");
        let s = SelectorId(0);
        assert_eq!(
            model.constraints,
            vec![
                CExpr::cmp(CmpOp::Eq, CExpr::Elem { selector: s, field: 1 }, CExpr::Const(3)),
                CExpr::cmp(CmpOp::Eq, CExpr::Elem { selector: s, field: 2 }, CExpr::Const(1)),
            ]
        );
        assert_eq!(model.vars[7].name, "houses[2].name");
        assert_eq!(model.layout.var(2, "name"), Some(VarId(7)));
        assert_eq!(model.layout.position_field, Some(0));
    }

    #[test]
    fn record_equality_lowers_to_indices() {
        let src = r#"
class P:
  n: Unique[Domain[str, "a", "b", "c"]]
class S:
  ps: list[P, 3]
def v(s: S):
  x = nondet(s.ps)
  y = nondet(s.ps)
  assume(x != y)
  assume(x == s.ps[1])
"#;
        let model = lower_src(src);
        assert_eq!(
            model.constraints[0],
            CExpr::cmp(CmpOp::Ne, CExpr::Index(SelectorId(0)), CExpr::Index(SelectorId(1)))
        );
        assert_eq!(
            model.constraints[1],
            CExpr::cmp(CmpOp::Eq, CExpr::Index(SelectorId(0)), CExpr::Const(1))
        );
    }

    #[test]
    fn inline_nondet_gets_positional_name_and_reassignment_rebinds() {
        let src = r#"
class P:
  k: Domain[int, range(0, 4)]
class S:
  ps: list[P, 2]
def v(s: S):
  assume(nondet(s.ps).k == 3)
  x = s.ps[0].k
  x = x + 1
  assume(x == 2)
"#;
        let model = lower_src(src);
        assert_eq!(model.selectors[0].name, "nondet@7:10");
        assert_eq!(
            model.constraints[1],
            CExpr::cmp(
                CmpOp::Eq,
                CExpr::Arith(ArithOp::Add, Box::new(CExpr::Var(VarId(0))), Box::new(CExpr::Const(1))),
                CExpr::Const(2)
            )
        );
    }

    #[test]
    fn lowering_is_deterministic() {
        let src = "class P:\n  k: Unique[Domain[int, range(0, 3)]]\nclass S:\n  ps: list[P, 3]\ndef v(s: S):\n  a = nondet(s.ps)\n  assert a.k == 2\n";
        assert_eq!(lower_src(src), lower_src(src));
    }
}
