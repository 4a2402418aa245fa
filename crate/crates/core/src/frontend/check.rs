//! Name resolution and type checking.
//!
//! The checker accepts a closed shape of result data structure: the entry
//! parameter's class either holds scalar fields only (one record) or exactly
//! one fixed-size list of a scalar-only element class (a table of records).

use std::collections::HashMap;

use super::ast::*;
use super::{SemanticCategory, SemanticError};

pub type ClassId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScalarKind {
    Int { lo: i64, hi: i64 },
    Str { values: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarField {
    pub name: String,
    pub kind: ScalarKind,
    pub unique: bool,
}

/// The resolved result data structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultShape {
    /// Class of the entry parameter.
    pub root_class: ClassId,
    /// `Some((field name, length))` when the root holds a list of records.
    pub list: Option<(String, usize)>,
    /// Class whose scalar fields form one record (a row).
    pub record_class: ClassId,
    pub fields: Vec<ScalarField>,
}

impl ResultShape {
    pub fn instance_count(&self) -> usize {
        self.list.as_ref().map_or(1, |(_, len)| *len)
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    /// The record field used to order rows: the single unique integer field,
    /// when exactly one exists and the result is a list.
    pub fn position_field(&self) -> Option<usize> {
        self.list.as_ref()?;
        let mut candidates = self
            .fields
            .iter()
            .enumerate()
            .filter(|(_, f)| f.unique && matches!(f.kind, ScalarKind::Int { .. }));
        let first = candidates.next()?;
        if candidates.next().is_some() {
            return None;
        }
        Some(first.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
    /// A string ranging over the given enumeration.
    Str(Vec<String>),
    /// A string literal not yet tied to a field domain.
    StrLit,
    /// One record of the result class (the root when it has no list).
    Record,
    /// The root object when it holds the record list.
    Root,
    /// The record list.
    List,
}

impl Ty {
    fn name(&self) -> &'static str {
        match self {
            Ty::Int => "int",
            Ty::Bool => "bool",
            Ty::Str(_) | Ty::StrLit => "str",
            Ty::Record | Ty::Root => "object",
            Ty::List => "list",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Ty,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TExprKind {
    Int(i64),
    /// String literal with its code in the domain it is compared against.
    Str { value: String, code: usize },
    Local(String),
    /// Scalar field of a record, by index into `ResultShape::fields`.
    Field(Box<TExpr>, usize),
    /// The record list reached from the root.
    ListField(Box<TExpr>),
    Index(Box<TExpr>, usize),
    Nondet(Box<TExpr>),
    Abs(Box<TExpr>),
    Binary(ArithOp, Box<TExpr>, Box<TExpr>),
    Compare(CmpOp, Box<TExpr>, Box<TExpr>),
    BoolOp(BoolOp, Vec<TExpr>),
    Not(Box<TExpr>),
}

pub type TStmt = Stmt<TExpr>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedProgram {
    pub program: DslProgram,
    pub shape: ResultShape,
    /// Index of the entry function in `program.functions`.
    pub entry: usize,
    pub body: Vec<TStmt>,
}

impl CheckedProgram {
    pub fn entry_fn(&self) -> &FuncDecl {
        &self.program.functions[self.entry]
    }

    pub fn root_class(&self) -> &ClassDecl {
        &self.program.classes[self.shape.root_class]
    }

    pub fn record_class(&self) -> &ClassDecl {
        &self.program.classes[self.shape.record_class]
    }
}

struct Checker<'a> {
    origin: &'a str,
    program: &'a DslProgram,
    shape: ResultShape,
    locals: HashMap<String, Ty>,
}

type CResult<T> = Result<T, SemanticError>;

pub fn check(program: &DslProgram, origin: &str) -> CResult<CheckedProgram> {
    let err = |category, span, message: String| SemanticError {
        origin: origin.to_string(),
        category,
        line: span_line(span),
        col: span_col(span),
        message,
    };

    let mut class_ids: HashMap<&str, ClassId> = HashMap::new();
    for (id, class) in program.classes.iter().enumerate() {
        if class_ids.insert(class.name.as_str(), id).is_some() {
            return Err(err(
                SemanticCategory::TypeMismatch,
                class.span,
                format!("class `{}` is declared twice", class.name),
            ));
        }
    }
    for class in &program.classes {
        validate_class(class, &class_ids, origin)?;
    }

    let entry = match program.functions.len() {
        0 => {
            return Err(err(
                SemanticCategory::NoEntryFunction,
                Span::new(1, 1),
                "no validation function defined".into(),
            ))
        }
        1 => 0,
        _ => {
            let second = &program.functions[1];
            return Err(err(
                SemanticCategory::MultipleEntryFunctions,
                second.span,
                format!(
                    "found {} functions; exactly one validation function is allowed",
                    program.functions.len()
                ),
            ));
        }
    };
    let func = &program.functions[entry];
    let root_class = *class_ids.get(func.param_type.as_str()).ok_or_else(|| {
        err(
            SemanticCategory::UnknownName,
            func.span,
            format!("unknown class `{}`", func.param_type),
        )
    })?;
    let shape = resolve_shape(program, root_class, &class_ids, origin)?;

    let mut checker = Checker {
        origin,
        program,
        shape,
        locals: HashMap::new(),
    };
    let root_ty = if checker.shape.list.is_some() {
        Ty::Root
    } else {
        Ty::Record
    };
    checker.locals.insert(func.param_name.clone(), root_ty);
    let mut body = Vec::with_capacity(func.body.len());
    for stmt in &func.body {
        body.push(checker.stmt(stmt)?);
    }

    Ok(CheckedProgram {
        program: program.clone(),
        shape: checker.shape,
        entry,
        body,
    })
}

fn span_line(span: Span) -> usize {
    span.line.max(1)
}

fn span_col(span: Span) -> usize {
    span.col.max(1)
}

fn validate_class(
    class: &ClassDecl,
    class_ids: &HashMap<&str, ClassId>,
    origin: &str,
) -> CResult<()> {
    let err = |category, span: Span, message: String| SemanticError {
        origin: origin.to_string(),
        category,
        line: span_line(span),
        col: span_col(span),
        message,
    };
    let mut seen = HashMap::new();
    for field in &class.fields {
        if seen.insert(field.name.as_str(), ()).is_some() {
            return Err(err(
                SemanticCategory::TypeMismatch,
                field.span,
                format!("field `{}.{}` is declared twice", class.name, field.name),
            ));
        }
        match (&field.base, &field.domain) {
            (BaseType::Class(name), _) => {
                if !class_ids.contains_key(name.as_str()) {
                    return Err(err(
                        SemanticCategory::UnknownName,
                        field.span,
                        format!("unknown class `{name}`"),
                    ));
                }
                if field.unique {
                    return Err(err(
                        SemanticCategory::TypeMismatch,
                        field.span,
                        format!("`Unique` cannot apply to object field `{}`", field.name),
                    ));
                }
            }
            (_, None) if field.unique => {
                return Err(err(
                    SemanticCategory::UniqueWithoutDomain,
                    field.span,
                    format!("unique field `{}` needs a `Domain`", field.name),
                ))
            }
            (_, None) => {
                return Err(err(
                    SemanticCategory::TypeMismatch,
                    field.span,
                    format!(
                        "field `{}` needs a finite `Domain` for the solver",
                        field.name
                    ),
                ))
            }
            (BaseType::Int, Some(DomainSpec::IntRange { lo, hi })) => {
                if lo >= hi {
                    return Err(err(
                        SemanticCategory::TypeMismatch,
                        field.span,
                        format!("empty domain range({lo}, {hi}) for `{}`", field.name),
                    ));
                }
            }
            (BaseType::Str, Some(DomainSpec::Strings(values))) => {
                for (i, v) in values.iter().enumerate() {
                    if values[..i].contains(v) {
                        return Err(err(
                            SemanticCategory::TypeMismatch,
                            field.span,
                            format!("duplicate domain value {v:?} for `{}`", field.name),
                        ));
                    }
                }
            }
            (base, Some(_)) => {
                return Err(err(
                    SemanticCategory::TypeMismatch,
                    field.span,
                    format!("domain of `{}` does not match its base type `{base}`", field.name),
                ))
            }
        }
    }
    Ok(())
}

fn scalar_fields(class: &ClassDecl) -> Option<Vec<ScalarField>> {
    class
        .fields
        .iter()
        .map(|f| {
            let kind = match (&f.base, f.domain.as_ref()?) {
                (BaseType::Int, DomainSpec::IntRange { lo, hi }) => ScalarKind::Int { lo: *lo, hi: *hi },
                (BaseType::Str, DomainSpec::Strings(values)) => ScalarKind::Str {
                    values: values.clone(),
                },
                _ => return None,
            };
            Some(ScalarField {
                name: f.name.clone(),
                kind,
                unique: f.unique,
            })
        })
        .collect()
}

fn resolve_shape(
    program: &DslProgram,
    root_class: ClassId,
    class_ids: &HashMap<&str, ClassId>,
    origin: &str,
) -> CResult<ResultShape> {
    let root = &program.classes[root_class];
    let unsupported = |span: Span, message: String| SemanticError {
        origin: origin.to_string(),
        category: SemanticCategory::TypeMismatch,
        line: span_line(span),
        col: span_col(span),
        message,
    };
    if let Some(fields) = scalar_fields(root) {
        return Ok(ResultShape {
            root_class,
            list: None,
            record_class: root_class,
            fields,
        });
    }
    let [field] = root.fields.as_slice() else {
        return Err(unsupported(
            root.span,
            format!(
                "unsupported result shape: `{}` must hold either scalar fields only or exactly one list",
                root.name
            ),
        ));
    };
    let (Some(len), BaseType::Class(elem)) = (field.list_len, &field.base) else {
        return Err(unsupported(
            field.span,
            format!("unsupported result shape: `{}.{}` must be a list", root.name, field.name),
        ));
    };
    let record_class = class_ids[elem.as_str()];
    let record = &program.classes[record_class];
    let fields = scalar_fields(record).ok_or_else(|| {
        unsupported(
            record.span,
            format!("list element class `{}` must hold scalar fields only", record.name),
        )
    })?;
    Ok(ResultShape {
        root_class,
        list: Some((field.name.clone(), len)),
        record_class,
        fields,
    })
}

impl Checker<'_> {
    fn err(&self, category: SemanticCategory, span: Span, message: impl Into<String>) -> SemanticError {
        SemanticError {
            origin: self.origin.to_string(),
            category,
            line: span_line(span),
            col: span_col(span),
            message: message.into(),
        }
    }

    fn mismatch(&self, span: Span, message: impl Into<String>) -> SemanticError {
        self.err(SemanticCategory::TypeMismatch, span, message)
    }

    fn stmt(&mut self, stmt: &Stmt) -> CResult<TStmt> {
        Ok(match stmt {
            Stmt::Assign { target, value, span } => {
                let value = self.expr(value)?;
                if value.ty == Ty::StrLit {
                    return Err(self.mismatch(
                        *span,
                        "a bare string literal has no domain; compare it against a field instead",
                    ));
                }
                self.locals.insert(target.clone(), value.ty.clone());
                Stmt::Assign {
                    target: target.clone(),
                    value,
                    span: *span,
                }
            }
            Stmt::Assume { cond, span } => Stmt::Assume {
                cond: self.condition(cond)?,
                span: *span,
            },
            Stmt::Assert { cond, span } => Stmt::Assert {
                cond: self.condition(cond)?,
                span: *span,
            },
        })
    }

    fn condition(&mut self, expr: &Expr) -> CResult<TExpr> {
        let typed = self.expr(expr)?;
        if typed.ty != Ty::Bool {
            return Err(self.mismatch(
                expr.span,
                format!("expected a boolean condition, found {}", typed.ty.name()),
            ));
        }
        Ok(typed)
    }

    fn expr(&mut self, expr: &Expr) -> CResult<TExpr> {
        let span = expr.span;
        let typed = |kind, ty| TExpr { kind, ty, span };
        Ok(match &expr.kind {
            ExprKind::Lit(Literal::Int(v)) => typed(TExprKind::Int(*v), Ty::Int),
            ExprKind::Lit(Literal::Str(s)) => typed(
                TExprKind::Str {
                    value: s.clone(),
                    code: usize::MAX,
                },
                Ty::StrLit,
            ),
            ExprKind::Local(name) => {
                let ty = self.locals.get(name).cloned().ok_or_else(|| {
                    self.err(
                        SemanticCategory::UnknownName,
                        span,
                        format!("unknown name `{name}`"),
                    )
                })?;
                typed(TExprKind::Local(name.clone()), ty)
            }
            ExprKind::Field(base, name) => {
                let base = self.expr(base)?;
                match base.ty {
                    Ty::Record => {
                        let idx = self.shape.field_index(name).ok_or_else(|| {
                            self.err(
                                SemanticCategory::UnknownName,
                                span,
                                format!(
                                    "class `{}` has no field `{name}`",
                                    self.program.classes[self.shape.record_class].name
                                ),
                            )
                        })?;
                        let ty = match &self.shape.fields[idx].kind {
                            ScalarKind::Int { .. } => Ty::Int,
                            ScalarKind::Str { values } => Ty::Str(values.clone()),
                        };
                        typed(TExprKind::Field(Box::new(base), idx), ty)
                    }
                    Ty::Root => {
                        let (list_name, _) = self.shape.list.as_ref().expect("root implies list");
                        if list_name != name {
                            return Err(self.err(
                                SemanticCategory::UnknownName,
                                span,
                                format!(
                                    "class `{}` has no field `{name}`",
                                    self.program.classes[self.shape.root_class].name
                                ),
                            ));
                        }
                        typed(TExprKind::ListField(Box::new(base)), Ty::List)
                    }
                    ref other => {
                        return Err(self.mismatch(
                            span,
                            format!("cannot access field `{name}` on a value of type {}", other.name()),
                        ))
                    }
                }
            }
            ExprKind::Index(base, idx) => {
                let base = self.expr(base)?;
                if base.ty != Ty::List {
                    return Err(self.mismatch(span, "only the record list can be indexed"));
                }
                let len = self.shape.instance_count();
                if *idx < 0 || *idx as usize >= len {
                    return Err(self.mismatch(
                        span,
                        format!("index {idx} is out of bounds for a list of length {len}"),
                    ));
                }
                typed(TExprKind::Index(Box::new(base), *idx as usize), Ty::Record)
            }
            ExprKind::Nondet(arg) => {
                let arg = self.expr(arg)?;
                if arg.ty != Ty::List {
                    return Err(self.err(
                        SemanticCategory::BadNondetTarget,
                        span,
                        format!(
                            "`nondet` needs a fixed-size list, found {}",
                            arg.ty.name()
                        ),
                    ));
                }
                typed(TExprKind::Nondet(Box::new(arg)), Ty::Record)
            }
            ExprKind::Abs(arg) => {
                let arg = self.int_operand(arg)?;
                typed(TExprKind::Abs(Box::new(arg)), Ty::Int)
            }
            ExprKind::Binary(op, a, b) => {
                let a = self.int_operand(a)?;
                let b = self.int_operand(b)?;
                typed(TExprKind::Binary(*op, Box::new(a), Box::new(b)), Ty::Int)
            }
            ExprKind::Compare(op, a, b) => {
                let (a, b) = self.compare_operands(*op, a, b, span)?;
                typed(TExprKind::Compare(*op, Box::new(a), Box::new(b)), Ty::Bool)
            }
            ExprKind::BoolOp(op, operands) => {
                let operands = operands
                    .iter()
                    .map(|e| self.condition(e))
                    .collect::<CResult<Vec<_>>>()?;
                typed(TExprKind::BoolOp(*op, operands), Ty::Bool)
            }
            ExprKind::Not(inner) => {
                let inner = self.condition(inner)?;
                typed(TExprKind::Not(Box::new(inner)), Ty::Bool)
            }
        })
    }

    fn int_operand(&mut self, expr: &Expr) -> CResult<TExpr> {
        let typed = self.expr(expr)?;
        if typed.ty != Ty::Int {
            return Err(self.mismatch(
                expr.span,
                format!("arithmetic needs int operands, found {}", typed.ty.name()),
            ));
        }
        Ok(typed)
    }

    fn compare_operands(
        &mut self,
        op: CmpOp,
        a: &Expr,
        b: &Expr,
        span: Span,
    ) -> CResult<(TExpr, TExpr)> {
        let mut a = self.expr(a)?;
        let mut b = self.expr(b)?;
        match (&a.ty, &b.ty) {
            (Ty::Int, Ty::Int) => {}
            (Ty::Record, Ty::Record) if op.is_equality() => {}
            (Ty::Str(x), Ty::Str(y)) if op.is_equality() => {
                if x != y {
                    return Err(self.mismatch(
                        span,
                        "cannot compare string fields with different domains",
                    ));
                }
            }
            (Ty::Str(values), Ty::StrLit) if op.is_equality() => {
                let values = values.clone();
                self.bind_literal(&mut b, &values)?;
            }
            (Ty::StrLit, Ty::Str(values)) if op.is_equality() => {
                let values = values.clone();
                self.bind_literal(&mut a, &values)?;
            }
            (Ty::StrLit, Ty::StrLit) => {
                return Err(self.mismatch(
                    span,
                    "comparing two string literals is meaningless; compare a field instead",
                ))
            }
            (x, y) => {
                return Err(self.mismatch(
                    span,
                    format!(
                        "operator `{}` cannot compare {} with {}",
                        op.symbol(),
                        x.name(),
                        y.name()
                    ),
                ))
            }
        }
        Ok((a, b))
    }

    fn bind_literal(&self, lit: &mut TExpr, values: &[String]) -> CResult<()> {
        let TExprKind::Str { value, code } = &mut lit.kind else {
            unreachable!("StrLit type implies a string literal node");
        };
        *code = values.iter().position(|v| v == value).ok_or_else(|| {
            self.err(
                SemanticCategory::ValueOutsideDomain,
                lit.span,
                format!(
                    "{value:?} is not in the field's domain [{}]",
                    values
                        .iter()
                        .map(|v| format!("{v:?}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            )
        })?;
        lit.ty = Ty::Str(values.to_vec());
        Ok(())
    }
}
