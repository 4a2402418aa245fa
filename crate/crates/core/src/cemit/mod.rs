//! CBMC search harness emission.
//!
//! The harness declares one struct per class, static domain arrays for
//! `Unique` fields, nondeterministic initialisers, the validator with every
//! assertion turned into an assumption, and a `main` ending in a single
//! reachability assertion whose counterexample carries the solution.

use std::collections::HashMap;
use std::fmt::Write;
use std::ops::Range;

use thiserror::Error;

use crate::frontend::ast::{BaseType, BoolOp, ClassDecl, CmpOp, DomainSpec, FieldDecl, Stmt};
use crate::frontend::{CheckedProgram, TExpr, TExprKind, Ty};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sections {
    pub structs: Range<usize>,
    pub domain_arrays: Range<usize>,
    pub init_helpers: Range<usize>,
    pub validate: Range<usize>,
    pub main: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CHarness {
    pub text: String,
    pub sections: Sections,
}

impl CHarness {
    pub fn section(&self, range: &Range<usize>) -> &str {
        &self.text[range.clone()]
    }
}

/// Reserved: every construct the checker accepts has a C mapping.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("no C mapping for {0}")]
pub struct EmitError(pub String);

const PRELUDE: &str = "\
#include <stdbool.h>
#include <stddef.h>
#include <stdlib.h>
#include <string.h>

";

const MACROS: &str = r#"#define __CPROVER_unique_domain( \
  field, field_domain_array) \
{ \
  size_t index; \
  __CPROVER_assume(index < \
    (sizeof(field_domain_array) / \
     sizeof(field_domain_array[0]))); \
  __CPROVER_assume( \
    !field_domain_array##_used[index]); \
  field_domain_array##_used[index] = \
    true; \
  field = field_domain_array[index]; \
}

static size_t nondet_index(size_t length) {
  size_t index;
  __CPROVER_assume(index < length);
  return index;
}

#define __CPROVER_nondet_element(list) \
  (list)[nondet_index(sizeof(list) / sizeof((list)[0]))]

"#;

const C_KEYWORDS: &[&str] = &[
    "auto", "bool", "break", "case", "char", "const", "continue", "default", "do", "double",
    "else", "enum", "extern", "false", "float", "for", "goto", "if", "index", "inline", "int",
    "long", "main", "register", "restrict", "return", "short", "signed", "sizeof", "static",
    "struct", "switch", "true", "typedef", "union", "unsigned", "validate", "void", "volatile",
    "while",
];

pub fn emit(program: &CheckedProgram) -> Result<CHarness, EmitError> {
    let classes = struct_order(&program.program.classes);
    let mut out = String::from(PRELUDE);
    let mut sections = Sections::default();

    let start = out.len();
    for class in &classes {
        emit_struct(&mut out, class);
    }
    sections.structs = start..out.len();

    let start = out.len();
    for class in &classes {
        for field in &class.fields {
            emit_domain_array(&mut out, class, field);
        }
    }
    if out.len() > start {
        out.push('\n');
    }
    sections.domain_arrays = start..out.len();

    let start = out.len();
    out.push_str(MACROS);
    for class in &classes {
        emit_init(&mut out, class);
    }
    sections.init_helpers = start..out.len();

    let start = out.len();
    Validator::new(program).emit(&mut out)?;
    sections.validate = start..out.len();

    let start = out.len();
    let root = &program.root_class().name;
    let _ = write!(
        out,
        "int main(void) {{\n  struct {root} solution;\n  init_{root}(&solution);\n  validate(solution);\n\n  __CPROVER_output(\"solution\", solution);\n  __CPROVER_assert(false, \"\");\n}}\n"
    );
    sections.main = start..out.len();
    Ok(CHarness { text: out, sections })
}

/// Declaration order, except that a class is emitted before any class
/// embedding it.
fn struct_order(classes: &[ClassDecl]) -> Vec<&ClassDecl> {
    fn visit<'a>(
        c: &'a ClassDecl,
        classes: &'a [ClassDecl],
        done: &mut Vec<&'a str>,
        out: &mut Vec<&'a ClassDecl>,
    ) {
        if done.contains(&c.name.as_str()) {
            return;
        }
        done.push(&c.name);
        for f in &c.fields {
            if let BaseType::Class(name) = &f.base {
                if let Some(dep) = classes.iter().find(|d| &d.name == name) {
                    visit(dep, classes, done, out);
                }
            }
        }
        out.push(c);
    }
    let mut done = Vec::new();
    let mut out = Vec::new();
    for c in classes {
        visit(c, classes, &mut done, &mut out);
    }
    out
}

fn c_type(base: &BaseType) -> String {
    match base {
        BaseType::Int => "int".into(),
        BaseType::Str => "const char *".into(),
        BaseType::Class(name) => format!("struct {name}"),
    }
}

fn emit_struct(out: &mut String, class: &ClassDecl) {
    let _ = writeln!(out, "struct {} {{", class.name);
    for f in &class.fields {
        let ty = c_type(&f.base);
        match f.list_len {
            Some(n) => {
                let _ = writeln!(out, "  {ty} {}[{n}];", f.name);
            }
            None => {
                let _ = writeln!(out, "  {ty} {};", f.name);
            }
        }
    }
    out.push_str("};\n\n");
}

fn domain_values(domain: &DomainSpec) -> Vec<String> {
    match domain {
        DomainSpec::IntRange { lo, hi } => (*lo..*hi).map(|v| v.to_string()).collect(),
        DomainSpec::Strings(values) => values.iter().map(|v| c_string(v)).collect(),
    }
}

fn emit_domain_array(out: &mut String, class: &ClassDecl, field: &FieldDecl) {
    let (true, Some(domain)) = (field.unique, &field.domain) else {
        return;
    };
    let values = domain_values(domain);
    let ty = match field.base {
        BaseType::Str => "const char *",
        _ => "int",
    };
    let array = format!("{}_{}", class.name, field.name);
    let _ = writeln!(out, "static {ty} {array}[] =\n  {{{}}};", values.join(", "));
    let _ = writeln!(out, "static bool {array}_used[{}];", values.len());
}

fn emit_init(out: &mut String, class: &ClassDecl) {
    let _ = writeln!(out, "static void init_{}(\n  struct {} * instance) {{\n", class.name, class.name);
    for f in &class.fields {
        let target = format!("instance->{}", f.name);
        match (&f.base, f.list_len, &f.domain) {
            (BaseType::Class(name), Some(n), _) => {
                let _ = writeln!(
                    out,
                    "  for (size_t i = 0; i < {n}; ++i) {{\n    init_{name}(&{target}[i]);\n  }}"
                );
            }
            (BaseType::Class(name), None, _) => {
                let _ = writeln!(out, "  init_{name}(&{target});");
            }
            (_, _, Some(_)) if f.unique => {
                let _ = writeln!(
                    out,
                    "  __CPROVER_unique_domain(\n    {target},\n    {}_{}\n  );",
                    class.name, f.name
                );
            }
            (_, _, Some(DomainSpec::IntRange { lo, hi })) => {
                let _ = writeln!(
                    out,
                    "  {{\n    int value;\n    __CPROVER_assume(value >= {lo} && value < {hi});\n    {target} = value;\n  }}"
                );
            }
            (_, _, Some(DomainSpec::Strings(values))) => {
                let alts: Vec<String> =
                    values.iter().map(|v| format!("value == {}", c_string(v))).collect();
                let _ = writeln!(
                    out,
                    "  {{\n    const char * value;\n    __CPROVER_assume({});\n    {target} = value;\n  }}",
                    alts.join(" || ")
                );
            }
            // the checker rejects scalar fields without a domain
            (_, _, None) => {}
        }
    }
    out.push_str("}\n\n");
}

fn c_string(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\{:03o}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Validator<'p> {
    program: &'p CheckedProgram,
    /// DSL local -> (C name, C type); list locals map to an inlined expression.
    locals: HashMap<String, Local>,
    taken: Vec<String>,
}

#[derive(Clone)]
enum Local {
    Var { c_name: String, c_type: String },
    Alias(String),
}

impl<'p> Validator<'p> {
    fn new(program: &'p CheckedProgram) -> Self {
        let param = program.entry_fn().param_name.clone();
        Validator {
            program,
            locals: HashMap::new(),
            taken: vec![param],
        }
    }

    fn fresh(&mut self, base: &str) -> String {
        let base = if C_KEYWORDS.contains(&base) {
            format!("{base}_")
        } else {
            base.to_string()
        };
        let mut name = base.clone();
        let mut n = 2;
        while self.taken.contains(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        self.taken.push(name.clone());
        name
    }

    fn c_type_of(&self, ty: &Ty) -> String {
        let shape = &self.program.shape;
        match ty {
            Ty::Int => "int".into(),
            Ty::Bool => "bool".into(),
            Ty::Str(_) | Ty::StrLit => "const char *".into(),
            Ty::Record => format!("struct {}", self.program.record_class().name),
            Ty::Root => format!("struct {}", self.program.program.classes[shape.root_class].name),
            Ty::List => format!("struct {} *", self.program.record_class().name),
        }
    }

    fn emit(mut self, out: &mut String) -> Result<(), EmitError> {
        let func = self.program.entry_fn();
        let _ = writeln!(
            out,
            "static void validate(\n  struct {} {}) {{\n",
            func.param_type, func.param_name
        );
        for stmt in &self.program.body {
            match stmt {
                Stmt::Assign { target, value, .. } => {
                    let rhs = self.expr(value);
                    if value.ty == Ty::List {
                        self.locals.insert(target.clone(), Local::Alias(rhs));
                        continue;
                    }
                    let c_type = self.c_type_of(&value.ty);
                    match self.locals.get(target) {
                        Some(Local::Var { c_name, c_type: t }) if *t == c_type => {
                            let _ = writeln!(out, "  {c_name} = {rhs};");
                        }
                        _ => {
                            let c_name = self.fresh(target);
                            let sep = if c_type.ends_with('*') { "" } else { " " };
                            let _ = writeln!(out, "  {c_type}{sep}{c_name} = {rhs};");
                            self.locals.insert(target.clone(), Local::Var { c_name, c_type });
                        }
                    }
                }
                Stmt::Assume { cond, .. } | Stmt::Assert { cond, .. } => {
                    let _ = writeln!(out, "  __CPROVER_assume({});", self.expr(cond));
                }
            }
        }
        out.push_str("}\n\n");
        Ok(())
    }

    fn expr(&self, e: &TExpr) -> String {
        self.prec(e, 0)
    }

    /// Renders `e`, parenthesising when its precedence is below `min`.
    fn prec(&self, e: &TExpr, min: u8) -> String {
        let (p, text) = match &e.kind {
            TExprKind::Int(v) => (9, v.to_string()),
            TExprKind::Str { value, .. } => (9, c_string(value)),
            TExprKind::Local(name) => {
                let text = match self.locals.get(name) {
                    Some(Local::Var { c_name, .. }) => c_name.clone(),
                    Some(Local::Alias(text)) => text.clone(),
                    None => name.clone(),
                };
                (9, text)
            }
            TExprKind::Field(base, idx) => (
                9,
                format!("{}.{}", self.prec(base, 9), self.program.shape.fields[*idx].name),
            ),
            TExprKind::ListField(base) => {
                let list = self.program.shape.list.as_ref().map_or("", |(n, _)| n.as_str());
                (9, format!("{}.{list}", self.prec(base, 9)))
            }
            TExprKind::Index(base, i) => (9, format!("{}[{i}]", self.prec(base, 9))),
            TExprKind::Nondet(list) => (9, format!("__CPROVER_nondet_element(\n    {})", self.expr(list))),
            TExprKind::Abs(inner) => (9, format!("abs({})", self.expr(inner))),
            TExprKind::Binary(op, a, b) => {
                let p = if op.symbol() == "*" { 6 } else { 5 };
                (p, format!("{} {} {}", self.prec(a, p), op.symbol(), self.prec(b, p + 1)))
            }
            TExprKind::Compare(op, a, b) if matches!(a.ty, Ty::Record | Ty::Root) => {
                let cmp = if *op == CmpOp::Eq { "==" } else { "!=" };
                (
                    3,
                    format!(
                        "memcmp(&{}, &{}, sizeof({})) {cmp} 0",
                        self.prec(a, 9),
                        self.prec(b, 9),
                        self.prec(a, 9)
                    ),
                )
            }
            TExprKind::Compare(op, a, b) => {
                (3, format!("{} {} {}", self.prec(a, 4), op.symbol(), self.prec(b, 4)))
            }
            TExprKind::BoolOp(op, parts) => {
                let (p, sym) = match op {
                    BoolOp::And => (2, " && "),
                    BoolOp::Or => (1, " || "),
                };
                let rendered: Vec<String> = parts.iter().map(|x| self.prec(x, p + 1)).collect();
                (p, rendered.join(sym))
            }
            TExprKind::Not(inner) => (8, format!("!{}", self.prec(inner, 8))),
        };
        if p < min {
            format!("({text})")
        } else {
            text
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{compile, SourceText};

    fn harness(src: &str) -> CHarness {
        emit(&compile(&SourceText::new("t.py", src)).unwrap()).unwrap()
    }

    #[test]
    fn domain_only_fields_use_plain_assumptions() {
        let h = harness(
            "class P:\n  age: Domain[int, range(18, 30)]\n  tint: Domain[str, \"red\", \"blue\"]\n  id: Unique[Domain[int, range(0, 1)]]\ndef v(p: P):\n  assert p.age > 20 and not (p.tint == \"red\" or p.age == 25)\n",
        );
        let arrays = h.section(&h.sections.domain_arrays);
        assert!(!arrays.contains("P_age"));
        assert!(arrays.contains("static bool P_id_used[1];"));
        let init = h.section(&h.sections.init_helpers);
        assert!(init.contains("__CPROVER_assume(value >= 18 && value < 30);"));
        assert!(init.contains("__CPROVER_assume(value == \"red\" || value == \"blue\");"));
        let validate = h.section(&h.sections.validate);
        assert!(validate.contains(
            "__CPROVER_assume(p.age > 20 && !(p.tint == \"red\" || p.age == 25));"
        ));
    }

    #[test]
    fn retyped_local_gets_fresh_name() {
        let h = harness(
            "class H:\n  pos: Unique[Domain[int, range(1, 3)]]\nclass S:\n  hs: list[H, 2]\ndef v(s: S):\n  x = nondet(s.hs)\n  x = x.pos\n  int = 2 * (x - 1)\n  y = nondet(s.hs)\n  assume(y != s.hs[0])\n  assert x == int\n",
        );
        let validate = h.section(&h.sections.validate);
        assert!(validate.contains("struct H x = __CPROVER_nondet_element(\n    s.hs);"));
        assert!(validate.contains("int x_2 = x.pos;"));
        assert!(validate.contains("int int_ = 2 * (x_2 - 1);"));
        assert!(validate.contains("__CPROVER_assume(memcmp(&y, &s.hs[0], sizeof(y)) != 0);"));
        assert!(validate.contains("__CPROVER_assume(x_2 == int_);"));
    }

    #[test]
    fn strings_are_escaped() {
        assert_eq!(c_string("a\"b\\c\n"), "\"a\\\"b\\\\c\\n\"");
    }
}
