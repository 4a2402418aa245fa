//! Logic.py front end: tokenizer, parser, pretty-printer and type checker.

pub mod ast;
mod check;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use check::{
    check as check_program, CheckedProgram, ClassId, ResultShape, ScalarField, ScalarKind, TExpr,
    TExprKind, TStmt, Ty,
};
pub use pretty::{pretty, pretty_expr, pretty_stmt, quote};

/// Diagnostic format: `origin:line:col: SyntaxError: message`.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{origin}:{line}:{col}: SyntaxError: {message}")]
pub struct SyntaxError {
    pub origin: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SemanticCategory {
    NoEntryFunction,
    MultipleEntryFunctions,
    UnknownName,
    TypeMismatch,
    ValueOutsideDomain,
    BadNondetTarget,
    UniqueWithoutDomain,
}

impl fmt::Display for SemanticCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{origin}:{line}:{col}: {category}: {message}")]
pub struct SemanticError {
    pub origin: String,
    pub category: SemanticCategory,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Semantic(#[from] SemanticError),
}

pub fn parse(source: &SourceText) -> Result<DslProgram, SyntaxError> {
    parser::parse(source)
}

pub fn check(program: &DslProgram, origin: &str) -> Result<CheckedProgram, SemanticError> {
    check::check(program, origin)
}

/// Parses and checks in one step.
pub fn compile(source: &SourceText) -> Result<CheckedProgram, FrontendError> {
    let program = parse(source)?;
    Ok(check(&program, &source.origin)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG3_FIG4: &str = r#"
class House:
  house_number: Unique[
    Domain[int, range(1, 7)]
  ]
  name: Unique[
    Domain[str, "Alice", "Eric", "Peter", "Bob", "Carol", "Dan"]
  ]
  phone: Unique[
    Domain[str, "xiaomi mi 11", "iphone 13", "pixel 6", "galaxy s21", "oneplus 9", "nokia 8"]
  ]
  lunch: Unique[Domain[str, "soup", "stew", "pizza", "salad", "tacos", "sushi"]]
  smoothie: Unique[Domain[str, "dragonfruit", "lime", "cherry", "mango", "kiwi", "apple"]]
  house_style: Unique[Domain[str, "ranch", "colonial", "victorian", "modern", "cape", "craftsman"]]

class PuzzleSolution:
  houses: list[House, 6]

def validate(solution: PuzzleSolution) -> None:
  # Clue 1: Bob is the person who uses
  # a Xiaomi Mi 11.
  bob = nondet(solution.houses)
  assume(bob.name == "Bob")
  assert bob.phone == "xiaomi mi 11"

  # Clue 2: The person who loves the
  # soup is in the fourth house.
  soup_lover = nondet(solution.houses)
  assume(soup_lover.lunch == "soup")
  assert soup_lover.house_number == 4

  d = nondet(solution.houses)
  assume(d.smoothie == "dragonfruit")
  r = nondet(solution.houses)
  assume(r.house_style == "ranch")
  assert d.house_number < r.house_number
"#;

    fn compile_str(src: &str) -> Result<CheckedProgram, FrontendError> {
        compile(&SourceText::new("test.py", src))
    }

    fn category(src: &str) -> SemanticCategory {
        match compile_str(src) {
            Err(FrontendError::Semantic(e)) => e.category,
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn paper_program_checks() {
        let checked = compile_str(FIG3_FIG4).unwrap();
        assert_eq!(checked.entry_fn().name, "validate");
        assert_eq!(checked.shape.instance_count(), 6);
        assert_eq!(checked.shape.position_field(), Some(0));
        assert_eq!(checked.body.len(), 11);
    }

    #[test]
    fn value_outside_domain() {
        let src = r#"
class P:
  name: Unique[Domain[str, "Bob", "Ann"]]
  phone: Unique[Domain[str, "google pixel 6", "iphone 13", "oneplus 9", "samsung galaxy s21"]]
class S:
  people: list[P, 2]
def validate(s: S) -> None:
  bob = nondet(s.people)
  assume(bob.name == "Bob")
  assert bob.phone == "nokia 3310"
"#;
        let err = compile_str(src).unwrap_err();
        let FrontendError::Semantic(err) = err else { panic!() };
        assert_eq!(err.category, SemanticCategory::ValueOutsideDomain);
        assert_eq!((err.line, err.col), (10, 23));
        assert!(err.to_string().starts_with("test.py:10:23: ValueOutsideDomain: "));
    }

    #[test]
    fn entry_function_count() {
        let classes = "class S:\n  x: Domain[int, range(0, 2)]\n";
        assert_eq!(category(classes), SemanticCategory::NoEntryFunction);
        let two = format!(
            "{classes}def a(s: S):\n  assume(s.x == 1)\ndef b(s: S):\n  assume(s.x == 0)\n"
        );
        assert_eq!(category(&two), SemanticCategory::MultipleEntryFunctions);
        assert_eq!(category(""), SemanticCategory::NoEntryFunction);
    }

    #[test]
    fn entry_name_is_free() {
        let src = "class S:\n  x: Domain[int, range(0, 2)]\ndef check_it(s: S):\n  assume(s.x == 1)\n";
        assert_eq!(compile_str(src).unwrap().entry_fn().name, "check_it");
    }

    #[test]
    fn error_categories() {
        let base = "class P:\n  n: Unique[Domain[str, \"a\", \"b\"]]\n  k: Domain[int, range(0, 3)]\nclass S:\n  ps: list[P, 2]\n";
        let with = |body: &str| format!("{base}def v(s: S):\n  {body}\n");
        assert_eq!(category(&with("assume(q.n == \"a\")")), SemanticCategory::UnknownName);
        assert_eq!(category(&with("assume(s.ps[0].zz == 1)")), SemanticCategory::UnknownName);
        assert_eq!(category(&with("assume(s.ps[0].n < \"a\")")), SemanticCategory::TypeMismatch);
        assert_eq!(category(&with("assume(s.ps[0].n == 1)")), SemanticCategory::TypeMismatch);
        assert_eq!(category(&with("assume(s.ps[0].k + 1)")), SemanticCategory::TypeMismatch);
        assert_eq!(category(&with("assume(s.ps[2].k == 1)")), SemanticCategory::TypeMismatch);
        assert_eq!(category(&with("x = nondet(s.ps[0])")), SemanticCategory::BadNondetTarget);
        assert_eq!(category(&with("assume(s.ps[0].n == \"c\")")), SemanticCategory::ValueOutsideDomain);
        let unique_int = "class S:\n  x: Unique[int]\ndef v(s: S):\n  assume(s.x == 1)\n";
        assert_eq!(category(unique_int), SemanticCategory::UniqueWithoutDomain);
    }

    #[test]
    fn check_is_deterministic() {
        let program = parse(&SourceText::new("t", FIG3_FIG4)).unwrap();
        assert_eq!(check(&program, "t"), check(&program, "t"));
    }
}
