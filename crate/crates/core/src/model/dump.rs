use std::fmt::Write;

use super::{CExpr, ConstraintModel};

/// Line-oriented debug rendering, stable across runs:
///
/// ```text
/// var houses[0].name : {"alice", "bob"}
/// sel bob : 0..2 of House
/// alldiff houses[0].name houses[1].name
/// constraint (== (elem bob name) 1)
/// ```
pub fn dump(model: &ConstraintModel) -> String {
    let mut out = String::new();
    for var in &model.vars {
        let _ = writeln!(out, "var {} : {}", var.name, var.domain);
    }
    for sel in &model.selectors {
        let _ = writeln!(out, "sel {} : 0..{} of {}", sel.name, sel.list_len, sel.element_class);
    }
    for group in &model.alldiff_groups {
        let names: Vec<&str> = group.iter().map(|v| model.vars[v.0].name.as_str()).collect();
        let _ = writeln!(out, "alldiff {}", names.join(" "));
    }
    for c in &model.constraints {
        let _ = writeln!(out, "constraint {}", prefix(model, c));
    }
    out
}

fn prefix(model: &ConstraintModel, expr: &CExpr) -> String {
    match expr {
        CExpr::Const(v) => v.to_string(),
        CExpr::Var(v) => model.vars[v.0].name.clone(),
        CExpr::Elem { selector, field } => format!(
            "(elem {} {})",
            model.selectors[selector.0].name, model.layout.fields[*field]
        ),
        CExpr::Index(s) => format!("(index {})", model.selectors[s.0].name),
        CExpr::Abs(e) => format!("(abs {})", prefix(model, e)),
        CExpr::Arith(op, a, b) => {
            format!("({} {} {})", op.symbol(), prefix(model, a), prefix(model, b))
        }
        CExpr::Cmp(op, a, b) => {
            format!("({} {} {})", op.symbol(), prefix(model, a), prefix(model, b))
        }
        CExpr::And(es) | CExpr::Or(es) => {
            let head = if matches!(expr, CExpr::And(_)) { "and" } else { "or" };
            let parts: Vec<String> = es.iter().map(|e| prefix(model, e)).collect();
            format!("({head} {})", parts.join(" "))
        }
        CExpr::Not(e) => format!("(not {})", prefix(model, e)),
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend::{compile, SourceText};

    #[test]
    fn golden_dump() {
        let src = r#"
class P:
  pos: Unique[Domain[int, range(1, 3)]]
  name: Unique[Domain[str, "ann", "bob"]]
class S:
  people: list[P, 2]
def v(s: S):
  bob = nondet(s.people)
  assume(bob.name == "bob")
  assert abs(bob.pos - s.people[0].pos) == 1 or not (bob.pos > 1)
"#;
        let model = super::super::lower(&compile(&SourceText::new("t", src)).unwrap()).unwrap();
        let expected = "\
var people[0].pos : [1, 3)
var people[0].name : {\"ann\", \"bob\"}
var people[1].pos : [1, 3)
var people[1].name : {\"ann\", \"bob\"}
sel bob : 0..2 of P
alldiff people[0].pos people[1].pos
alldiff people[0].name people[1].name
constraint (== (elem bob name) 1)
constraint (or (== (abs (- (elem bob pos) people[0].pos)) 1) (not (> (elem bob pos) 1)))
";
        assert_eq!(super::dump(&model), expected);
    }
}
