//! Canonical source rendering. Binary, comparison and boolean expressions are
//! fully parenthesised so re-parsing never depends on precedence.

use std::fmt::Write;

use super::ast::*;

pub fn pretty(program: &DslProgram) -> String {
    let mut out = String::new();
    for class in &program.classes {
        pretty_class(&mut out, class);
        out.push('\n');
    }
    for func in &program.functions {
        pretty_func(&mut out, func);
        out.push('\n');
    }
    out
}

pub fn pretty_class(out: &mut String, class: &ClassDecl) {
    let _ = writeln!(out, "class {}:", class.name);
    for field in &class.fields {
        let _ = writeln!(out, "    {}: {}", field.name, field_type(field));
    }
}

pub fn field_type(field: &FieldDecl) -> String {
    if let Some(len) = field.list_len {
        return format!("list[{}, {}]", field.base, len);
    }
    let inner = match &field.domain {
        Some(domain) => format!("Domain[{}, {}]", field.base, domain_spec(domain)),
        None => field.base.to_string(),
    };
    if field.unique {
        format!("Unique[{inner}]")
    } else {
        inner
    }
}

fn domain_spec(domain: &DomainSpec) -> String {
    match domain {
        DomainSpec::IntRange { lo, hi } => format!("range({lo}, {hi})"),
        DomainSpec::Strings(values) => values
            .iter()
            .map(|v| quote(v))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

pub fn pretty_func(out: &mut String, func: &FuncDecl) {
    let _ = writeln!(
        out,
        "def {}({}: {}) -> None:",
        func.name, func.param_name, func.param_type
    );
    if func.body.is_empty() {
        out.push_str("    pass\n");
    }
    for stmt in &func.body {
        out.push_str("    ");
        out.push_str(&pretty_stmt(stmt));
        out.push('\n');
    }
}

pub fn pretty_stmt(stmt: &Stmt) -> String {
    match stmt {
        Stmt::Assign { target, value, .. } => format!("{target} = {}", pretty_expr(value)),
        Stmt::Assume { cond, .. } => format!("assume({})", pretty_expr(cond)),
        Stmt::Assert { cond, .. } => format!("assert {}", pretty_expr(cond)),
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn pretty_expr(expr: &Expr) -> String {
    match &expr.kind {
        ExprKind::Lit(Literal::Int(v)) => v.to_string(),
        ExprKind::Lit(Literal::Str(s)) => quote(s),
        ExprKind::Local(name) => name.clone(),
        ExprKind::Field(base, field) => format!("{}.{field}", pretty_postfix_base(base)),
        ExprKind::Index(base, idx) => format!("{}[{idx}]", pretty_postfix_base(base)),
        ExprKind::Nondet(arg) => format!("nondet({})", pretty_expr(arg)),
        ExprKind::Abs(arg) => format!("abs({})", pretty_expr(arg)),
        ExprKind::Binary(op, a, b) => {
            format!("({} {} {})", pretty_expr(a), op.symbol(), pretty_expr(b))
        }
        ExprKind::Compare(op, a, b) => {
            format!("({} {} {})", pretty_expr(a), op.symbol(), pretty_expr(b))
        }
        ExprKind::BoolOp(op, operands) => {
            let parts: Vec<String> = operands.iter().map(pretty_expr).collect();
            format!("({})", parts.join(&format!(" {} ", op.keyword())))
        }
        ExprKind::Not(inner) => format!("(not {})", pretty_expr(inner)),
    }
}

fn pretty_postfix_base(base: &Expr) -> String {
    match base.kind {
        ExprKind::Lit(Literal::Int(v)) if v < 0 => format!("({v})"),
        _ => pretty_expr(base),
    }
}
