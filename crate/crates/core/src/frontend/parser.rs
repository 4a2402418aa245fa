use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

/// Keywords that belong to the host language but not to the closed subset
/// accepted here. Hitting one produces an "unsupported syntax" diagnostic
/// rather than a confusing parse failure further on.
const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "import", "from", "for", "while", "if", "elif", "else", "return", "lambda", "with", "try",
    "except", "finally", "yield", "del", "global", "nonlocal", "raise", "break", "continue",
    "async", "await", "in", "is", "True", "False", "None", "print",
];

pub fn parse(source: &SourceText) -> Result<DslProgram, SyntaxError> {
    let tokens = tokenize(&source.origin, &source.text)?;
    let mut parser = Parser {
        origin: &source.origin,
        tokens,
        pos: 0,
    };
    parser.program()
}

struct Parser<'a> {
    origin: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn err_at(&self, span: Span, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            origin: self.origin.to_string(),
            line: span.line,
            col: span.col,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> SyntaxError {
        let found = self.peek();
        if let Tok::Ident(word) = found {
            if UNSUPPORTED_KEYWORDS.contains(&word.as_str()) {
                return self.err_at(self.span(), format!("unsupported syntax `{word}`"));
            }
        }
        self.err_at(
            self.span(),
            format!("expected {expected}, found {}", found.describe()),
        )
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word)
    }

    fn expect_word(&mut self, word: &str) -> PResult<Span> {
        if self.is_word(word) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&format!("`{word}`")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) if !is_reserved(&name) => {
                let span = self.advance().span;
                Ok((name, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn int_literal(&mut self, what: &str) -> PResult<i64> {
        let negative = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        match *self.peek() {
            Tok::Int(v) => {
                self.advance();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn program(&mut self) -> PResult<DslProgram> {
        let mut program = DslProgram::default();
        loop {
            match self.peek() {
                Tok::Newline => {
                    self.advance();
                }
                Tok::Eof => break,
                Tok::Indent => return Err(self.err_at(self.span(), "unexpected indent")),
                Tok::Str(_) => {
                    // module docstring
                    self.advance();
                    self.expect(Tok::Newline, "end of line")?;
                }
                Tok::Ident(word) if word == "class" => program.classes.push(self.class_decl()?),
                Tok::Ident(word) if word == "def" => program.functions.push(self.func_decl()?),
                _ => return Err(self.unexpected("`class` or `def`")),
            }
        }
        Ok(program)
    }

    fn block_start(&mut self) -> PResult<()> {
        self.expect(Tok::Colon, "`:`")?;
        self.expect(Tok::Newline, "end of line after `:`")?;
        if *self.peek() != Tok::Indent {
            return Err(self.err_at(self.span(), "expected an indented block"));
        }
        self.advance();
        Ok(())
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let span = self.expect_word("class")?;
        let (name, _) = self.ident("class name")?;
        if *self.peek() == Tok::LParen {
            self.advance();
            self.expect(Tok::RParen, "`)` (base classes are not supported)")?;
        }
        self.block_start()?;
        let mut fields = Vec::new();
        while *self.peek() != Tok::Dedent {
            match self.peek() {
                Tok::Ident(w) if w == "pass" => {
                    self.advance();
                    self.expect(Tok::Newline, "end of line")?;
                }
                Tok::Str(_) => {
                    self.advance();
                    self.expect(Tok::Newline, "end of line")?;
                }
                _ => fields.push(self.field_decl()?),
            }
        }
        self.advance();
        if fields.is_empty() {
            return Err(self.err_at(span, format!("class `{name}` declares no fields")));
        }
        Ok(ClassDecl { name, fields, span })
    }

    fn field_decl(&mut self) -> PResult<FieldDecl> {
        let (name, span) = self.ident("field name")?;
        self.expect(Tok::Colon, "`:` after field name")?;
        let mut field = FieldDecl {
            name,
            base: BaseType::Int,
            unique: false,
            domain: None,
            list_len: None,
            span,
        };
        self.field_type(&mut field, true)?;
        self.expect(Tok::Newline, "end of line after field type")?;
        Ok(field)
    }

    fn field_type(&mut self, field: &mut FieldDecl, allow_unique: bool) -> PResult<()> {
        let span = self.span();
        let (word, _) = match self.peek().clone() {
            Tok::Ident(w) => (w, self.advance()),
            _ => return Err(self.unexpected("a type")),
        };
        match word.as_str() {
            "Unique" => {
                if !allow_unique {
                    return Err(self.err_at(span, "`Unique` may only wrap a scalar type once"));
                }
                field.unique = true;
                self.expect(Tok::LBracket, "`[`")?;
                self.field_type(field, false)?;
                self.expect(Tok::RBracket, "`]`")?;
                if field.list_len.is_some() {
                    return Err(self.err_at(span, "`Unique` cannot wrap a list"));
                }
            }
            "Domain" => {
                self.expect(Tok::LBracket, "`[`")?;
                field.base = match self.peek() {
                    Tok::Ident(w) if w == "int" => BaseType::Int,
                    Tok::Ident(w) if w == "str" => BaseType::Str,
                    _ => return Err(self.unexpected("`int` or `str`")),
                };
                self.advance();
                self.expect(Tok::Comma, "`,`")?;
                field.domain = Some(self.domain_spec()?);
                self.expect(Tok::RBracket, "`]`")?;
            }
            "list" => {
                self.expect(Tok::LBracket, "`[`")?;
                let (elem, _) = self.ident("element class name")?;
                self.expect(Tok::Comma, "`,`")?;
                let len_span = self.span();
                let len = self.int_literal("list length")?;
                if len <= 0 {
                    return Err(self.err_at(len_span, "list length must be positive"));
                }
                self.expect(Tok::RBracket, "`]`")?;
                field.base = BaseType::Class(elem);
                field.list_len = Some(len as usize);
            }
            "int" => field.base = BaseType::Int,
            "str" => field.base = BaseType::Str,
            other if !is_reserved(other) => field.base = BaseType::Class(other.to_string()),
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("a type"));
            }
        }
        Ok(())
    }

    fn domain_spec(&mut self) -> PResult<DomainSpec> {
        if self.is_word("range") {
            self.advance();
            self.expect(Tok::LParen, "`(`")?;
            let first = self.int_literal("range bound")?;
            let (lo, hi) = if *self.peek() == Tok::Comma {
                self.advance();
                (first, self.int_literal("range bound")?)
            } else {
                (0, first)
            };
            self.expect(Tok::RParen, "`)`")?;
            return Ok(DomainSpec::IntRange { lo, hi });
        }
        let bracketed = *self.peek() == Tok::LBracket;
        if bracketed {
            self.advance();
        }
        let mut values = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Str(s) => {
                    self.advance();
                    values.push(s);
                }
                _ => return Err(self.unexpected("a string literal or `range(...)`")),
            }
            if *self.peek() == Tok::Comma
                && matches!(self.peek_at(1), Tok::Str(_))
            {
                self.advance();
                continue;
            }
            if *self.peek() == Tok::Comma && bracketed {
                // trailing comma inside brackets
                self.advance();
            }
            break;
        }
        if bracketed {
            self.expect(Tok::RBracket, "`]`")?;
        }
        Ok(DomainSpec::Strings(values))
    }

    fn func_decl(&mut self) -> PResult<FuncDecl> {
        let span = self.expect_word("def")?;
        let (name, _) = self.ident("function name")?;
        self.expect(Tok::LParen, "`(`")?;
        if *self.peek() == Tok::RParen {
            return Err(self.err_at(self.span(), "the validator must take exactly one parameter"));
        }
        let (param_name, _) = self.ident("parameter name")?;
        self.expect(Tok::Colon, "`:` and a parameter type annotation")?;
        let (param_type, _) = self.ident("parameter type")?;
        if *self.peek() == Tok::Comma {
            return Err(self.err_at(self.span(), "the validator must take exactly one parameter"));
        }
        self.expect(Tok::RParen, "`)`")?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            self.expect_word("None")?;
        }
        self.block_start()?;
        let mut body = Vec::new();
        while *self.peek() != Tok::Dedent {
            if let Some(stmt) = self.stmt()? {
                body.push(stmt);
            }
        }
        self.advance();
        Ok(FuncDecl {
            name,
            param_name,
            param_type,
            body,
            span,
        })
    }

    fn stmt(&mut self) -> PResult<Option<Stmt>> {
        let span = self.span();
        let stmt = match self.peek().clone() {
            Tok::Ident(w) if w == "pass" => {
                self.advance();
                None
            }
            Tok::Str(_) => {
                self.advance();
                None
            }
            Tok::Ident(w) if w == "assert" => {
                self.advance();
                let cond = self.expr()?;
                if *self.peek() == Tok::Comma {
                    self.advance();
                    match self.peek() {
                        Tok::Str(_) => {
                            self.advance();
                        }
                        _ => return Err(self.unexpected("an assertion message string")),
                    }
                }
                Some(Stmt::Assert { cond, span })
            }
            Tok::Ident(w) if w == "assume" && *self.peek_at(1) == Tok::LParen => {
                self.advance();
                self.advance();
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Some(Stmt::Assume { cond, span })
            }
            Tok::Ident(w) if !is_reserved(&w) && *self.peek_at(1) == Tok::Assign => {
                self.advance();
                self.advance();
                let value = self.expr()?;
                Some(Stmt::Assign {
                    target: w,
                    value,
                    span,
                })
            }
            Tok::Ident(w) if w == "def" || w == "class" => {
                return Err(self.err_at(span, "nested definitions are not supported"))
            }
            Tok::Indent => return Err(self.err_at(span, "unexpected indent")),
            _ => {
                if let Tok::Ident(word) = self.peek() {
                    if UNSUPPORTED_KEYWORDS.contains(&word.as_str()) {
                        return Err(self.err_at(span, format!("unsupported syntax `{word}`")));
                    }
                }
                return Err(self.err_at(
                    span,
                    "unsupported statement; expected `name = ...`, `assume(...)` or `assert ...`",
                ));
            }
        };
        self.expect(Tok::Newline, "end of line")?;
        Ok(stmt)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.bool_chain(BoolOp::Or)
    }

    fn bool_chain(&mut self, op: BoolOp) -> PResult<Expr> {
        let span = self.span();
        let first = match op {
            BoolOp::Or => self.bool_chain(BoolOp::And)?,
            BoolOp::And => self.not_expr()?,
        };
        if !self.is_word(op.keyword()) {
            return Ok(first);
        }
        let mut operands = vec![first];
        while self.is_word(op.keyword()) {
            self.advance();
            operands.push(match op {
                BoolOp::Or => self.bool_chain(BoolOp::And)?,
                BoolOp::And => self.not_expr()?,
            });
        }
        Ok(Expr::new(ExprKind::BoolOp(op, operands), span))
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.is_word("not") {
            let span = self.advance().span;
            let inner = self.not_expr()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), span));
        }
        self.comparison()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let span = self.span();
        let lhs = self.sum()?;
        let Some(op) = self.cmp_op() else {
            if self.is_word("in") || self.is_word("is") {
                return Err(self.unexpected("a comparison operator"));
            }
            return Ok(lhs);
        };
        self.advance();
        let rhs = self.sum()?;
        if self.cmp_op().is_some() {
            return Err(self.err_at(self.span(), "chained comparisons are not supported"));
        }
        Ok(Expr::new(
            ExprKind::Compare(op, Box::new(lhs), Box::new(rhs)),
            span,
        ))
    }

    fn sum(&mut self) -> PResult<Expr> {
        let span = self.span();
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.product()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn product(&mut self) -> PResult<Expr> {
        let span = self.span();
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::new(
                ExprKind::Binary(ArithOp::Mul, Box::new(lhs), Box::new(rhs)),
                span,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() != Tok::Minus {
            return self.postfix();
        }
        let span = self.advance().span;
        if let Tok::Int(v) = *self.peek() {
            // `-3` is a literal, but `-3.x` is not a thing so no postfix check
            self.advance();
            return Ok(Expr::new(ExprKind::Lit(Literal::Int(-v)), span));
        }
        let operand = self.unary()?;
        Ok(Expr::new(
            ExprKind::Binary(
                ArithOp::Sub,
                Box::new(Expr::new(ExprKind::Lit(Literal::Int(0)), span)),
                Box::new(operand),
            ),
            span,
        ))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut expr = self.atom()?;
        loop {
            match self.peek() {
                Tok::Dot => {
                    let span = self.advance().span;
                    let (field, _) = self.ident("field name")?;
                    if *self.peek() == Tok::LParen {
                        return Err(self.err_at(span, format!("unsupported method call `.{field}(...)`")));
                    }
                    expr = Expr::new(ExprKind::Field(Box::new(expr), field), span);
                }
                Tok::LBracket => {
                    let span = self.advance().span;
                    let index = match *self.peek() {
                        Tok::Int(v) => {
                            self.advance();
                            v
                        }
                        _ => {
                            return Err(self.err_at(
                                self.span(),
                                "list index must be a non-negative integer literal",
                            ))
                        }
                    };
                    self.expect(Tok::RBracket, "`]`")?;
                    expr = Expr::new(ExprKind::Index(Box::new(expr), index), span);
                }
                Tok::LParen => {
                    return Err(self.err_at(self.span(), "only `nondet`, `abs` and `assume` may be called"))
                }
                _ => return Ok(expr),
            }
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Lit(Literal::Int(v)), span))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::new(ExprKind::Lit(Literal::Str(s)), span))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.expr()?;
                if *self.peek() == Tok::Comma {
                    return Err(self.err_at(self.span(), "tuples are not supported"));
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::LParen => {
                if name != "nondet" && name != "abs" {
                    return Err(self.err_at(span, format!("unsupported call to `{name}`")));
                }
                self.advance();
                self.advance();
                let arg = self.expr()?;
                if *self.peek() == Tok::Comma {
                    return Err(self.err_at(self.span(), format!("`{name}` takes exactly one argument")));
                }
                self.expect(Tok::RParen, "`)`")?;
                let kind = if name == "nondet" {
                    ExprKind::Nondet(Box::new(arg))
                } else {
                    ExprKind::Abs(Box::new(arg))
                };
                Ok(Expr::new(kind, span))
            }
            Tok::Ident(name) if !is_reserved(&name) => {
                self.advance();
                Ok(Expr::new(ExprKind::Local(name), span))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

fn is_reserved(word: &str) -> bool {
    matches!(
        word,
        "class" | "def" | "assert" | "and" | "or" | "not" | "pass"
    ) || UNSUPPORTED_KEYWORDS.contains(&word)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(src: &str) -> Result<DslProgram, SyntaxError> {
        parse(&SourceText::new("test", src))
    }

    #[test]
    fn empty_source_parses_to_empty_program() {
        let program = parse_str("").unwrap();
        assert!(program.classes.is_empty());
        assert!(program.functions.is_empty());
    }

    #[test]
    fn data_structure_shape() {
        let src = r#"
class House:
  house_number: Unique[
    Domain[int, range(1, 7)]
  ]
  name: Unique[
    Domain[str, "Alice", "Eric", "Peter", "Bob", "Carol", "Dan"]
  ]

class PuzzleSolution:
  houses: list[House, 6]
"#;
        let program = parse_str(src).unwrap();
        assert_eq!(program.classes.len(), 2);
        let house = &program.classes[0].fields[0];
        assert_eq!(house.name, "house_number");
        assert_eq!(house.base, BaseType::Int);
        assert!(house.unique);
        assert_eq!(house.domain, Some(DomainSpec::IntRange { lo: 1, hi: 7 }));
        let houses = &program.classes[1].fields[0];
        assert_eq!(houses.base, BaseType::Class("House".into()));
        assert_eq!(houses.list_len, Some(6));
    }

    #[test]
    fn unbalanced_paren_is_reported_on_its_line() {
        let src = "def validate(s: S) -> None:\n    bob = nondet(s.houses)\n    assume(bob.name == \"Bob\"\n";
        let err = parse_str(src).unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn loops_and_imports_are_rejected() {
        let err = parse_str("import os\n").unwrap_err();
        assert!(err.message.contains("import"), "{}", err.message);
        let err = parse_str("def v(s: S):\n    for h in s.houses:\n        pass\n").unwrap_err();
        assert!(err.message.contains("for"), "{}", err.message);
        let err = parse_str("def v(s: S):\n    x = len(s.houses)\n").unwrap_err();
        assert!(err.message.contains("len"), "{}", err.message);
    }

    #[test]
    fn validator_statements() {
        let src = r#"
def validate(solution: PuzzleSolution) -> None:
  # Clue 3
  d = nondet(solution.houses)
  assume(d.smoothie == "dragonfruit")
  r = nondet(solution.houses)
  assume(r.house_style == "ranch")
  assert d.house_number < r.house_number, "left of"
"#;
        let program = parse_str(src).unwrap();
        let body = &program.functions[0].body;
        assert_eq!(body.len(), 5);
        assert!(matches!(body[4], Stmt::Assert { .. }));
    }

    #[test]
    fn chained_comparison_rejected() {
        let err = parse_str("def v(s: S):\n    assert 1 < 2 < 3\n").unwrap_err();
        assert!(err.message.contains("chained"));
    }

    #[test]
    fn missing_body_is_syntax_error() {
        assert!(parse_str("def v(s: S):\n").is_err());
        assert!(parse_str("class A:\n    pass\n").is_err());
    }
}
