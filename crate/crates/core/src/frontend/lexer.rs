//! Indentation-aware tokenizer for Logic.py source.
//!
//! Produces `Newline`/`Indent`/`Dedent` tokens the way Python does. Newlines
//! inside brackets are joined, and comments are dropped.

use super::ast::Span;
use super::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Arrow,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Newline,
    Indent,
    Dedent,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("`{name}`"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Newline => "end of line".to_string(),
            Tok::Indent => "indent".to_string(),
            Tok::Dedent => "dedent".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Arrow => "->",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            _ => "?",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Lexer<'a> {
    origin: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    depth: usize,
    indents: Vec<usize>,
    out: Vec<Token>,
    /// Position of the bracket that opened each nesting level.
    open: Vec<(char, Span)>,
}

pub fn tokenize(origin: &str, text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lexer = Lexer {
        origin,
        chars: text.chars().filter(|&c| c != '\r').collect(),
        pos: 0,
        line: 1,
        col: 1,
        depth: 0,
        indents: vec![0],
        out: Vec::new(),
        open: Vec::new(),
    };
    lexer.run()?;
    Ok(lexer.out)
}

impl Lexer<'_> {
    fn err(&self, span: Span, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            origin: self.origin.to_string(),
            line: span.line,
            col: span.col,
            message: message.into(),
        }
    }

    fn here(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, tok: Tok, span: Span) {
        self.out.push(Token { tok, span });
    }

    fn last_is_line_end(&self) -> bool {
        matches!(
            self.out.last().map(|t| &t.tok),
            None | Some(Tok::Newline) | Some(Tok::Indent) | Some(Tok::Dedent)
        )
    }

    fn run(&mut self) -> Result<(), SyntaxError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.handle_indentation()? {
                    break;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek() else { break };
            let span = self.here();
            match c {
                ' ' | '\t' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        if !self.last_is_line_end() {
                            self.push(Tok::Newline, span);
                        }
                        at_line_start = true;
                    }
                }
                '"' | '\'' => self.string(c)?,
                c if c.is_ascii_digit() => self.number()?,
                c if c.is_alphabetic() || c == '_' => {
                    let mut ident = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_alphanumeric() || c == '_' {
                            ident.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.push(Tok::Ident(ident), span);
                }
                _ => self.operator(c, span)?,
            }
        }
        if let Some(&(bracket, span)) = self.open.last() {
            return Err(self.err(span, format!("`{bracket}` was never closed")));
        }
        let end = self.here();
        if !self.last_is_line_end() {
            self.push(Tok::Newline, end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, end);
        }
        self.push(Tok::Eof, end);
        Ok(())
    }

    /// Measures the indentation of the next non-blank line and emits
    /// indent/dedent tokens. Returns false at end of input.
    fn handle_indentation(&mut self) -> Result<bool, SyntaxError> {
        loop {
            let mut width = 0;
            while let Some(c) = self.peek() {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / 8 + 1) * 8,
                    _ => break,
                }
                self.bump();
            }
            match self.peek() {
                None => return Ok(false),
                Some('\n') => {
                    self.bump();
                    continue;
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                    continue;
                }
                Some(_) => {}
            }
            let span = self.here();
            let current = *self.indents.last().unwrap_or(&0);
            if width > current {
                self.indents.push(width);
                self.push(Tok::Indent, span);
            } else if width < current {
                while width < *self.indents.last().unwrap_or(&0) {
                    self.indents.pop();
                    self.push(Tok::Dedent, span);
                }
                if width != *self.indents.last().unwrap_or(&0) {
                    return Err(self.err(
                        span,
                        "unindent does not match any outer indentation level",
                    ));
                }
            }
            return Ok(true);
        }
    }

    fn string(&mut self, quote: char) -> Result<(), SyntaxError> {
        let span = self.here();
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.err(span, "unterminated string literal")),
                Some(c) if c == quote => break,
                Some('\\') => {
                    let escaped = match self.bump() {
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('\\') => '\\',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        _ => return Err(self.err(span, "invalid escape in string literal")),
                    };
                    value.push(escaped);
                }
                Some(c) => value.push(c),
            }
        }
        self.push(Tok::Str(value), span);
        Ok(())
    }

    fn number(&mut self) -> Result<(), SyntaxError> {
        let span = self.here();
        let mut digits = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '_' {
                if c != '_' {
                    digits.push(c);
                }
                self.bump();
            } else {
                break;
            }
        }
        if matches!(self.peek(), Some(c) if c.is_alphabetic() || c == '.') {
            return Err(self.err(span, "malformed number literal"));
        }
        let value = digits
            .parse::<i64>()
            .map_err(|_| self.err(span, "integer literal out of range"))?;
        self.push(Tok::Int(value), span);
        Ok(())
    }

    fn operator(&mut self, c: char, span: Span) -> Result<(), SyntaxError> {
        let next = self.peek_at(1);
        let (tok, width) = match (c, next) {
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('!', Some('=')) => (Tok::NotEq, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('*', Some('*')) => return Err(self.err(span, "unsupported operator `**`")),
            ('/', _) | ('%', _) | ('&', _) | ('|', _) | ('^', _) | ('~', _) | ('@', _) => {
                return Err(self.err(span, format!("unsupported operator `{c}`")))
            }
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            (',', _) => (Tok::Comma, 1),
            (':', _) => (Tok::Colon, 1),
            ('.', _) => (Tok::Dot, 1),
            ('=', _) => (Tok::Assign, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            _ => return Err(self.err(span, format!("unexpected character `{c}`"))),
        };
        match tok {
            Tok::LParen | Tok::LBracket => {
                self.depth += 1;
                self.open.push((c, span));
            }
            Tok::RParen | Tok::RBracket => {
                let expected = if tok == Tok::RParen { '(' } else { '[' };
                match self.open.pop() {
                    Some((open, _)) if open == expected => self.depth -= 1,
                    Some((open, open_span)) => {
                        return Err(self.err(
                            span,
                            format!(
                                "`{c}` does not match `{open}` opened at {}:{}",
                                open_span.line, open_span.col
                            ),
                        ))
                    }
                    None => return Err(self.err(span, format!("unmatched `{c}`"))),
                }
            }
            _ => {}
        }
        for _ in 0..width {
            self.bump();
        }
        self.push(tok, span);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize("t", src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_tokens() {
        let toks = kinds("class A:\n  x: int\n\ny = 1\n");
        assert_eq!(
            toks,
            vec![
                Tok::Ident("class".into()),
                Tok::Ident("A".into()),
                Tok::Colon,
                Tok::Newline,
                Tok::Indent,
                Tok::Ident("x".into()),
                Tok::Colon,
                Tok::Ident("int".into()),
                Tok::Newline,
                Tok::Dedent,
                Tok::Ident("y".into()),
                Tok::Assign,
                Tok::Int(1),
                Tok::Newline,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn brackets_join_lines_and_comments_vanish() {
        let toks = kinds("x: Unique[\n  Domain[int, range(1, 7)]  # six\n]\n");
        assert!(!toks[..toks.len() - 2].contains(&Tok::Newline));
        assert!(!toks.contains(&Tok::Indent));
    }

    #[test]
    fn unterminated_string_reports_position() {
        let err = tokenize("t", "a = \"abc\n").unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));
    }

    #[test]
    fn unclosed_paren_points_at_opener() {
        let err = tokenize("t", "def f(s: S):\n    assume(bob.name == \"Bob\"\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 11));
    }

    #[test]
    fn bad_dedent() {
        let err = tokenize("t", "class A:\n    x: int\n  y: int\n").unwrap_err();
        assert_eq!(err.line, 3);
    }
}
