//! Recursive-descent parser for the infix expression language.
//!
//! ```text
//! list    := expr (',' expr)*
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' exponent)?
//! exponent:= '-'? INTEGER ('^' exponent)?
//! primary := NUMBER | NAME | NAME '(' list ')' | '(' expr ')'
//! ```
//!
//! Names resolve to parameters, to the constant `pi`, or (when followed by
//! an argument list) to one of `sin cos exp log sqrt`.

use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, Func};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    SyntaxError,
    UnknownIdentifier,
    ArityError,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::SyntaxError => "syntax error",
            ParseErrorKind::UnknownIdentifier => "unknown identifier",
            ParseErrorKind::ArityError => "arity error",
        })
    }
}

/// Parse failure at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Name(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

/// Where a fragment of text starts within its source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub line: usize,
    pub column: usize,
}

impl Default for Origin {
    fn default() -> Self {
        Origin { line: 1, column: 1 }
    }
}

fn tokenize(text: &str, origin: Origin) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut line, mut column) = (origin.line, origin.column);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lexeme: String = chars[start..i].iter().collect();
            let value: f64 = lexeme.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::SyntaxError,
                line: start_line,
                column: start_col,
                message: format!("malformed number `{lexeme}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError {
                    kind: ParseErrorKind::SyntaxError,
                    line: start_line,
                    column: start_col,
                    message: format!("number `{lexeme}` is out of range"),
                });
            }
            let integral = lexeme.bytes().all(|b| b.is_ascii_digit());
            Tok::Num(value, integral)
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Name(chars[start..i].iter().collect())
        } else if "+-*/^(),".contains(c) {
            i += 1;
            Tok::Sym(c)
        } else {
            return Err(ParseError {
                kind: ParseErrorKind::SyntaxError,
                line: start_line,
                column: start_col,
                message: format!("unexpected character `{c}`"),
            });
        };
        column += i - start;
        out.push(Token { tok, line: start_line, column: start_col });
    }
    out.push(Token { tok: Tok::End, line, column });
    Ok(out)
}

/// Deepest expression tree accepted.
pub const MAX_DEPTH: usize = 128;

const MAX_NESTING: usize = 2 * MAX_DEPTH + 2;

/// A parsed subtree and its depth.
type Node = (Expr, usize);

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a [String],
    nesting: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, kind: ParseErrorKind, at: &Token, message: impl Into<String>) -> ParseError {
        ParseError { kind, line: at.line, column: at.column, message: message.into() }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Name(n) => format!("`{n}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            Err(self.error(ParseErrorKind::SyntaxError, &t, format!("expected `{c}`, found {}", Self::describe(&t.tok))))
        }
    }

    /// Track recursion so that pathological input fails instead of
    /// exhausting the stack. Rendering wraps each node in at most two
    /// levels, so any tree within [`MAX_DEPTH`] re-parses within this bound.
    fn descend(&mut self) -> Result<(), ParseError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            let at = self.peek().clone();
            return Err(self.error(ParseErrorKind::SyntaxError, &at, format!("expression nested deeper than {MAX_DEPTH} levels")));
        }
        Ok(())
    }

    /// A node one level above its deepest child.
    fn node(&self, at: &Token, expr: Expr, child_depth: usize) -> Result<Node, ParseError> {
        if child_depth + 1 > MAX_DEPTH {
            return Err(self.error(ParseErrorKind::SyntaxError, at, format!("expression nested deeper than {MAX_DEPTH} levels")));
        }
        Ok((expr, child_depth + 1))
    }

    fn list(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut items = vec![self.expr()?.0];
        while self.peek().tok == Tok::Sym(',') {
            self.next();
            items.push(self.expr()?.0);
        }
        Ok(items)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.descend()?;
        let (mut lhs, mut depth) = self.term()?;
        loop {
            let op = self.peek().clone();
            let build: fn(Box<Expr>, Box<Expr>) -> Expr = match op.tok {
                Tok::Sym('+') => Expr::Add,
                Tok::Sym('-') => Expr::Sub,
                _ => break,
            };
            self.next();
            let (rhs, d) = self.term()?;
            (lhs, depth) = self.node(&op, build(Box::new(lhs), Box::new(rhs)), depth.max(d))?;
        }
        self.nesting -= 1;
        Ok((lhs, depth))
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let (mut lhs, mut depth) = self.unary()?;
        loop {
            let op = self.peek().clone();
            let build: fn(Box<Expr>, Box<Expr>) -> Expr = match op.tok {
                Tok::Sym('*') => Expr::Mul,
                Tok::Sym('/') => Expr::Div,
                _ => break,
            };
            self.next();
            let (rhs, d) = self.unary()?;
            (lhs, depth) = self.node(&op, build(Box::new(lhs), Box::new(rhs)), depth.max(d))?;
        }
        Ok((lhs, depth))
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        let op = self.peek().clone();
        match op.tok {
            Tok::Sym('-') | Tok::Sym('+') => {
                self.next();
                self.descend()?;
                let (inner, depth) = self.unary()?;
                self.nesting -= 1;
                if op.tok == Tok::Sym('+') {
                    return Ok((inner, depth));
                }
                self.node(&op, Expr::Neg(Box::new(inner)), depth)
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let (base, depth) = self.primary()?;
        let op = self.peek().clone();
        if op.tok == Tok::Sym('^') {
            self.next();
            let k = self.exponent()?;
            return self.node(&op, Expr::Pow(Box::new(base), k), depth);
        }
        Ok((base, depth))
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        self.descend()?;
        let negative = if self.peek().tok == Tok::Sym('-') {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        let k = match t.tok {
            Tok::Num(v, true) if v <= i32::MAX as f64 => v as i32,
            _ => return Err(self.error(ParseErrorKind::SyntaxError, &t, "exponent must be an integer constant")),
        };
        let mut k = k;
        // the sign applies after the tower: -1^2 is -(1^2)
        if self.peek().tok == Tok::Sym('^') {
            let at = self.next();
            let inner = self.exponent()?;
            k = u32::try_from(inner)
                .ok()
                .and_then(|e| k.checked_pow(e))
                .ok_or_else(|| self.error(ParseErrorKind::SyntaxError, &at, "exponent out of range"))?;
        }
        self.nesting -= 1;
        Ok(if negative { -k } else { k })
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Num(v, _) => Ok((Expr::Const(v), 1)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Name(ref name) => {
                if self.peek().tok == Tok::Sym('(') {
                    let open = self.next();
                    let func = Func::from_name(name).ok_or_else(|| {
                        self.error(ParseErrorKind::UnknownIdentifier, &t, format!("unknown function `{name}`"))
                    })?;
                    if self.peek().tok == Tok::Sym(')') {
                        return Err(self.error(ParseErrorKind::ArityError, &open, format!("`{name}` takes 1 argument, got 0")));
                    }
                    let first = self.expr()?;
                    let mut count = 1;
                    while self.peek().tok == Tok::Sym(',') {
                        self.next();
                        self.expr()?;
                        count += 1;
                    }
                    self.expect_sym(')')?;
                    if count != 1 {
                        return Err(self.error(ParseErrorKind::ArityError, &t, format!("`{name}` takes 1 argument, got {count}")));
                    }
                    return self.node(&t, Expr::Call(func, Box::new(first.0)), first.1);
                }
                if let Some(i) = self.params.iter().position(|p| p == name) {
                    return Ok((Expr::Var(i), 1));
                }
                if name == "pi" {
                    return Ok((Expr::Const(std::f64::consts::PI), 1));
                }
                if Func::from_name(name).is_some() {
                    return Err(self.error(ParseErrorKind::SyntaxError, &t, format!("function `{name}` needs an argument list")));
                }
                Err(self.error(ParseErrorKind::UnknownIdentifier, &t, format!("unknown identifier `{name}`")))
            }
            ref other => Err(self.error(
                ParseErrorKind::SyntaxError,
                &t,
                format!("expected an operand, found {}", Self::describe(other)),
            )),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::End {
            Ok(())
        } else {
            Err(self.error(ParseErrorKind::SyntaxError, &t, format!("unexpected {}", Self::describe(&t.tok))))
        }
    }
}

/// Parse a single expression in the given parameters.
pub fn parse_expr(text: &str, params: &[String]) -> Result<Expr, ParseError> {
    parse_expr_at(text, params, Origin::default())
}

pub fn parse_expr_at(text: &str, params: &[String], origin: Origin) -> Result<Expr, ParseError> {
    let mut p = Parser { tokens: tokenize(text, origin)?, pos: 0, params, nesting: 0 };
    let (e, _) = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parse a comma separated list of expressions.
pub fn parse_expr_list(text: &str, params: &[String], origin: Origin) -> Result<Vec<Expr>, ParseError> {
    let mut p = Parser { tokens: tokenize(text, origin)?, pos: 0, params, nesting: 0 };
    let items = p.list()?;
    p.finish()?;
    Ok(items)
}

/// Split `text` at top-level commas, returning each piece with its origin.
pub fn split_top_level(text: &str, origin: Origin) -> Vec<(String, Origin)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    let (mut line, mut column) = (origin.line, origin.column);
    let mut start = origin;
    for c in text.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if c == ',' && depth == 0 {
            out.push((std::mem::take(&mut current), start));
            column += 1;
            start = Origin { line, column };
            continue;
        }
        current.push(c);
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    out.push((current, start));
    out
}
