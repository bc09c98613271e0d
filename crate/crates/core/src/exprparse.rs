//! Scalar expressions of one variable, used for delay functions `τ(t)` and
//! per-coordinate initial functions `φᵢ(s)` in configuration files.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | base ("^" number)?
//! base   := number | ident | "(" expr ")" | func "(" expr ")"
//! func   := "sin" | "cos" | "exp" | "ln" | "abs"
//! ```
//!
//! `pi` and `e` are reserved constants. The free variable name is chosen by
//! the caller. Exponents are numeric literals only, so `-t^2` is `-(t^2)`.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;

const RESERVED: &[&str] = &["pi", "e", "sin", "cos", "exp", "ln", "abs"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("invalid variable name {0:?}")]
    InvalidVariable(String),
    #[error("unexpected character {ch:?} at position {pos}")]
    UnexpectedChar { pos: usize, ch: char },
    #[error("malformed number at position {pos}")]
    BadNumber { pos: usize },
    #[error("expected {expected} at position {pos}, found {found}")]
    Unexpected {
        pos: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unknown identifier {name:?} at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

impl ParseError {
    /// Byte offset into the source, when the error has one.
    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::Empty | ParseError::InvalidVariable(_) => None,
            ParseError::UnexpectedChar { pos, .. }
            | ParseError::BadNumber { pos }
            | ParseError::Unexpected { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. } => Some(*pos),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error in `{expr}`: {reason}")]
pub struct EvalError {
    /// The offending sub-expression, pretty-printed.
    pub expr: String,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Num(f64),
    Pi,
    E,
    Var,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    /// Exponent is a non-negative literal.
    Pow(Box<Node>, f64),
    Call(Func, Box<Node>),
}

/// Parsed, immutable expression in a single named variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    ast: Node,
    var: String,
}

/// Parses `src` as an expression in the variable `var_name`.
pub fn parse_expr(src: &str, var_name: &str) -> Result<ScalarExpr, ParseError> {
    if !is_identifier(var_name) || RESERVED.contains(&var_name) {
        return Err(ParseError::InvalidVariable(var_name.to_string()));
    }
    let tokens = lex(src)?;
    if tokens.len() == 1 {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        tokens,
        idx: 0,
        var: var_name,
    };
    let ast = p.expr()?;
    let tok = p.peek();
    if tok.kind != Tok::End {
        return Err(ParseError::Unexpected {
            pos: tok.pos,
            expected: "operator or end of input",
            found: tok.kind.describe(),
        });
    }
    Ok(ScalarExpr {
        ast,
        var: var_name.to_string(),
    })
}

impl ScalarExpr {
    pub fn var_name(&self) -> &str {
        &self.var
    }

    /// Evaluates at `x`. Domain violations (ln of non-positive, division by
    /// zero, fractional power of a negative base, overflow) are errors.
    pub fn eval<T: Real>(&self, x: T) -> Result<T, EvalError> {
        eval_node(&self.ast, x, &self.var)
    }

    #[cfg(test)]
    pub(crate) fn from_node(ast: Node, var: &str) -> Self {
        Self {
            ast,
            var: var.to_string(),
        }
    }

    /// True when the expression does not mention its variable.
    pub fn is_constant(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Var => false,
                Node::Num(_) | Node::Pi | Node::E => true,
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => walk(a),
                Node::Bin(_, a, b) => walk(a) && walk(b),
            }
        }
        walk(&self.ast)
    }
}

/// Free-function form of [`ScalarExpr::eval`].
pub fn eval_expr(e: &ScalarExpr, x: f64) -> Result<f64, EvalError> {
    e.eval(x)
}

fn eval_node<T: Real>(n: &Node, x: T, var: &str) -> Result<T, EvalError> {
    let fail = |reason| EvalError {
        expr: Printer { node: n, var }.to_string(),
        reason,
    };
    let v = match n {
        Node::Num(c) => T::lit(*c),
        Node::Pi => T::pi(),
        Node::E => T::one().exp(),
        Node::Var => x,
        Node::Neg(a) => -eval_node(a, x, var)?,
        Node::Bin(op, a, b) => {
            let l = eval_node(a, x, var)?;
            let r = eval_node(b, x, var)?;
            match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r == T::zero() {
                        return Err(fail("division by zero"));
                    }
                    l / r
                }
            }
        }
        Node::Pow(a, p) => {
            let base = eval_node(a, x, var)?;
            if base < T::zero() && p.fract() != 0.0 {
                return Err(fail("fractional power of a negative number"));
            }
            if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                base.powi(*p as i32)
            } else {
                base.powf(T::lit(*p))
            }
        }
        Node::Call(f, a) => {
            let arg = eval_node(a, x, var)?;
            match f {
                Func::Sin => arg.sin(),
                Func::Cos => arg.cos(),
                Func::Exp => arg.exp(),
                Func::Abs => arg.abs(),
                Func::Ln => {
                    if arg <= T::zero() {
                        return Err(fail("logarithm of a non-positive number"));
                    }
                    arg.ln()
                }
            }
        }
    };
    if !v.is_finite() {
        return Err(fail("non-finite result"));
    }
    Ok(v)
}

/// Fully parenthesized rendering that re-parses to an equivalent AST.
impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer {
            node: &self.ast,
            var: &self.var,
        }
        .fmt(f)
    }
}

struct Printer<'a> {
    node: &'a Node,
    var: &'a str,
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |node| Printer {
            node,
            var: self.var,
        };
        match self.node {
            Node::Num(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            Node::Num(c) => write!(f, "{c:?}"),
            Node::Pi => f.write_str("pi"),
            Node::E => f.write_str("e"),
            Node::Var => f.write_str(self.var),
            Node::Neg(a) => write!(f, "(-{})", sub(a)),
            Node::Bin(op, a, b) => write!(f, "({} {} {})", sub(a), op.symbol(), sub(b)),
            Node::Pow(a, p) => write!(f, "({}^{p:?})", sub(a)),
            Node::Call(func, a) => write!(f, "{}({})", func.name(), sub(a)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    pos: usize,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            out.push(Token { kind, pos: start });
            i += 1;
            continue;
        }
        let digit_at = |k: usize| bytes.get(k).is_some_and(|b| b.is_ascii_digit());
        if c.is_ascii_digit() || (c == b'.' && digit_at(i + 1)) {
            while digit_at(i) {
                i += 1;
            }
            if bytes.get(i) == Some(&b'.') {
                i += 1;
                while digit_at(i) {
                    i += 1;
                }
            }
            if matches!(bytes.get(i), Some(b'e' | b'E')) {
                let signed = matches!(bytes.get(i + 1), Some(b'+' | b'-'));
                let exp_digit = if signed { i + 2 } else { i + 1 };
                if digit_at(exp_digit) {
                    i = exp_digit;
                    while digit_at(i) {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| ParseError::BadNumber { pos: start })?;
            if !value.is_finite() {
                return Err(ParseError::BadNumber { pos: start });
            }
            out.push(Token {
                kind: Tok::Num(value),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while bytes
                .get(i)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            {
                i += 1;
            }
            out.push(Token {
                kind: Tok::Ident(src[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ParseError::UnexpectedChar { pos: start, ch });
    }
    out.push(Token {
        kind: Tok::End,
        pos: src.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    idx: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.idx].clone();
        if t.kind != Tok::End {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, kind: Tok, expected: &'static str) -> Result<(), ParseError> {
        let t = self.bump();
        if t.kind == kind {
            Ok(())
        } else {
            Err(ParseError::Unexpected {
                pos: t.pos,
                expected,
                found: t.kind.describe(),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().kind {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if self.peek().kind == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek().kind != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let t = self.bump();
        match t.kind {
            Tok::Num(p) => Ok(Node::Pow(Box::new(base), p)),
            other => Err(ParseError::Unexpected {
                pos: t.pos,
                expected: "numeric exponent",
                found: other.describe(),
            }),
        }
    }

    fn base(&mut self) -> Result<Node, ParseError> {
        let t = self.bump();
        match t.kind {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "'(' after function name")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Pi),
                    "e" => Ok(Node::E),
                    n if n == self.var => Ok(Node::Var),
                    _ => Err(ParseError::UnknownIdentifier { pos: t.pos, name }),
                }
            }
            other => Err(ParseError::Unexpected {
                pos: t.pos,
                expected: "number, identifier or '('",
                found: other.describe(),
            }),
        }
    }
}
