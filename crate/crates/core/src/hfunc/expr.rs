//! Expression language for the prescribed function `H(y)`.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' uint)?
//! base   := number | 'y' | func '(' expr ')' | '(' expr ')' | '-' base
//! func   := sin | cos | tan | sinh | cosh | tanh | exp | sqrt
//! ```

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

/// Abstract syntax tree of an `H` expression in the single variable `y`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("`{name}` at offset {offset} is not continuously differentiable; only smooth primitives (sin, cos, tan, sinh, cosh, tanh, exp, sqrt) are accepted")]
    NonSmooth { offset: usize, name: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::NonSmooth { offset, .. }
            | ParseError::UnknownFunction { offset, .. } => *offset,
        }
    }
}

const NON_SMOOTH: [&str; 9] = [
    "abs", "sign", "sgn", "floor", "ceil", "round", "min", "max", "heaviside",
];

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn found(&self) -> String {
        match self.src[self.pos..].chars().next() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        }
    }

    fn syntax(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected: expected.to_string(),
            found: self.found(),
        }
    }

    fn parse_all(&mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        if self.peek().is_some() {
            return Err(self.syntax("operator or end of input"));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.syntax("unsigned integer exponent"));
            }
            let n: u32 = self.src[start..self.pos].parse().map_err(|_| ParseError::Syntax {
                offset: start,
                expected: "exponent fitting in 32 bits".to_string(),
                found: format!("`{}`", &self.src[start..self.pos]),
            })?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("`)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.syntax("expression")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.syntax("number"));
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.syntax("exponent digits"));
            }
        }
        let text = &self.src[start..self.pos];
        let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: "decimal literal".to_string(),
            found: format!("`{text}`"),
        })?;
        Ok(Expr::Const(v))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if name == "y" {
            return Ok(Expr::Var);
        }
        if NON_SMOOTH.contains(&name) {
            return Err(ParseError::NonSmooth {
                offset: start,
                name: name.to_string(),
            });
        }
        let Some(func) = Func::from_name(name) else {
            return Err(ParseError::UnknownFunction {
                offset: start,
                name: name.to_string(),
            });
        };
        if self.peek() != Some(b'(') {
            return Err(self.syntax("`(` after function name"));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.syntax("`)`"));
        }
        self.pos += 1;
        Ok(Expr::Func(func, Box::new(arg)))
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    Parser::new(src).parse_all()
}

// Simplifying constructors used by differentiation.

fn konst(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, n: u32) -> Expr {
    match n {
        0 => Expr::Const(1.0),
        1 => a,
        _ => match konst(&a) {
            Some(c) => Expr::Const(c.powi(n as i32)),
            None => Expr::Pow(Box::new(a), n),
        },
    }
}

fn func(f: Func, a: Expr) -> Expr {
    Expr::Func(f, Box::new(a))
}

impl Expr {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => y,
            Expr::Neg(a) => -a.eval(y),
            Expr::Func(f, a) => f.apply(a.eval(y)),
            Expr::Add(a, b) => a.eval(y) + b.eval(y),
            Expr::Sub(a, b) => a.eval(y) - b.eval(y),
            Expr::Mul(a, b) => a.eval(y) * b.eval(y),
            Expr::Div(a, b) => a.eval(y) / b.eval(y),
            Expr::Pow(a, n) => powu(a.eval(y), *n),
        }
    }

    /// Exact symbolic derivative with respect to `y`.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var => Expr::Const(1.0),
            Expr::Neg(a) => neg(a.derivative()),
            Expr::Add(a, b) => add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                pow((**b).clone(), 2),
            ),
            Expr::Pow(a, n) => mul(
                mul(Expr::Const(*n as f64), pow((**a).clone(), n - 1)),
                a.derivative(),
            ),
            Expr::Func(f, a) => {
                let inner = (**a).clone();
                let da = a.derivative();
                let outer = match f {
                    Func::Sin => func(Func::Cos, inner),
                    Func::Cos => neg(func(Func::Sin, inner)),
                    Func::Tan => div(Expr::Const(1.0), pow(func(Func::Cos, inner), 2)),
                    Func::Sinh => func(Func::Cosh, inner),
                    Func::Cosh => func(Func::Sinh, inner),
                    Func::Tanh => div(Expr::Const(1.0), pow(func(Func::Cosh, inner), 2)),
                    Func::Exp => func(Func::Exp, inner),
                    Func::Sqrt => div(Expr::Const(0.5), func(Func::Sqrt, inner)),
                };
                mul(outer, da)
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Neg(a) | Expr::Func(_, a) | Expr::Pow(a, _) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }
}

fn powu(v: f64, n: u32) -> f64 {
    if n <= i32::MAX as u32 {
        v.powi(n as i32)
    } else {
        v.powf(n as f64)
    }
}

/// Fully parenthesized serialization; reparses to the same tree for every
/// tree produced by [`parse`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "-({})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var => write!(f, "y"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a})^{n}"),
        }
    }
}
