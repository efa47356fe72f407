//! Arithmetic expressions over the variables `x`, `u`, `up` and `s`.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | ident | '(' expr ')' | '-' base | func '(' expr ')'
//! func   := exp | sin | cos | sinh | cosh | sqrt | abs | ln
//! ident  := x | u | up | s
//! ```
//!
//! `^` is right-associative and unary minus binds tighter than `^`, so
//! `-x^2` parses as `(-x)^2`.

use std::collections::BTreeSet;
use std::fmt;

/// A variable an expression may reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    U,
    Up,
    S,
}

impl Var {
    fn from_ident(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "u" => Some(Var::U),
            "up" => Some(Var::Up),
            "s" => Some(Var::S),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
            Var::Up => "up",
            Var::S => "s",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
    Abs,
    Ln,
}

impl Func {
    fn from_ident(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "ln" => Func::Ln,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Ln => "ln",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Ln => v.ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable bindings for evaluation. Unbound variables default to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vars {
    pub x: f64,
    pub u: f64,
    pub up: f64,
    pub s: f64,
}

impl Vars {
    pub fn xuup(x: f64, u: f64, up: f64) -> Self {
        Vars { x, u, up, s: 0.0 }
    }

    pub fn x(x: f64) -> Self {
        Vars { x, ..Default::default() }
    }

    pub fn s(s: f64) -> Self {
        Vars { s, ..Default::default() }
    }

    fn get(&self, var: Var) -> f64 {
        match var {
            Var::X => self.x,
            Var::U => self.u,
            Var::Up => self.up,
            Var::S => self.s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected `{found}`, expected {expected}")]
    UnexpectedToken { found: String, expected: &'static str },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEnd { expected: &'static str },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("function `{func}` takes exactly one argument, found {found}")]
    Arity { func: &'static str, found: usize },
    #[error("malformed number `{0}`")]
    BadNumber(String),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Op(c) => write!(f, "{c}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::Comma => f.write_str(","),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '+' | '-' | '*' | '/' | '^' => {
                out.push((Tok::Op(c), start));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            '0'..='9' | '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::BadNumber(lit.to_string()),
                    position: start,
                })?;
                out.push((Tok::Num(value), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or(c);
                return Err(ParseError { kind: ParseErrorKind::UnexpectedChar(ch), position: start });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn fail(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError {
                kind: ParseErrorKind::UnexpectedToken { found: t.to_string(), expected },
                position: self.offset(),
            },
            None => ParseError { kind: ParseErrorKind::UnexpectedEnd { expected }, position: self.end },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let position = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Some(Tok::Op('-')) => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.bump();
                if let Some(var) = Var::from_ident(&name) {
                    return Ok(Expr::Var(var));
                }
                let Some(func) = Func::from_ident(&name) else {
                    return Err(ParseError { kind: ParseErrorKind::UnknownIdentifier(name), position });
                };
                self.call(func, position)
            }
            _ => Err(self.fail("a number, variable, function or `(`")),
        }
    }

    fn call(&mut self, func: Func, position: usize) -> Result<Expr, ParseError> {
        if self.peek() != Some(&Tok::LParen) {
            return Err(ParseError { kind: ParseErrorKind::Arity { func: func.name(), found: 0 }, position });
        }
        self.bump();
        if self.peek() == Some(&Tok::RParen) {
            return Err(ParseError { kind: ParseErrorKind::Arity { func: func.name(), found: 0 }, position });
        }
        let arg = self.expr()?;
        let mut extra = 0;
        while self.peek() == Some(&Tok::Comma) {
            self.bump();
            self.expr()?;
            extra += 1;
        }
        if extra > 0 {
            return Err(ParseError {
                kind: ParseErrorKind::Arity { func: func.name(), found: 1 + extra },
                position,
            });
        }
        self.expect_rparen()?;
        Ok(Expr::Call(func, Box::new(arg)))
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(&Tok::RParen) {
            self.bump();
            Ok(())
        } else {
            Err(self.fail("`)`"))
        }
    }
}

/// Parses `text` according to the module grammar.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(ParseError { kind: ParseErrorKind::Empty, position: 0 });
    }
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.fail("an operator or end of input"));
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

impl Expr {
    pub fn eval(&self, vars: &Vars) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => vars.get(*v),
            Expr::Neg(e) => -e.eval(vars),
            Expr::Call(f, e) => f.apply(e.eval(vars)),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(vars), b.eval(vars));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
        }
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// First variable outside `allowed`, if any.
    pub fn disallowed_var(&self, allowed: &[Var]) -> Option<Var> {
        self.variables().into_iter().find(|v| !allowed.contains(v))
    }

    /// Symbolic partial derivative with respect to `var`.
    pub fn derivative(&self, var: Var) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var(v) => Num(if *v == var { 1.0 } else { 0.0 }),
            Neg(e) => neg(e.derivative(var)),
            Bin(BinOp::Add, a, b) => add(a.derivative(var), b.derivative(var)),
            Bin(BinOp::Sub, a, b) => sub(a.derivative(var), b.derivative(var)),
            Bin(BinOp::Mul, a, b) => {
                add(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var)))
            }
            Bin(BinOp::Div, a, b) => div(
                sub(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
                mul((**b).clone(), (**b).clone()),
            ),
            Bin(BinOp::Pow, a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                if let Num(n) = **b {
                    // n a^(n-1) a'
                    mul(mul(Num(n), powe((**a).clone(), Num(n - 1.0))), da)
                } else {
                    // a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(mul(db, Call(Func::Ln, a.clone())), div(mul((**b).clone(), da), (**a).clone())),
                    )
                }
            }
            Call(f, e) => {
                let de = e.derivative(var);
                let inner = (**e).clone();
                let outer = match f {
                    Func::Exp => Call(Func::Exp, Box::new(inner)),
                    Func::Sin => Call(Func::Cos, Box::new(inner)),
                    Func::Cos => neg(Call(Func::Sin, Box::new(inner))),
                    Func::Sinh => Call(Func::Cosh, Box::new(inner)),
                    Func::Cosh => Call(Func::Sinh, Box::new(inner)),
                    Func::Sqrt => div(Num(0.5), Call(Func::Sqrt, Box::new(inner))),
                    // sign(e), written as e/|e|
                    Func::Abs => div(inner.clone(), Call(Func::Abs, Box::new(inner))),
                    Func::Ln => div(Num(1.0), inner),
                };
                mul(outer, de)
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() < 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(n) if *n == v)
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Num(n) => Expr::Num(-n),
        Expr::Neg(inner) => *inner,
        e => Expr::Neg(Box::new(e)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (a, b) if is_num(&a, 0.0) => b,
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) if is_num(&a, 0.0) => neg(b),
        (a, b) => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (a, b) if is_num(&a, 0.0) || is_num(&b, 0.0) => Expr::Num(0.0),
        (a, b) if is_num(&a, 1.0) => b,
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if is_num(&a, 0.0) && !is_num(&b, 0.0) => Expr::Num(0.0),
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn powe(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, b) if is_num(&b, 0.0) => Expr::Num(1.0),
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised form that parses back to an equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "(-{})", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => write!(f, "(-({e}))"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}
