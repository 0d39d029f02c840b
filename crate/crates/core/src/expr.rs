//! Scalar expressions over chart coordinates.
//!
//! Expressions are immutable trees that evaluate over [`Jet`]s, so every
//! coefficient built from them can be differentiated exactly to any order.
//! They come either from the ASCII grammar below or from operator
//! overloading in Rust code:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' ['-'] integer | '^' '(' ['-'] integer ')')?
//! atom   := number | identifier | function '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `sqrt`, `exp`, `log`, `sin`, `cos`, `atan2`. Identifiers resolve
//! to chart coordinates first, then to named parameters, then to `pi`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

use crate::jet::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Atan2,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "atan2" => Func::Atan2,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan2 => "atan2",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Powi(Expr, i32),
    Call(Func, Vec<Expr>),
}

/// A shared, immutable expression tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(v: f64) -> Self {
        Expr::new(Node::Const(v))
    }

    /// The coordinate with the given index.
    pub fn var(i: usize) -> Self {
        Expr::new(Node::Var(i))
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => Expr::constant(1.0),
            1 => self.clone(),
            _ => Expr::new(Node::Powi(self.clone(), n)),
        }
    }

    pub fn sqrt(&self) -> Self {
        Expr::new(Node::Call(Func::Sqrt, vec![self.clone()]))
    }

    pub fn exp(&self) -> Self {
        Expr::new(Node::Call(Func::Exp, vec![self.clone()]))
    }

    pub fn ln(&self) -> Self {
        Expr::new(Node::Call(Func::Log, vec![self.clone()]))
    }

    pub fn sin(&self) -> Self {
        Expr::new(Node::Call(Func::Sin, vec![self.clone()]))
    }

    pub fn cos(&self) -> Self {
        Expr::new(Node::Call(Func::Cos, vec![self.clone()]))
    }

    pub fn atan2(&self, x: &Expr) -> Self {
        Expr::new(Node::Call(Func::Atan2, vec![self.clone(), x.clone()]))
    }

    /// `Some(v)` when the expression is a literal constant.
    pub fn as_constant(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match &*self.0 {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Powi(a, _) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Node::Call(_, args) => args.iter().filter_map(Expr::max_var).max(),
        }
    }

    /// Replaces every variable `i` by `values[i]`.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(i) => values[*i].clone(),
            Node::Neg(a) => -a.substitute(values),
            Node::Add(a, b) => a.substitute(values) + b.substitute(values),
            Node::Sub(a, b) => a.substitute(values) - b.substitute(values),
            Node::Mul(a, b) => a.substitute(values) * b.substitute(values),
            Node::Div(a, b) => a.substitute(values) / b.substitute(values),
            Node::Powi(a, n) => a.substitute(values).powi(*n),
            Node::Call(f, args) => {
                Expr::new(Node::Call(*f, args.iter().map(|a| a.substitute(values)).collect()))
            }
        }
    }

    /// Renumbers variables by adding `offset`.
    pub fn shifted(&self, offset: usize) -> Expr {
        let n = self.max_var().map_or(0, |m| m + 1);
        let vars: Vec<Expr> = (0..n).map(|i| Expr::var(i + offset)).collect();
        self.substitute(&vars)
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        match &*self.0 {
            Node::Const(v) => Jet::constant(*v),
            Node::Var(i) => x[*i].clone(),
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => {
                // Skip the second operand when the first is the literal zero.
                if a.is_zero() {
                    return Jet::zero();
                }
                a.eval(x) * b.eval(x)
            }
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Powi(a, n) => a.eval(x).powi(*n),
            Node::Call(f, args) => {
                let a = args[0].eval(x);
                match f {
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Atan2 => a.atan2(&args[1].eval(x)),
                }
            }
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        match &*self.0 {
            Node::Const(v) => *v,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval_f64(x),
            Node::Add(a, b) => a.eval_f64(x) + b.eval_f64(x),
            Node::Sub(a, b) => a.eval_f64(x) - b.eval_f64(x),
            Node::Mul(a, b) => a.eval_f64(x) * b.eval_f64(x),
            Node::Div(a, b) => a.eval_f64(x) / b.eval_f64(x),
            Node::Powi(a, n) => a.eval_f64(x).powi(*n),
            Node::Call(f, args) => {
                let a = args[0].eval_f64(x);
                match f {
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Atan2 => a.atan2(args[1].eval_f64(x)),
                }
            }
        }
    }

    /// Renders the expression in the parser grammar using `names` for the
    /// variables; the output parses back to an equivalent tree.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Displayed { expr: self, names }
    }
}

struct Displayed<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for Displayed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.names, f)
    }
}

fn write_expr(e: &Expr, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let w = |e: &Expr, f: &mut fmt::Formatter<'_>| write_expr(e, names, f);
    match &*e.0 {
        Node::Const(v) => {
            if *v < 0.0 {
                write!(f, "(-{:?})", -v)
            } else {
                write!(f, "{v:?}")
            }
        }
        Node::Var(i) => match names.get(*i) {
            Some(n) => f.write_str(n),
            None => write!(f, "_{i}"),
        },
        Node::Neg(a) => {
            f.write_str("(-")?;
            w(a, f)?;
            f.write_str(")")
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let op = match &*e.0 {
                Node::Add(..) => " + ",
                Node::Sub(..) => " - ",
                Node::Mul(..) => "*",
                _ => "/",
            };
            f.write_str("(")?;
            w(a, f)?;
            f.write_str(op)?;
            w(b, f)?;
            f.write_str(")")
        }
        Node::Powi(a, n) => {
            f.write_str("(")?;
            w(a, f)?;
            write!(f, ")^({n})")
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                w(a, f)?;
            }
            f.write_str(")")
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

macro_rules! expr_binop {
    ($tr:ident, $m:ident, $node:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                simplify(Node::$node(self, rhs))
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                simplify(Node::$node(self.clone(), rhs.clone()))
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                simplify(Node::$node(self, Expr::constant(rhs)))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                simplify(Node::$node(Expr::constant(self), rhs))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.as_constant() {
            Some(v) => Expr::constant(-v),
            None => Expr::new(Node::Neg(self)),
        }
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

/// Constant folding and the identities with 0 and 1; nothing else.
fn simplify(node: Node) -> Expr {
    match node {
        Node::Add(a, b) => match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::new(Node::Add(a, b)),
        },
        Node::Sub(a, b) => match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (Some(x), _) if x == 0.0 => -b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::new(Node::Sub(a, b)),
        },
        Node::Mul(a, b) => match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::constant(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::new(Node::Mul(a, b)),
        },
        Node::Div(a, b) => match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Expr::constant(x / y),
            (Some(x), _) if x == 0.0 => Expr::constant(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::new(Node::Div(a, b)),
        },
        other => Expr::new(other),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at column {column}: {kind}")]
pub struct ParseError {
    /// 1-based character column of the offending token.
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("function `{name}` takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("{0}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

impl Lexer {
    fn new(src: &str) -> Result<Self, ParseError> {
        let chars: Vec<char> = src.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
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
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<f64>().map_err(|_| ParseError {
                    column: col,
                    kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
                })?;
                toks.push((Tok::Num(v), col));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            } else if "+-*/^(),".contains(c) {
                toks.push((Tok::Op(c), col));
                i += 1;
            } else {
                return Err(ParseError {
                    column: col,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
                });
            }
        }
        toks.push((Tok::End, chars.len() + 1));
        Ok(Lexer { toks })
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [String],
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { column: self.column(), kind: ParseErrorKind::Syntax(msg.into()) })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::new(Node::Add(lhs, self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::new(Node::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::new(Node::Mul(lhs, self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Expr::new(Node::Div(lhs, self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::new(Node::Neg(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let parens = *self.peek() == Tok::Op('(');
        if parens {
            self.bump();
        }
        let negative = *self.peek() == Tok::Op('-');
        if negative {
            self.bump();
        }
        let col = self.column();
        let n = match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() < i32::MAX as f64 => v as i32,
            _ => {
                return Err(ParseError {
                    column: col,
                    kind: ParseErrorKind::Syntax("exponent must be an integer literal".into()),
                })
            }
        };
        if parens {
            self.expect(')')?;
        }
        Ok(Expr::new(Node::Powi(base, if negative { -n } else { n })))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let col = self.column();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError {
                        column: col,
                        kind: ParseErrorKind::UnknownIdentifier(name.clone()),
                    })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Op(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            column: col,
                            kind: ParseErrorKind::Arity {
                                name,
                                expected: func.arity(),
                                got: args.len(),
                            },
                        });
                    }
                    return Ok(Expr::new(Node::Call(func, args)));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    Ok(Expr::var(i))
                } else if let Some(v) = self.params.get(&name) {
                    Ok(Expr::constant(*v))
                } else if name == "pi" {
                    Ok(Expr::constant(std::f64::consts::PI))
                } else if Func::from_name(&name).is_some() {
                    Err(ParseError {
                        column: col,
                        kind: ParseErrorKind::Syntax(format!("function `{name}` needs arguments")),
                    })
                } else {
                    Err(ParseError { column: col, kind: ParseErrorKind::UnknownIdentifier(name) })
                }
            }
            Tok::End => Err(ParseError {
                column: col,
                kind: ParseErrorKind::Syntax("unexpected end of input".into()),
            }),
            Tok::Op(c) => Err(ParseError {
                column: col,
                kind: ParseErrorKind::Syntax(format!("unexpected `{c}`")),
            }),
        }
    }
}

/// Parses `src` with `coords` as variable names and `params` as named constants.
pub fn parse(
    src: &str,
    coords: &[String],
    params: &BTreeMap<String, f64>,
) -> Result<Expr, ParseError> {
    let lexer = Lexer::new(src)?;
    let mut p = Parser { toks: lexer.toks, pos: 0, coords, params };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn eval(src: &str, coords: &[&str], at: &[f64]) -> f64 {
        parse(src, &names(coords), &BTreeMap::new()).unwrap().eval_f64(at)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(eval("x*y + 1", &["x", "y"], &[2.0, 3.0]), 7.0);
        assert_eq!(eval("-x^2", &["x"], &[3.0]), -9.0);
        assert_eq!(eval("2^-1", &[], &[]), 0.5);
        assert_eq!(eval("x^(-2)", &["x"], &[2.0]), 0.25);
        assert_eq!(eval("1 - 2 - 3", &[], &[]), -4.0);
        assert_eq!(eval("8 / 4 / 2", &[], &[]), 1.0);
        assert_eq!(eval("1.5e1 + .5", &[], &[]), 15.5);
    }

    #[test]
    fn parameters_bind_at_parse_time() {
        let mut params = BTreeMap::new();
        params.insert("a1".to_string(), 1.0);
        params.insert("a2".to_string(), 2.0);
        let e = parse(
            "1/(a1*(x1^2+y1^2)+a2*(x2^2+y2^2))",
            &names(&["x1", "y1", "x2", "y2"]),
            &params,
        )
        .unwrap();
        assert_eq!(e.eval_f64(&[1.0, 0.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn functions() {
        let e = std::f64::consts::E;
        assert!((eval("log(w2)", &["w2"], &[e]) - 1.0).abs() < 1e-15);
        assert!((eval("atan2(1, 0) - pi/2", &[], &[])).abs() < 1e-15);
        assert_eq!(eval("sqrt(x)*exp(0)", &["x"], &[4.0]), 2.0);
    }

    #[test]
    fn errors_carry_columns() {
        let err = parse("x + q", &names(&["x"]), &BTreeMap::new()).unwrap_err();
        assert_eq!(err.column, 5);
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("q".into()));

        let err = parse("atan2(x)", &names(&["x"]), &BTreeMap::new()).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Arity { expected: 2, got: 1, .. }));

        let err = parse("x^1.5", &names(&["x"]), &BTreeMap::new()).unwrap_err();
        assert_eq!(err.column, 3);

        let err = parse("(x", &names(&["x"]), &BTreeMap::new()).unwrap_err();
        assert_eq!(err.column, 3);

        assert!(parse("x $ 2", &names(&["x"]), &BTreeMap::new()).is_err());
        assert!(parse("", &[], &BTreeMap::new()).is_err());
        assert!(parse("sin", &[], &BTreeMap::new()).is_err());
    }

    #[test]
    fn display_round_trips() {
        let coords = names(&["x", "y"]);
        let src = "-(x^2 - 3*y)/atan2(y, x + 2) + exp(-x)*1e-3";
        let e = parse(src, &coords, &BTreeMap::new()).unwrap();
        let shown = e.display_with(&coords).to_string();
        let back = parse(&shown, &coords, &BTreeMap::new()).unwrap();
        for p in [[0.3, 0.7], [-1.2, 2.5]] {
            assert_eq!(e.eval_f64(&p), back.eval_f64(&p));
        }
    }

    #[test]
    fn jet_and_float_evaluation_agree() {
        let coords = names(&["x", "y"]);
        let e = parse("sin(x*y) + sqrt(x^2 + y^2) - log(x)", &coords, &BTreeMap::new()).unwrap();
        let p = [0.8, -1.4];
        let j = e.eval(&crate::jet::constants(&p));
        assert_eq!(j.value(), e.eval_f64(&p));
    }

    #[test]
    fn substitution_and_shift() {
        let e = Expr::var(0) * Expr::var(1);
        let s = e.shifted(2);
        assert_eq!(s.eval_f64(&[0.0, 0.0, 3.0, 4.0]), 12.0);
        let sub = e.substitute(&[Expr::var(1) + 1.0, Expr::constant(2.0)]);
        assert_eq!(sub.eval_f64(&[0.0, 5.0]), 12.0);
    }
}
