//! Scalar expression language used for metric components and warping functions.
//!
//! Grammar (standard precedence, `^` binds tighter than unary minus and is
//! right-associative, no implicit multiplication):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary ("^" unary)?
//! primary := number | name | func "(" expr ")" | "(" expr ")"
//! func    := exp | log | sin | cos | sinh | cosh | tanh | sqrt
//! ```
//!
//! `pi` is a built-in constant unless declared as a coordinate or parameter.
//! `abs` is deliberately absent: every expression is smooth where it is defined.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Coord(usize),
    Param(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    /// Integer power; valid for any base (nonzero base when negative).
    PowInt(Box<Node>, i32),
    /// Real power; requires a positive base at evaluation time.
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression together with the names its symbols refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    coords: Vec<String>,
    params: Vec<String>,
}

pub fn parse(text: &str, coords: &[&str], params: &[&str]) -> Result<Expr> {
    for c in coords {
        if params.contains(c) {
            return Err(Error::NameClash(c.to_string()));
        }
    }
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        coords,
        params,
        len: text.len(),
    };
    let root = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(Error::Syntax {
            offset: tok.offset,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(Expr {
        root,
        coords: coords.iter().map(|s| s.to_string()).collect(),
        params: params.iter().map(|s| s.to_string()).collect(),
    })
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr {
            root: Node::Num(value),
            coords: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    /// True when the expression mentions no coordinate.
    pub fn is_coordinate_free(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Num(_) | Node::Param(_) => true,
                Node::Coord(_) => false,
                Node::Neg(a) | Node::PowInt(a, _) | Node::Call(_, a) => walk(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                    walk(a) && walk(b)
                }
            }
        }
        walk(&self.root)
    }

    /// Plain evaluation. `params` is ordered like [`Expr::params`].
    pub fn eval(&self, point: &[f64], params: &[f64]) -> Result<f64> {
        eval_f64(&self.root, point, params)
    }

    /// Value, gradient and Hessian with respect to the coordinates.
    pub fn eval_jet2(&self, point: &[f64], params: &[f64]) -> Result<Jet2> {
        self.eval_jet2_in(point, params, 0, point.len())
    }

    /// Jet in a larger variable space: coordinate `i` of this expression is
    /// variable `offset + i` of an `nvars`-dimensional space.
    pub fn eval_jet2_in(&self, point: &[f64], params: &[f64], offset: usize, nvars: usize) -> Result<Jet2> {
        let ctx = JetCtx {
            point,
            params,
            offset,
            nvars,
        };
        let j = ctx.eval(&self.root)?;
        if !j.is_finite() {
            return Err(Error::Domain("non-finite derivative".into()));
        }
        Ok(j)
    }

    /// Resolve a name→value map into the positional parameter vector.
    pub fn bind_params(&self, values: &std::collections::BTreeMap<String, f64>) -> Result<Vec<f64>> {
        self.params
            .iter()
            .map(|p| values.get(p).copied().ok_or_else(|| Error::UnboundParam(p.clone())))
            .collect()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.coords, &self.params)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, n: &Node, coords: &[String], params: &[String]) -> fmt::Result {
    match n {
        Node::Num(v) => {
            if *v < 0.0 {
                write!(f, "(-{:?})", -v)
            } else {
                write!(f, "{:?}", v)
            }
        }
        Node::Coord(i) => write!(f, "{}", coords[*i]),
        Node::Param(i) => write!(f, "{}", params[*i]),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(f, a, coords, params)?;
            write!(f, ")")
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            let op = match n {
                Node::Add(..) => "+",
                Node::Sub(..) => "-",
                Node::Mul(..) => "*",
                Node::Div(..) => "/",
                _ => "^",
            };
            write!(f, "(")?;
            write_node(f, a, coords, params)?;
            write!(f, " {op} ")?;
            write_node(f, b, coords, params)?;
            write!(f, ")")
        }
        Node::PowInt(a, k) => {
            write!(f, "(")?;
            write_node(f, a, coords, params)?;
            if *k < 0 {
                write!(f, "^(-{}))", -(*k as i64))
            } else {
                write!(f, "^{k})")
            }
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, coords, params)?;
            write!(f, ")")
        }
    }
}

fn eval_f64(n: &Node, x: &[f64], p: &[f64]) -> Result<f64> {
    let v = match n {
        Node::Num(v) => *v,
        Node::Coord(i) => x[*i],
        Node::Param(i) => p[*i],
        Node::Neg(a) => -eval_f64(a, x, p)?,
        Node::Add(a, b) => eval_f64(a, x, p)? + eval_f64(b, x, p)?,
        Node::Sub(a, b) => eval_f64(a, x, p)? - eval_f64(b, x, p)?,
        Node::Mul(a, b) => eval_f64(a, x, p)? * eval_f64(b, x, p)?,
        Node::Div(a, b) => {
            let d = eval_f64(b, x, p)?;
            if d == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            eval_f64(a, x, p)? / d
        }
        Node::PowInt(a, k) => {
            let b = eval_f64(a, x, p)?;
            if *k < 0 && b == 0.0 {
                return Err(Error::Domain("zero raised to a negative power".into()));
            }
            b.powi(*k)
        }
        Node::Pow(a, e) => {
            let b = eval_f64(a, x, p)?;
            if b <= 0.0 {
                return Err(Error::Domain(format!("real power of nonpositive base {b}")));
            }
            b.powf(eval_f64(e, x, p)?)
        }
        Node::Call(func, a) => {
            let v = eval_f64(a, x, p)?;
            check_arg(*func, v)?;
            match func {
                Func::Exp => v.exp(),
                Func::Log => v.ln(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Sinh => v.sinh(),
                Func::Cosh => v.cosh(),
                Func::Tanh => v.tanh(),
                Func::Sqrt => v.sqrt(),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain("non-finite value".into()))
    }
}

fn check_arg(func: Func, v: f64) -> Result<()> {
    match func {
        Func::Log if v <= 0.0 => Err(Error::Domain(format!("log of nonpositive argument {v}"))),
        Func::Sqrt if v <= 0.0 => Err(Error::Domain(format!("sqrt of nonpositive argument {v}"))),
        _ => Ok(()),
    }
}

struct JetCtx<'a> {
    point: &'a [f64],
    params: &'a [f64],
    offset: usize,
    nvars: usize,
}

impl JetCtx<'_> {
    fn eval(&self, n: &Node) -> Result<Jet2> {
        Ok(match n {
            Node::Num(v) => Jet2::constant(*v, self.nvars),
            Node::Coord(i) => Jet2::variable(self.point[*i], self.offset + i, self.nvars),
            Node::Param(i) => Jet2::constant(self.params[*i], self.nvars),
            Node::Neg(a) => -&self.eval(a)?,
            Node::Add(a, b) => &self.eval(a)? + &self.eval(b)?,
            Node::Sub(a, b) => &self.eval(a)? - &self.eval(b)?,
            Node::Mul(a, b) => &self.eval(a)? * &self.eval(b)?,
            Node::Div(a, b) => {
                let d = self.eval(b)?;
                if d.value == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                self.eval(a)?.div(&d)
            }
            Node::PowInt(a, k) => {
                let b = self.eval(a)?;
                if *k < 0 && b.value == 0.0 {
                    return Err(Error::Domain("zero raised to a negative power".into()));
                }
                b.powi(*k)
            }
            Node::Pow(a, e) => {
                let b = self.eval(a)?;
                if b.value <= 0.0 {
                    return Err(Error::Domain(format!("real power of nonpositive base {}", b.value)));
                }
                let e = self.eval(e)?;
                (&e * &b.ln()).exp()
            }
            Node::Call(func, a) => {
                let v = self.eval(a)?;
                check_arg(*func, v.value)?;
                match func {
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Sinh => v.sinh(),
                    Func::Cosh => v.cosh(),
                    Func::Tanh => v.tanh(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("name `{s}`"),
            TokKind::Op(c) => format!("`{c}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
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
            let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{lit}`"),
            })?;
            out.push(Token {
                kind: TokKind::Num(v),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(text[start..i].to_string()),
                offset: start,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Token {
                kind: TokKind::Op(c),
                offset: i,
            });
            i += 1;
        } else {
            return Err(Error::Syntax {
                offset: i,
                message: format!("unexpected character `{}`", text[i..].chars().next().unwrap_or(c)),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    coords: &'a [&'a str],
    params: &'a [&'a str],
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokKind::Op(c), ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.len)
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.offset(),
                message: format!("expected `{op}`"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(match integer_exponent(&exponent) {
                Some(k) => Node::PowInt(Box::new(base), k),
                None => Node::Pow(Box::new(base), Box::new(exponent)),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let offset = self.offset();
        let tok = self.peek().cloned().ok_or(Error::Syntax {
            offset,
            message: "unexpected end of expression".into(),
        })?;
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(Node::Num(v)),
            TokKind::Op('(') => {
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Node::Coord(i));
                }
                if let Some(i) = self.params.iter().position(|c| *c == name) {
                    return Ok(Node::Param(i));
                }
                if let Some(func) = Func::from_name(&name) {
                    self.expect_op('(')?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Node::Num(std::f64::consts::PI));
                }
                Err(Error::UnknownSymbol(name))
            }
            other => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

fn integer_exponent(n: &Node) -> Option<i32> {
    let v = match n {
        Node::Num(v) => *v,
        Node::Neg(inner) => match inner.as_ref() {
            Node::Num(v) => -*v,
            _ => return None,
        },
        _ => return None,
    };
    (v.fract() == 0.0 && v.abs() <= 1024.0).then_some(v as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn polynomial_value() {
        let e = parse("x1^2 + x2^2", &["x1", "x2"], &[]).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0], &[]).unwrap(), 5.0);
    }

    #[test]
    fn paraboloid_jet_is_identity_hessian() {
        let e = parse("0.5*(x1^2+x2^2) + eps", &["x1", "x2"], &["eps"]).unwrap();
        let j = e.eval_jet2(&[1.0, 1.0], &[1.0]).unwrap();
        assert_eq!(j.value, 2.0);
        assert_eq!(j.grad, vec![1.0, 1.0]);
        assert_eq!(j.hess, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn quadrant_potential_parses() {
        let e = parse("x1^2+x2^2+x1+x2+1", &["x1", "x2"], &[]).unwrap();
        let j = e.eval_jet2(&[0.5, 2.0], &[]).unwrap();
        assert_eq!(j.value, 0.25 + 4.0 + 0.5 + 2.0 + 1.0);
        assert_eq!(j.hess, vec![2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn exp_sin_matches_central_differences() {
        let e = parse("exp(x1)*sin(x2)", &["x1", "x2"], &[]).unwrap();
        let x = [0.0, std::f64::consts::FRAC_PI_2];
        let j = e.eval_jet2(&x, &[]).unwrap();
        let h = 1e-5;
        let f = |a: f64, b: f64| e.eval(&[a, b], &[]).unwrap();
        let gx = (f(x[0] + h, x[1]) - f(x[0] - h, x[1])) / (2.0 * h);
        let gy = (f(x[0], x[1] + h) - f(x[0], x[1] - h)) / (2.0 * h);
        assert!(close(j.grad[0], gx, 1e-6));
        assert!((j.grad[1] - gy).abs() < 1e-6);
        let hxy = (f(x[0] + h, x[1] + h) - f(x[0] + h, x[1] - h) - f(x[0] - h, x[1] + h)
            + f(x[0] - h, x[1] - h))
            / (4.0 * h * h);
        assert!((j.h(0, 1) - hxy).abs() < 1e-6);
        let hyy = (f(x[0], x[1] + h) - 2.0 * f(x[0], x[1]) + f(x[0], x[1] - h)) / (h * h);
        assert!(close(j.h(1, 1), hyy, 1e-5));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-x^2", &["x"], &[]).unwrap();
        assert_eq!(e.eval(&[3.0], &[]).unwrap(), -9.0);
        let e = parse("2^3^2", &[], &[]).unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), 512.0);
        let e = parse("8/2/2", &[], &[]).unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), 2.0);
        let e = parse("x^-1", &["x"], &[]).unwrap();
        assert_eq!(e.eval(&[4.0], &[]).unwrap(), 0.25);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("2 x", &["x"], &[]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        match parse("(x + 1", &["x"], &[]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        match parse("x $ 1", &["x"], &[]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("   ", &["x"], &[]), Err(Error::Syntax { .. })));
    }

    #[test]
    fn unknown_symbols_and_abs_rejected() {
        assert_eq!(parse("y + 1", &["x"], &[]), Err(Error::UnknownSymbol("y".into())));
        assert_eq!(parse("abs(x)", &["x"], &[]), Err(Error::UnknownSymbol("abs".into())));
        assert_eq!(parse("x", &["x"], &["x"]), Err(Error::NameClash("x".into())));
    }

    #[test]
    fn domain_errors() {
        let e = parse("log(x)", &["x"], &[]).unwrap();
        assert!(matches!(e.eval_jet2(&[0.0], &[]), Err(Error::Domain(_))));
        let e = parse("x^0.5", &["x"], &[]).unwrap();
        assert!(matches!(e.eval_jet2(&[-1.0], &[]), Err(Error::Domain(_))));
        let e = parse("1/x", &["x"], &[]).unwrap();
        assert!(matches!(e.eval(&[0.0], &[]), Err(Error::Domain(_))));
        let e = parse("(-2)^2", &[], &[]).unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), 4.0);
    }

    #[test]
    fn real_power_jet() {
        let e = parse("t^(2/3)", &["t"], &[]).unwrap();
        let j = e.eval_jet2(&[8.0], &[]).unwrap();
        assert!((j.value - 4.0).abs() < 1e-14);
        assert!((j.grad[0] - (2.0 / 3.0) * 8f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        assert!((j.hess[0] - (2.0 / 3.0) * (-1.0 / 3.0) * 8f64.powf(-4.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn constant_jet_has_zero_derivatives() {
        let e = parse("sinh(2) * pi + c", &["x", "y"], &["c"]).unwrap();
        let j = e.eval_jet2(&[0.3, 0.4], &[1.5]).unwrap();
        assert!(j.grad.iter().all(|g| *g == 0.0));
        assert!(j.hess.iter().all(|h| *h == 0.0));
        assert!(e.is_coordinate_free());
    }

    #[test]
    fn embedded_jet_offsets_variables() {
        let e = parse("x^2", &["x"], &[]).unwrap();
        let j = e.eval_jet2_in(&[3.0], &[], 1, 3).unwrap();
        assert_eq!(j.grad, vec![0.0, 6.0, 0.0]);
        assert_eq!(j.h(1, 1), 2.0);
        assert_eq!(j.h(0, 0), 0.0);
    }
}
