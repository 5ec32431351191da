//! Scalar expressions in `x`, `y` and named parameters, used to define
//! stream functions `A(x, y)`. A field built from `A` is
//! `v = (∂A/∂y, −∂A/∂x)`, so it is divergence-free by construction and its
//! quarter turn is `∇A`.

mod compile;
mod diff;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::field::PlanarField;
use crate::geometry::{Point2, Vec2};

pub use compile::Program;
pub use parse::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn function_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Sqrt => Some("sqrt"),
            UnaryOp::Abs => Some("abs"),
        }
    }

    pub fn from_function_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }

    pub(crate) fn apply(self, a: f64) -> f64 {
        match self {
            UnaryOp::Neg => -a,
            UnaryOp::Sin => a.sin(),
            UnaryOp::Cos => a.cos(),
            UnaryOp::Exp => a.exp(),
            UnaryOp::Sqrt => a.sqrt(),
            UnaryOp::Abs => a.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }

    pub(crate) fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
        }
    }
}

pub(crate) fn power(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

/// Expression tree. Exponents are always literal constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Param(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {}", .expected.join(" or "))]
    Syntax { offset: usize, expected: Vec<String> },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

impl Expr {
    pub fn num(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::Var(Var::Y)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn contains_abs(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => false,
            Expr::Unary(op, a) => *op == UnaryOp::Abs || a.contains_abs(),
            Expr::Binary(_, a, b) => a.contains_abs() || b.contains_abs(),
            Expr::Pow(a, _) => a.contains_abs(),
        }
    }

    pub fn params(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Param(name) => {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
                Expr::Const(_) | Expr::Var(_) => {}
                Expr::Unary(_, a) | Expr::Pow(a, _) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Replaces parameters by their values, folding constants.
    pub fn bind(&self, params: &BTreeMap<String, f64>) -> Result<Expr> {
        Ok(match self {
            Expr::Param(name) => match params.get(name) {
                Some(v) => Expr::Const(*v),
                None => return Err(Error::UnboundParameter(name.clone())),
            },
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => diff::unary(*op, a.bind(params)?),
            Expr::Binary(op, a, b) => diff::binary(*op, a.bind(params)?, b.bind(params)?),
            Expr::Pow(a, e) => diff::pow(a.bind(params)?, *e),
        })
    }

    /// Tree-walking evaluation; unbound parameters evaluate to NaN.
    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X) => p.x,
            Expr::Var(Var::Y) => p.y,
            Expr::Param(_) => f64::NAN,
            Expr::Unary(op, a) => op.apply(a.eval(p)),
            Expr::Binary(op, a, b) => op.apply(a.eval(p), b.eval(p)),
            Expr::Pow(a, e) => power(a.eval(p), *e),
        }
    }

    /// Symbolic partial derivative.
    pub fn differentiate(&self, var: Var) -> Result<Expr> {
        diff::differentiate(self, var)
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => 1,
            Expr::Unary(_, a) | Expr::Pow(a, _) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 3)
            }
            Expr::Unary(op, a) => {
                write!(f, "{}(", op.function_name().unwrap_or_default())?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                a.fmt_prec(f, p)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, p + 1)
            }
            Expr::Pow(a, e) => {
                a.fmt_prec(f, 5)?;
                if e.is_sign_negative() {
                    write!(f, "^-{}", -e)
                } else {
                    write!(f, "^{e}")
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse(s)
    }
}

/// Field `v = (∂A/∂y, −∂A/∂x)` of the stream function `a`, with zero
/// analytic divergence and analytic curl `−ΔA`.
pub fn field_from_stream_function(a: &Expr, params: &BTreeMap<String, f64>) -> Result<PlanarField> {
    if a.contains_abs() {
        return Err(Error::NonDifferentiable);
    }
    let bound = a.bind(params)?;
    let ax = bound.differentiate(Var::X)?;
    let ay = bound.differentiate(Var::Y)?;
    let axx = ax.differentiate(Var::X)?;
    let ayy = ay.differentiate(Var::Y)?;
    let (px, py) = (Program::compile(&ax), Program::compile(&ay));
    let laplacian = Program::compile(&diff::binary(BinaryOp::Add, axx, ayy));
    Ok(PlanarField::new("expr", move |p| Vec2::new(py.eval(p), -px.eval(p)))
        .with_div(|_| 0.0)
        .with_curl(move |p| -laplacian.eval(p))
        .with_params(params))
}

/// Gradient field `∇A`, the quarter turn of [`field_from_stream_function`].
pub fn gradient_field(a: &Expr, params: &BTreeMap<String, f64>) -> Result<PlanarField> {
    if a.contains_abs() {
        return Err(Error::NonDifferentiable);
    }
    let bound = a.bind(params)?;
    let ax = bound.differentiate(Var::X)?;
    let ay = bound.differentiate(Var::Y)?;
    let laplacian = Program::compile(&diff::binary(
        BinaryOp::Add,
        ax.differentiate(Var::X)?,
        ay.differentiate(Var::Y)?,
    ));
    let (px, py) = (Program::compile(&ax), Program::compile(&ay));
    Ok(PlanarField::new("expr_grad", move |p| Vec2::new(px.eval(p), py.eval(p)))
        .with_curl(|_| 0.0)
        .with_div(move |p| laplacian.eval(p))
        .with_params(params))
}
