use super::{power, BinaryOp, Expr, UnaryOp, Var};
use crate::error::{Error, Result};

// Constructors that fold literal arithmetic and drop additive zeros and
// multiplicative ones. Nothing beyond that.

pub(crate) fn unary(op: UnaryOp, a: Expr) -> Expr {
    match (op, a) {
        (UnaryOp::Neg, Expr::Unary(UnaryOp::Neg, inner)) => *inner,
        (op, Expr::Const(c)) => Expr::Const(op.apply(c)),
        (op, a) => Expr::Unary(op, Box::new(a)),
    }
}

pub(crate) fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    let (ca, cb) = (a.as_const(), b.as_const());
    if let (Some(x), Some(y)) = (ca, cb) {
        if !(op == BinaryOp::Div && y == 0.0) {
            return Expr::Const(op.apply(x, y));
        }
    }
    match op {
        BinaryOp::Add if ca == Some(0.0) => b,
        BinaryOp::Add | BinaryOp::Sub if cb == Some(0.0) => a,
        BinaryOp::Sub if ca == Some(0.0) => unary(UnaryOp::Neg, b),
        BinaryOp::Mul if ca == Some(0.0) || cb == Some(0.0) => Expr::Const(0.0),
        BinaryOp::Mul if ca == Some(1.0) => b,
        BinaryOp::Mul | BinaryOp::Div if cb == Some(1.0) => a,
        BinaryOp::Div if ca == Some(0.0) => Expr::Const(0.0),
        _ => Expr::Binary(op, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, e: f64) -> Expr {
    if e == 0.0 {
        return Expr::Const(1.0);
    }
    if e == 1.0 {
        return a;
    }
    match a {
        Expr::Const(c) => Expr::Const(power(c, e)),
        a => Expr::Pow(Box::new(a), e),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    binary(BinaryOp::Add, a, b)
}

fn sub(a: Expr, b: Expr) -> Expr {
    binary(BinaryOp::Sub, a, b)
}

fn mul(a: Expr, b: Expr) -> Expr {
    binary(BinaryOp::Mul, a, b)
}

fn div(a: Expr, b: Expr) -> Expr {
    binary(BinaryOp::Div, a, b)
}

fn call(op: UnaryOp, a: &Expr) -> Expr {
    unary(op, a.clone())
}

pub(crate) fn differentiate(e: &Expr, var: Var) -> Result<Expr> {
    Ok(match e {
        Expr::Const(_) | Expr::Param(_) => Expr::Const(0.0),
        Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
        Expr::Unary(op, a) => {
            let da = differentiate(a, var)?;
            match op {
                UnaryOp::Neg => unary(UnaryOp::Neg, da),
                UnaryOp::Sin => mul(call(UnaryOp::Cos, a), da),
                UnaryOp::Cos => unary(UnaryOp::Neg, mul(call(UnaryOp::Sin, a), da)),
                UnaryOp::Exp => mul(call(UnaryOp::Exp, a), da),
                UnaryOp::Sqrt => div(da, mul(Expr::Const(2.0), call(UnaryOp::Sqrt, a))),
                UnaryOp::Abs => return Err(Error::NonDifferentiable),
            }
        }
        Expr::Binary(op, a, b) => {
            let (da, db) = (differentiate(a, var)?, differentiate(b, var)?);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinaryOp::Add => add(da, db),
                BinaryOp::Sub => sub(da, db),
                BinaryOp::Mul => add(mul(da, b), mul(a, db)),
                BinaryOp::Div => div(sub(mul(da, b.clone()), mul(a, db)), pow(b, 2.0)),
            }
        }
        Expr::Pow(a, c) => {
            let da = differentiate(a, var)?;
            mul(mul(Expr::Const(*c), pow((**a).clone(), c - 1.0)), da)
        }
    })
}
