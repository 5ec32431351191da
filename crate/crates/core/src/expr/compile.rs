use super::{power, BinaryOp, Expr, UnaryOp, Var};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    X,
    Y,
    Nan,
    Unary(UnaryOp),
    Binary(BinaryOp),
    Pow(f64),
}

const INLINE_STACK: usize = 32;

/// Postfix form of an [`Expr`] for repeated evaluation. Evaluates
/// bit-identically to [`Expr::eval`].
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    depth: usize,
}

impl Program {
    pub fn compile(e: &Expr) -> Self {
        fn emit(e: &Expr, ops: &mut Vec<Op>, depth: usize, max: &mut usize) {
            *max = (*max).max(depth + 1);
            match e {
                Expr::Const(c) => ops.push(Op::Const(*c)),
                Expr::Var(Var::X) => ops.push(Op::X),
                Expr::Var(Var::Y) => ops.push(Op::Y),
                Expr::Param(_) => ops.push(Op::Nan),
                Expr::Unary(op, a) => {
                    emit(a, ops, depth, max);
                    ops.push(Op::Unary(*op));
                }
                Expr::Pow(a, c) => {
                    emit(a, ops, depth, max);
                    ops.push(Op::Pow(*c));
                }
                Expr::Binary(op, a, b) => {
                    emit(a, ops, depth, max);
                    emit(b, ops, depth + 1, max);
                    ops.push(Op::Binary(*op));
                }
            }
        }
        let mut ops = Vec::new();
        let mut depth = 0;
        emit(e, &mut ops, 0, &mut depth);
        Program { ops, depth }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn eval(&self, p: Point2) -> f64 {
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(p, &mut stack)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            self.run(p, &mut stack)
        }
    }

    fn run(&self, p: Point2, stack: &mut [f64]) -> f64 {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[sp] = c;
                    sp += 1;
                }
                Op::X => {
                    stack[sp] = p.x;
                    sp += 1;
                }
                Op::Y => {
                    stack[sp] = p.y;
                    sp += 1;
                }
                Op::Nan => {
                    stack[sp] = f64::NAN;
                    sp += 1;
                }
                Op::Unary(u) => stack[sp - 1] = u.apply(stack[sp - 1]),
                Op::Pow(c) => stack[sp - 1] = power(stack[sp - 1], c),
                Op::Binary(b) => {
                    sp -= 1;
                    stack[sp - 1] = b.apply(stack[sp - 1], stack[sp]);
                }
            }
        }
        stack[0]
    }
}
