//! Expression DSL for scripted pricing rules and acceptance constraints.
//!
//! Expressions range over portfolio coordinates `x1..xk` and state
//! coordinates `s1..sn`. `E[e]` is the probability-weighted sum
//! `Σ_ω p_ω · e(s ⊙ 1_ω)`, where every state coordinate other than `ω`
//! is set to zero, so that `E[s1 + s2] = E[X]` and
//! `E[max(-s1, 0) + max(-s2, 0)] = E[X⁻]`.

mod analysis;
mod eval;
mod parse;

use std::fmt;

pub use analysis::{convexity_spot_check, Affine, ConvexityWarning, ExprFn, LinForm, LinVar, Recession, CONVEXITY_SAMPLES};
pub use eval::{DomainError, EvalPoint};
pub use parse::{parse, SyntaxError};

/// A variable reference; indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    S(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Max,
    Min,
    Abs,
    Exp,
    Sqrt,
    Pow,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Max => "max",
            Func::Min => "min",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Max | Func::Min | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Abstract syntax tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Expect(Box<Expr>),
}

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }

    /// Constant value if the expression contains no variables.
    pub fn constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Var(_) => None,
            Expr::Neg(a) => a.constant().map(|v| -v),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.constant()?, b.constant()?);
                Some(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                })
            }
            Expr::Call(..) | Expr::Expect(_) => {
                let pt = EvalPoint { x: &[], s: &[], probs: &[] };
                if self.has_vars() {
                    None
                } else {
                    self.eval(&pt).ok()
                }
            }
        }
    }

    pub fn has_vars(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Var(_)) {
                found = true;
            }
        });
        found
    }

    /// Calls `f` on every node in pre-order.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Expect(a) => a.visit(f),
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
        }
    }

    /// Number of portfolio and state coordinates referenced (max index + 1).
    pub fn arity(&self) -> (usize, usize) {
        let (mut nx, mut ns) = (0, 0);
        self.visit(&mut |e| match e {
            Expr::Var(Var::X(i)) => nx = nx.max(i + 1),
            Expr::Var(Var::S(i)) => ns = ns.max(i + 1),
            _ => {}
        });
        (nx, ns)
    }

    pub fn uses_expectation(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Expect(_)) {
                found = true;
            }
        });
        found
    }

    fn fmt_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::S(i) => write!(f, "s{}", i + 1),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                Expr::fmt_child(f, a, a.prec() < 3)
            }
            Expr::Bin(op, a, b) => {
                let p = self.prec();
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                Expr::fmt_child(f, a, a.prec() < p)?;
                write!(f, "{sym}")?;
                Expr::fmt_child(f, b, b.prec() <= p)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Expect(a) => write!(f, "E[{a}]"),
        }
    }
}
