use super::{BinOp, Expr, Func, Var};

/// Values of the free variables plus the outcome probabilities used by `E[·]`.
#[derive(Debug, Clone, Copy)]
pub struct EvalPoint<'a> {
    pub x: &'a [f64],
    pub s: &'a [f64],
    pub probs: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("sqrt of negative value {0}")]
    NegativeSqrt(f64),
    #[error("pow({0}, {1}) is undefined")]
    Pow(f64, f64),
    #[error("variable {0} is not assigned")]
    Unbound(Var),
    #[error("expression evaluates to NaN")]
    NotANumber,
}

/// Values within this distance below zero are treated as zero by `sqrt` and `pow`.
const ROOT_SLACK: f64 = 1e-12;
/// Arguments at which the one-sided derivative of `sqrt`/`pow` is evaluated when
/// the true right derivative at zero is infinite.
const DERIV_FLOOR: f64 = 1e-16;

fn lookup(v: Var, pt: &EvalPoint<'_>) -> Result<f64, DomainError> {
    let slot = match v {
        Var::X(i) => pt.x.get(i),
        Var::S(i) => pt.s.get(i),
    };
    slot.copied().ok_or(DomainError::Unbound(v))
}

fn root_arg(a: f64) -> Result<f64, DomainError> {
    if a >= 0.0 {
        Ok(a)
    } else if a >= -ROOT_SLACK {
        Ok(0.0)
    } else {
        Err(DomainError::NegativeSqrt(a))
    }
}

fn pow_val(a: f64, p: f64) -> Result<f64, DomainError> {
    if p.fract() == 0.0 {
        return Ok(a.powf(p));
    }
    let a = if a < 0.0 && a >= -ROOT_SLACK { 0.0 } else { a };
    if a < 0.0 || (a == 0.0 && p < 0.0) {
        return Err(DomainError::Pow(a, p));
    }
    Ok(a.powf(p))
}

fn masked<'a>(s: &[f64], omega: usize, buf: &'a mut Vec<f64>) -> &'a [f64] {
    buf.clear();
    buf.extend((0..s.len()).map(|j| if j == omega { s[j] } else { 0.0 }));
    buf
}

/// Value together with a dense gradient over `x` followed by `s`.
struct Dual {
    v: f64,
    g: Vec<f64>,
}

impl Dual {
    fn constant(v: f64, dim: usize) -> Self {
        Dual { v, g: vec![0.0; dim] }
    }

    fn scale(mut self, c: f64) -> Self {
        self.v *= c;
        if c != 1.0 {
            self.g.iter_mut().for_each(|g| *g *= c);
        }
        self
    }

    /// Applies an outer function with value `v` and derivative `d`.
    fn chain(mut self, v: f64, d: f64) -> Self {
        self.v = v;
        self.g.iter_mut().for_each(|g| {
            if *g != 0.0 {
                *g *= d
            }
        });
        self
    }

    fn axpy(mut self, c: f64, other: &Dual) -> Self {
        for (a, b) in self.g.iter_mut().zip(&other.g) {
            *a += c * b;
        }
        self
    }
}

impl Expr {
    /// Evaluates the expression.
    pub fn eval(&self, pt: &EvalPoint<'_>) -> Result<f64, DomainError> {
        let v = match self {
            Expr::Num(c) => *c,
            Expr::Var(v) => lookup(*v, pt)?,
            Expr::Neg(a) => -a.eval(pt)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(pt)?, b.eval(pt)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(pt)?;
                match f {
                    Func::Max => a.max(args[1].eval(pt)?),
                    Func::Min => a.min(args[1].eval(pt)?),
                    Func::Abs => a.abs(),
                    Func::Exp => a.exp(),
                    Func::Sqrt => root_arg(a)?.sqrt(),
                    Func::Pow => pow_val(a, args[1].eval(pt)?)?,
                }
            }
            Expr::Expect(a) => {
                let mut buf = Vec::new();
                let mut acc = 0.0;
                for (w, &p) in pt.probs.iter().enumerate() {
                    let s = masked(pt.s, w, &mut buf);
                    acc += p * a.eval(&EvalPoint { s, ..*pt })?;
                }
                acc
            }
        };
        if v.is_nan() {
            Err(DomainError::NotANumber)
        } else {
            Ok(v)
        }
    }

    /// Value and one subgradient with respect to `x` and `s` (in that order,
    /// dense, lengths `pt.x.len()` and `pt.s.len()`).
    ///
    /// Ties in `max`/`min` take the first argument; `abs` at zero takes slope
    /// `+1`. Where `sqrt` or a fractional `pow` has an infinite right
    /// derivative at zero, the derivative is taken at `1e-16` instead so that
    /// the result stays finite.
    pub fn subgradient(&self, pt: &EvalPoint<'_>) -> Result<(f64, Vec<f64>, Vec<f64>), DomainError> {
        let d = self.dual(pt)?;
        if d.v.is_nan() {
            return Err(DomainError::NotANumber);
        }
        let mut gx = d.g;
        let gs = gx.split_off(pt.x.len());
        Ok((d.v, gx, gs))
    }

    fn dual(&self, pt: &EvalPoint<'_>) -> Result<Dual, DomainError> {
        let dim = pt.x.len() + pt.s.len();
        Ok(match self {
            Expr::Num(c) => Dual::constant(*c, dim),
            Expr::Var(v) => {
                let mut d = Dual::constant(lookup(*v, pt)?, dim);
                match v {
                    Var::X(i) => d.g[*i] = 1.0,
                    Var::S(i) => d.g[pt.x.len() + i] = 1.0,
                }
                d
            }
            Expr::Neg(a) => a.dual(pt)?.scale(-1.0),
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.dual(pt)?, b.dual(pt)?);
                match op {
                    BinOp::Add => {
                        let v = da.v + db.v;
                        let mut r = da.axpy(1.0, &db);
                        r.v = v;
                        r
                    }
                    BinOp::Sub => {
                        let v = da.v - db.v;
                        let mut r = da.axpy(-1.0, &db);
                        r.v = v;
                        r
                    }
                    BinOp::Mul => {
                        let (va, vb) = (da.v, db.v);
                        let mut r = da.scale(vb).axpy(va, &db);
                        r.v = va * vb;
                        r
                    }
                    BinOp::Div => da.scale(1.0 / db.v),
                }
            }
            Expr::Call(f, args) => {
                let da = args[0].dual(pt)?;
                match f {
                    Func::Max => {
                        let db = args[1].dual(pt)?;
                        if da.v >= db.v { da } else { db }
                    }
                    Func::Min => {
                        let db = args[1].dual(pt)?;
                        if da.v <= db.v { da } else { db }
                    }
                    Func::Abs => {
                        let v = da.v;
                        if v >= 0.0 { da } else { da.scale(-1.0) }
                    }
                    Func::Exp => {
                        let e = da.v.exp();
                        da.chain(e, e)
                    }
                    Func::Sqrt => {
                        let a = root_arg(da.v)?;
                        let d = 0.5 / a.max(DERIV_FLOOR).sqrt();
                        da.chain(a.sqrt(), d)
                    }
                    Func::Pow => {
                        let p = args[1].eval(pt)?;
                        let a = da.v;
                        let v = pow_val(a, p)?;
                        let d = if p == 0.0 {
                            0.0
                        } else if p.fract() == 0.0 {
                            p * a.powf(p - 1.0)
                        } else {
                            p * a.max(DERIV_FLOOR).powf(p - 1.0)
                        };
                        da.chain(v, d)
                    }
                }
            }
            Expr::Expect(a) => {
                let mut acc = Dual::constant(0.0, dim);
                let mut buf = Vec::new();
                let nx = pt.x.len();
                for (w, &p) in pt.probs.iter().enumerate() {
                    let s = masked(pt.s, w, &mut buf);
                    let mut inner = a.dual(&EvalPoint { s, ..*pt })?;
                    for (j, g) in inner.g[nx..].iter_mut().enumerate() {
                        if j != w {
                            *g = 0.0;
                        }
                    }
                    acc.v += p * inner.v;
                    inner.v = 0.0;
                    acc = acc.axpy(p, &inner);
                }
                acc
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn at<'a>(x: &'a [f64], s: &'a [f64], probs: &'a [f64]) -> super::EvalPoint<'a> {
        super::EvalPoint { x, s, probs }
    }

    #[test]
    fn evaluates_spec_points() {
        let e = parse("max(2*x1+x2,x1+2*x2)").unwrap();
        assert_eq!(e.eval(&at(&[-2.0, 1.0], &[], &[])).unwrap(), 0.0);
        let e = parse("E[s1]").unwrap();
        assert_eq!(e.eval(&at(&[], &[4.0, 0.0], &[0.5, 0.5])).unwrap(), 2.0);
        let e = parse("-sqrt(x1*x1+x1*x2)").unwrap();
        assert_eq!(e.eval(&at(&[-1.0, 1.0], &[], &[])).unwrap(), 0.0);
    }

    #[test]
    fn masked_expectation_matches_mean_and_negative_part() {
        let p = [0.25, 0.75];
        let s = [-2.0, 4.0];
        let mean = parse("E[s1 + s2]").unwrap().eval(&at(&[], &s, &p)).unwrap();
        assert!((mean - (0.25 * -2.0 + 0.75 * 4.0)).abs() < 1e-15);
        let neg = parse("E[max(-s1, 0) + max(-s2, 0)]").unwrap().eval(&at(&[], &s, &p)).unwrap();
        assert!((neg - 0.5).abs() < 1e-15);
    }

    #[test]
    fn subgradients_follow_conventions() {
        let g = |src: &str, x: &[f64]| parse(src).unwrap().subgradient(&at(x, &[], &[])).unwrap().1;
        assert_eq!(g("max(x1, x2)", &[1.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(g("max(x1, x2)", &[1.0, 1.0]), vec![1.0, 0.0]);
        assert_eq!(g("abs(x1)", &[0.0]), vec![1.0]);
        assert_eq!(g("exp(x1)-1", &[0.0]), vec![1.0]);
    }

    #[test]
    fn expectation_gradient_is_probability_weighted() {
        let e = parse("E[max(-s1, 0) + max(-s2, 0)]").unwrap();
        let (_, _, gs) = e.subgradient(&at(&[], &[-1.0, 3.0], &[0.5, 0.5])).unwrap();
        assert_eq!(gs, vec![-0.5, 0.0]);
    }

    #[test]
    fn domain_errors() {
        let e = parse("sqrt(x1)").unwrap();
        assert!(e.eval(&at(&[-1.0], &[], &[])).is_err());
        assert_eq!(e.eval(&at(&[-1e-13], &[], &[])).unwrap(), 0.0);
        assert!(parse("x2").unwrap().eval(&at(&[1.0], &[], &[])).is_err());
        assert!(parse("pow(x1, 0.5)").unwrap().eval(&at(&[-1.0], &[], &[])).is_err());
        assert_eq!(parse("pow(x1, 2)").unwrap().eval(&at(&[-3.0], &[], &[])).unwrap(), 9.0);
    }

    #[test]
    fn sqrt_derivative_at_zero_is_large_and_finite() {
        let (_, g, _) = parse("-sqrt(x1)").unwrap().subgradient(&at(&[0.0], &[], &[])).unwrap();
        assert!(g[0].is_finite() && g[0] < -1e7);
    }
}
