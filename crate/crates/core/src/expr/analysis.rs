//! Structural analysis used to build optimization programs from expressions:
//! epigraph compilation of piecewise-linear pieces, recession functions and
//! the sampled convexity check.

use super::{BinOp, EvalPoint, Expr, Func, Var};
use crate::solver::ConvexFn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Variable of a compiled linear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinVar {
    X(usize),
    S(usize),
    /// Auxiliary epigraph variable, numbered from zero within one form.
    Aux(usize),
}

/// `Σ coef·var + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub terms: Vec<(LinVar, f64)>,
    pub constant: f64,
}

impl Affine {
    fn constant(c: f64) -> Self {
        Affine { terms: Vec::new(), constant: c }
    }

    fn var(v: LinVar) -> Self {
        Affine { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    fn scale(mut self, c: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= c);
        self.constant *= c;
        self
    }

    fn add(mut self, other: Affine) -> Self {
        self.terms.extend(other.terms);
        self.constant += other.constant;
        self
    }

    fn shift_aux(mut self, by: usize) -> Self {
        for t in &mut self.terms {
            if let LinVar::Aux(k) = &mut t.0 {
                *k += by;
            }
        }
        self
    }

    /// Merges duplicate variables and drops zero coefficients.
    pub fn normalized(&self) -> Affine {
        let mut out: Vec<(LinVar, f64)> = Vec::new();
        for &(v, c) in &self.terms {
            match out.iter_mut().find(|t| t.0 == v) {
                Some(t) => t.1 += c,
                None => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Affine { terms: out, constant: self.constant }
    }

    pub fn eval(&self, x: &[f64], s: &[f64], aux: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(v, c)| {
                    c * match v {
                        LinVar::X(i) => x[i],
                        LinVar::S(i) => s[i],
                        LinVar::Aux(k) => aux[k],
                    }
                })
                .sum::<f64>()
    }
}

/// Epigraph representation of a convex piecewise-linear expression:
/// `e(x, s) = min { value(x, s, u) : rows(x, s, u) ≤ 0 }` over `aux` extra variables `u`.
#[derive(Debug, Clone, Default)]
pub struct LinForm {
    pub value: Affine,
    pub aux: usize,
    pub rows: Vec<Affine>,
}

impl LinForm {
    fn affine(a: Affine) -> Self {
        LinForm { value: a, aux: 0, rows: Vec::new() }
    }

    pub fn is_affine(&self) -> bool {
        self.aux == 0 && self.rows.is_empty()
    }

    fn scale(mut self, c: f64) -> Self {
        debug_assert!(c >= 0.0 || self.is_affine());
        self.value = self.value.scale(c);
        self
    }

    fn add(mut self, other: LinForm) -> Self {
        let by = self.aux;
        self.value = self.value.add(other.value.shift_aux(by));
        self.rows.extend(other.rows.into_iter().map(|r| r.shift_aux(by)));
        self.aux += other.aux;
        self
    }

    /// Introduces `u ≥ each piece` and returns `u`.
    fn max_of(pieces: Vec<LinForm>) -> Self {
        let mut acc = LinForm::default();
        let mut values = Vec::new();
        for p in pieces {
            let by = acc.aux;
            values.push(p.value.clone().shift_aux(by));
            acc.rows.extend(p.rows.into_iter().map(|r| r.shift_aux(by)));
            acc.aux += p.aux;
        }
        let u = LinVar::Aux(acc.aux);
        acc.aux += 1;
        for v in values {
            acc.rows.push(v.add(Affine::var(u).scale(-1.0)));
        }
        acc.value = Affine::var(u);
        acc
    }
}

impl Expr {
    /// Rewrites every variable through `f`; variables mapped to `None` are kept.
    pub fn substitute(&self, f: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(v) => f(*v).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(f))),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.substitute(f)), Box::new(b.substitute(f))),
            Expr::Call(func, args) => Expr::Call(*func, args.iter().map(|a| a.substitute(f)).collect()),
            Expr::Expect(a) => Expr::Expect(Box::new(a.substitute(f))),
        }
    }

    /// The expression seen in outcome `omega` only (other state coordinates set to zero).
    pub fn masked(&self, omega: usize) -> Expr {
        self.substitute(&|v| match v {
            Var::S(j) if j != omega => Some(Expr::Num(0.0)),
            _ => None,
        })
    }

    /// Compiles a convex piecewise-linear expression into epigraph form.
    /// Returns `None` for anything else (smooth or nonconvex pieces).
    pub fn epigraph(&self, probs: &[f64]) -> Option<LinForm> {
        match self {
            Expr::Num(c) => Some(LinForm::affine(Affine::constant(*c))),
            Expr::Var(Var::X(i)) => Some(LinForm::affine(Affine::var(LinVar::X(*i)))),
            Expr::Var(Var::S(i)) => Some(LinForm::affine(Affine::var(LinVar::S(*i)))),
            Expr::Neg(a) => {
                let a = a.epigraph(probs)?;
                a.is_affine().then(|| a.scale(-1.0))
            }
            Expr::Bin(op, a, b) => match op {
                BinOp::Add => Some(a.epigraph(probs)?.add(b.epigraph(probs)?)),
                BinOp::Sub => {
                    let b = b.epigraph(probs)?;
                    if !b.is_affine() {
                        return None;
                    }
                    Some(a.epigraph(probs)?.add(b.scale(-1.0)))
                }
                BinOp::Mul => {
                    let (c, other) = match (a.constant(), b.constant()) {
                        (Some(c), _) => (c, b),
                        (_, Some(c)) => (c, a),
                        _ => return None,
                    };
                    let f = other.epigraph(probs)?;
                    (c >= 0.0 || f.is_affine()).then(|| f.scale(c))
                }
                BinOp::Div => {
                    let c = 1.0 / b.constant()?;
                    let f = a.epigraph(probs)?;
                    (c >= 0.0 || f.is_affine()).then(|| f.scale(c))
                }
            },
            Expr::Call(Func::Max, args) => {
                let fa = args[0].epigraph(probs)?;
                let fb = args[1].epigraph(probs)?;
                Some(LinForm::max_of(vec![fa, fb]))
            }
            Expr::Call(Func::Abs, args) => {
                let f = args[0].epigraph(probs)?;
                if !f.is_affine() {
                    return None;
                }
                let neg = f.clone().scale(-1.0);
                Some(LinForm::max_of(vec![f, neg]))
            }
            Expr::Call(Func::Pow, args) if args[1].constant() == Some(1.0) => args[0].epigraph(probs),
            Expr::Call(..) => None,
            Expr::Expect(a) => {
                let mut acc = LinForm::default();
                for (w, &p) in probs.iter().enumerate() {
                    acc = acc.add(a.masked(w).epigraph(probs)?.scale(p));
                }
                Some(acc)
            }
        }
    }

    /// Affine form of the expression, if it is affine.
    pub fn affine(&self, probs: &[f64]) -> Option<Affine> {
        let f = self.epigraph(probs)?;
        f.is_affine().then(|| f.value.normalized())
    }

    fn degree(&self) -> Option<Degree> {
        use Degree::*;
        let same = |a: Degree, b: Degree| match (a, b) {
            (Zero, d) | (d, Zero) => Some(d),
            (Of(x), Of(y)) if x == y => Some(Of(x)),
            _ => None,
        };
        Some(match self {
            Expr::Num(c) if *c == 0.0 => Zero,
            Expr::Num(_) => Of(0.0),
            Expr::Var(_) => Of(1.0),
            Expr::Neg(a) | Expr::Expect(a) => a.degree()?,
            Expr::Bin(BinOp::Add | BinOp::Sub, a, b) => same(a.degree()?, b.degree()?)?,
            Expr::Bin(BinOp::Mul, a, b) => match (a.degree()?, b.degree()?) {
                (Zero, _) | (_, Zero) => Zero,
                (Of(x), Of(y)) => Of(x + y),
            },
            Expr::Bin(BinOp::Div, a, _) => a.degree()?,
            Expr::Call(Func::Max | Func::Min, args) => same(args[0].degree()?, args[1].degree()?)?,
            Expr::Call(Func::Abs, args) => args[0].degree()?,
            Expr::Call(Func::Sqrt, args) => match args[0].degree()? {
                Zero => Zero,
                Of(d) => Of(d / 2.0),
            },
            Expr::Call(Func::Pow, args) => {
                let p = args[1].constant()?;
                match args[0].degree()? {
                    Zero if p > 0.0 => Zero,
                    Zero => return None,
                    Of(d) => Of(d * p),
                }
            }
            Expr::Call(Func::Exp, args) => match args[0].degree()? {
                Of(d) if d == 0.0 => Of(0.0),
                Zero => Of(0.0),
                _ => return None,
            },
        })
    }

    /// Whether `e(λv) = λ·e(v)` for all `λ > 0` by construction.
    pub fn is_positively_homogeneous(&self) -> bool {
        matches!(self.degree(), Some(Degree::Zero) | Some(Degree::Of(1.0)))
    }

    /// Symbolic recession function `e^∞(d) = lim e(λd)/λ` of a convex
    /// expression, as a value expression restricted to a domain of
    /// directions. `None` when the structure is not recognized.
    pub fn recession(&self, n_states: usize) -> Option<Recession> {
        match self.degree() {
            Some(Degree::Zero) | Some(Degree::Of(0.0)) => return Some(Recession::zero()),
            Some(Degree::Of(d)) if d == 1.0 => return Some(Recession { value: self.clone(), domain: Vec::new() }),
            _ => {}
        }
        let is_affine = |e: &Expr| e.epigraph(&vec![0.0; n_states]).map_or(false, |f| f.is_affine());
        match self {
            Expr::Num(_) => Some(Recession::zero()),
            Expr::Var(_) => Some(Recession { value: self.clone(), domain: Vec::new() }),
            Expr::Neg(a) => {
                if let Expr::Call(Func::Sqrt, args) = a.as_ref() {
                    if is_affine(&args[0]) {
                        let inner = args[0].recession(n_states)?;
                        return Some(Recession { value: Expr::Num(0.0), domain: vec![neg(inner.value)] });
                    }
                }
                if is_affine(a) {
                    let r = a.recession(n_states)?;
                    return Some(Recession { value: neg(r.value), domain: r.domain });
                }
                None
            }
            Expr::Bin(op, a, b) => match op {
                BinOp::Add => Some(a.recession(n_states)?.plus(b.recession(n_states)?)),
                BinOp::Sub => {
                    if !is_affine(b) {
                        return None;
                    }
                    let rb = b.recession(n_states)?;
                    Some(a.recession(n_states)?.plus(Recession { value: neg(rb.value), domain: rb.domain }))
                }
                BinOp::Mul => {
                    if a == b {
                        return Expr::Call(Func::Pow, vec![(**a).clone(), Expr::Num(2.0)]).recession(n_states);
                    }
                    let (c, other) = match (a.constant(), b.constant()) {
                        (Some(c), _) => (c, b),
                        (_, Some(c)) => (c, a),
                        _ => return None,
                    };
                    if c < 0.0 && !is_affine(other) {
                        return None;
                    }
                    Some(other.recession(n_states)?.times(c))
                }
                BinOp::Div => {
                    let c = 1.0 / b.constant()?;
                    if c < 0.0 && !is_affine(a) {
                        return None;
                    }
                    Some(a.recession(n_states)?.times(c))
                }
            },
            Expr::Call(func, args) => match func {
                Func::Max => {
                    let (ra, rb) = (args[0].recession(n_states)?, args[1].recession(n_states)?);
                    let mut domain = ra.domain;
                    domain.extend(rb.domain);
                    Some(Recession { value: Expr::Call(Func::Max, vec![ra.value, rb.value]), domain })
                }
                Func::Abs => {
                    if !is_affine(&args[0]) {
                        return None;
                    }
                    let r = args[0].recession(n_states)?;
                    Some(Recession { value: Expr::Call(Func::Abs, vec![r.value]), domain: r.domain })
                }
                Func::Exp => {
                    let r = args[0].recession(n_states)?;
                    let mut domain = r.domain;
                    domain.push(r.value);
                    Some(Recession { value: Expr::Num(0.0), domain })
                }
                Func::Pow => {
                    let p = args[1].constant()?;
                    if p == 1.0 {
                        return args[0].recession(n_states);
                    }
                    if p < 1.0 {
                        return None;
                    }
                    let r = args[0].recession(n_states)?;
                    let mut domain = r.domain;
                    if is_affine(&args[0]) {
                        domain.push(neg(r.value.clone()));
                    }
                    domain.push(r.value);
                    Some(Recession { value: Expr::Num(0.0), domain })
                }
                Func::Min | Func::Sqrt => None,
            },
            Expr::Expect(a) => {
                let r = a.recession(n_states)?;
                let mut domain = Vec::new();
                for d in &r.domain {
                    if d.uses_state() {
                        domain.extend((0..n_states).map(|w| d.masked(w)));
                    } else {
                        domain.push(d.clone());
                    }
                }
                Some(Recession { value: Expr::Expect(Box::new(r.value)), domain })
            }
        }
    }

    fn uses_state(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Var(Var::S(_))) {
                found = true;
            }
        });
        found
    }
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Num(c) => Expr::Num(-c),
        Expr::Neg(a) => *a,
        e => Expr::Neg(Box::new(e)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Degree {
    /// The zero function, homogeneous of every degree.
    Zero,
    Of(f64),
}

/// Recession function: `value(d)` on directions with every `domain` entry `≤ 0`, `+∞` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Recession {
    pub value: Expr,
    pub domain: Vec<Expr>,
}

impl Recession {
    fn zero() -> Self {
        Recession { value: Expr::Num(0.0), domain: Vec::new() }
    }

    fn plus(mut self, other: Recession) -> Self {
        self.value = match (self.value, other.value) {
            (Expr::Num(a), b) if a == 0.0 => b,
            (a, Expr::Num(b)) if b == 0.0 => a,
            (a, b) => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
        };
        self.domain.extend(other.domain);
        self
    }

    fn times(mut self, c: f64) -> Self {
        self.value = match self.value {
            Expr::Num(v) => Expr::Num(v * c),
            v if c == 1.0 => v,
            v => Expr::Bin(BinOp::Mul, Box::new(Expr::Num(c)), Box::new(v)),
        };
        self
    }

    /// Evaluates the recession function; directions outside the domain give `+∞`.
    pub fn eval(&self, pt: &EvalPoint<'_>, tol: f64) -> f64 {
        for d in &self.domain {
            match d.eval(pt) {
                Ok(v) if v <= tol => {}
                _ => return f64::INFINITY,
            }
        }
        self.value.eval(pt).unwrap_or(f64::INFINITY)
    }
}

/// A sampled segment along which midpoint convexity fails.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("convexity violated on segment {a:?} -- {b:?} by {gap}")]
pub struct ConvexityWarning {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub gap: f64,
}

/// Number of segments sampled by [`convexity_spot_check`].
pub const CONVEXITY_SAMPLES: usize = 1000;

/// Samples midpoint convexity on random segments between admissible points of
/// the domain. Points are `(x, s)` concatenated. Returns the number of
/// segments tested.
pub fn convexity_spot_check(
    e: &Expr,
    nx: usize,
    ns: usize,
    probs: &[f64],
    admissible: &dyn Fn(&[f64]) -> bool,
    seed: u64,
) -> Result<usize, ConvexityWarning> {
    let dim = nx + ns;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let value = |z: &[f64]| -> Option<f64> {
        let v = e.eval(&EvalPoint { x: &z[..nx], s: &z[nx..], probs }).ok()?;
        v.is_finite().then_some(v)
    };
    let draw = |rng: &mut ChaCha8Rng| -> Option<(Vec<f64>, f64)> {
        for _ in 0..200 {
            let scale = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
            let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect();
            if admissible(&z) {
                if let Some(v) = value(&z) {
                    return Some((z, v));
                }
            }
        }
        None
    };
    let mut tested = 0;
    for _ in 0..CONVEXITY_SAMPLES {
        let (Some((a, fa)), Some((b, fb))) = (draw(&mut rng), draw(&mut rng)) else {
            break;
        };
        let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
        let bound = 0.5 * (fa + fb);
        let gap = match value(&mid) {
            Some(fm) => fm - bound,
            None => f64::INFINITY,
        };
        if gap > 1e-9 * (1.0 + fa.abs() + fb.abs()) {
            return Err(ConvexityWarning { a, b, gap });
        }
        tested += 1;
    }
    Ok(tested)
}

/// Adapter exposing `e(x, s) + Σ cᵢ·vᵢ + constant` over program variables as a
/// [`ConvexFn`]. `x_vars[i]` and `s_vars[j]` are the program indices of `xᵢ₊₁` and `sⱼ₊₁`.
#[derive(Debug, Clone)]
pub struct ExprFn {
    pub expr: Expr,
    pub probs: Vec<f64>,
    pub x_vars: Vec<usize>,
    pub s_vars: Vec<usize>,
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
}

impl ExprFn {
    pub fn new(expr: Expr, probs: &[f64], x_vars: Vec<usize>, s_vars: Vec<usize>) -> Self {
        ExprFn { expr, probs: probs.to_vec(), x_vars, s_vars, linear: Vec::new(), constant: 0.0 }
    }

    pub fn with_linear(mut self, linear: Vec<(usize, f64)>, constant: f64) -> Self {
        self.linear = linear;
        self.constant = constant;
        self
    }
}

impl ConvexFn for ExprFn {
    fn eval(&self, z: &[f64]) -> Option<(f64, Vec<(usize, f64)>)> {
        let x: Vec<f64> = self.x_vars.iter().map(|&i| z[i]).collect();
        let s: Vec<f64> = self.s_vars.iter().map(|&i| z[i]).collect();
        let (v, gx, gs) = self.expr.subgradient(&EvalPoint { x: &x, s: &s, probs: &self.probs }).ok()?;
        let mut value = v + self.constant;
        let mut grad: Vec<(usize, f64)> = Vec::with_capacity(gx.len() + gs.len() + self.linear.len());
        grad.extend(self.x_vars.iter().copied().zip(gx));
        grad.extend(self.s_vars.iter().copied().zip(gs));
        for &(i, c) in &self.linear {
            value += c * z[i];
            grad.push((i, c));
        }
        if grad.iter().any(|g| !g.1.is_finite()) {
            return Some((f64::INFINITY, grad.into_iter().map(|(i, _)| (i, 0.0)).collect()));
        }
        Some((value, grad))
    }
}
