//! One-period market on a finite outcome space.
//!
//! A market consists of `N` basic securities with linearly independent
//! payoffs, a convex pricing rule `V₀` on portfolios and a closed convex set
//! `P` of admissible portfolios. Attainable payoffs are `M = {Sᵀx : x ∈ P}`
//! and a replicable payoff `X = Sᵀx` costs `π(X) = V₀(x)`.

use crate::error::{Error, Result};
use crate::expr::{EvalPoint, Expr, Recession};
use crate::linalg;

/// Tolerance on replication residuals (max norm).
pub const REP_TOL: f64 = 1e-9;
/// Pivot tolerance of the rank test on security payoffs.
pub const RANK_TOL: f64 = 1e-9;
/// Default membership tolerance.
pub const MEMBER_TOL: f64 = 1e-9;

pub type Payoff = Vec<f64>;
pub type Portfolio = Vec<f64>;

/// Extended-real subtraction with `∞ − ∞ = −∞`.
pub fn ext_sub(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY && b == f64::INFINITY {
        f64::NEG_INFINITY
    } else if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a - b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySpace {
    p: Vec<f64>,
}

impl ProbabilitySpace {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Invalid("probability space needs at least one outcome".into()));
        }
        if p.iter().any(|&q| !(q > 0.0) || !q.is_finite()) {
            return Err(Error::Invalid("outcome probabilities must be strictly positive".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(ProbabilitySpace { p })
    }

    /// Equally likely outcomes.
    pub fn uniform(n: usize) -> Self {
        ProbabilitySpace { p: vec![1.0 / n as f64; n] }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn expectation(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.p, x)
    }

    /// `E[DX]`.
    pub fn pairing(&self, d: &[f64], x: &[f64]) -> f64 {
        self.p.iter().zip(d).zip(x).map(|((p, d), x)| p * d * x).sum()
    }
}

/// Increasing piecewise-linear curve on `[0, cap]` with value 0 at 0.
///
/// `slopes[k]` applies between `knots[k-1]` and `knots[k]` (with an implicit
/// first knot at 0); the last slope extends to the cap or to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub knots: Vec<f64>,
    pub slopes: Vec<f64>,
    pub cap: Option<f64>,
}

impl Curve {
    pub fn linear(slope: f64) -> Self {
        Curve { knots: Vec::new(), slopes: vec![slope], cap: None }
    }

    fn validate(&self, convex: bool) -> Result<()> {
        if self.slopes.len() != self.knots.len() + 1 {
            return Err(Error::Invalid("curve needs one more slope than knots".into()));
        }
        let mut prev = 0.0;
        for &k in &self.knots {
            if !(k > prev) || !k.is_finite() {
                return Err(Error::Invalid("curve knots must be positive and increasing".into()));
            }
            prev = k;
        }
        if self.slopes.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Invalid("curve slopes must be finite and nonnegative".into()));
        }
        let ordered = self.slopes.windows(2).all(|w| if convex { w[1] >= w[0] } else { w[1] <= w[0] });
        if !ordered {
            let shape = if convex { "buy curve must be convex" } else { "sell curve must be concave" };
            return Err(Error::Invalid(shape.into()));
        }
        if let Some(c) = self.cap {
            if !(c >= 0.0) {
                return Err(Error::Invalid("curve cap must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Value at `q ≥ 0`; `+∞` beyond the cap.
    pub fn value(&self, q: f64) -> f64 {
        if self.cap.map_or(false, |c| q > c) {
            return f64::INFINITY;
        }
        let k = self.knots.partition_point(|&t| t < q);
        let mut v = 0.0;
        let mut start = 0.0;
        for j in 0..k {
            v += self.slopes[j] * (self.knots[j] - start);
            start = self.knots[j];
        }
        v + self.slopes[k] * (q - start)
    }

    /// Affine pieces `(value at start, slope, start)`.
    pub fn pieces(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.slopes.len());
        let mut start = 0.0;
        let mut v = 0.0;
        for (j, &s) in self.slopes.iter().enumerate() {
            out.push((v, s, start));
            if let Some(&end) = self.knots.get(j) {
                v += s * (end - start);
                start = end;
            }
        }
        out
    }

    pub fn terminal_slope(&self) -> f64 {
        *self.slopes.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PricingRule {
    Linear(Vec<f64>),
    Proportional { buy: Vec<f64>, sell: Vec<f64> },
    /// Per-security buy (convex) and sell (concave) curves.
    ConvexSeparable { buy: Vec<Curve>, sell: Vec<Curve> },
    GeneralConvex(Expr),
}

impl PricingRule {
    fn validate(&self, n_sec: usize) -> Result<()> {
        let dim = |len: usize| {
            if len == n_sec {
                Ok(())
            } else {
                Err(Error::Dimension { expected: n_sec, got: len })
            }
        };
        match self {
            PricingRule::Linear(p) => {
                dim(p.len())?;
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Invalid("prices must be finite".into()));
                }
            }
            PricingRule::Proportional { buy, sell } => {
                dim(buy.len())?;
                dim(sell.len())?;
                if buy.iter().chain(sell).any(|v| !v.is_finite()) {
                    return Err(Error::Invalid("prices must be finite".into()));
                }
                if buy.iter().zip(sell).any(|(b, s)| b < s) {
                    return Err(Error::Invalid("buy price below sell price".into()));
                }
            }
            PricingRule::ConvexSeparable { buy, sell } => {
                dim(buy.len())?;
                dim(sell.len())?;
                for (b, s) in buy.iter().zip(sell) {
                    b.validate(true)?;
                    s.validate(false)?;
                    if b.slopes[0] < s.slopes[0] {
                        return Err(Error::Invalid("initial buy slope below initial sell slope".into()));
                    }
                }
            }
            PricingRule::GeneralConvex(e) => {
                let (nx, ns) = e.arity();
                if ns > 0 || e.uses_expectation() {
                    return Err(Error::Invalid("pricing expression may only use portfolio variables".into()));
                }
                if nx > n_sec {
                    return Err(Error::Dimension { expected: n_sec, got: nx });
                }
                let v0 = e.eval(&EvalPoint { x: &vec![0.0; n_sec], s: &[], probs: &[] });
                if !matches!(v0, Ok(v) if v.abs() <= 1e-12) {
                    return Err(Error::Invalid("pricing rule must vanish at the zero portfolio".into()));
                }
            }
        }
        Ok(())
    }

    /// `V₀(x)`; `+∞` outside the effective domain.
    pub fn price(&self, x: &[f64]) -> f64 {
        match self {
            PricingRule::Linear(p) => linalg::dot(p, x),
            PricingRule::Proportional { buy, sell } => {
                x.iter().zip(buy.iter().zip(sell)).map(|(&q, (b, s))| if q >= 0.0 { b * q } else { s * q }).sum()
            }
            PricingRule::ConvexSeparable { buy, sell } => x
                .iter()
                .zip(buy.iter().zip(sell))
                .map(|(&q, (b, s))| if q >= 0.0 { b.value(q) } else { -s.value(-q) })
                .fold(0.0, |acc, v| if v == f64::INFINITY || acc == f64::INFINITY { f64::INFINITY } else { acc + v }),
            PricingRule::GeneralConvex(e) => match e.eval(&EvalPoint { x, s: &[], probs: &[] }) {
                Ok(v) => v,
                Err(_) => f64::INFINITY,
            },
        }
    }

    /// Whether `V₀` is positively homogeneous.
    pub fn is_conic(&self) -> bool {
        match self {
            PricingRule::Linear(_) | PricingRule::Proportional { .. } => true,
            PricingRule::ConvexSeparable { buy, sell } => buy.iter().chain(sell).all(|c| c.knots.is_empty() && c.cap.is_none()),
            PricingRule::GeneralConvex(e) => e.is_positively_homogeneous(),
        }
    }

    /// `V₀^∞(x) = sup_{λ>0} V₀(λx)/λ`.
    pub fn recession_price(&self, x: &[f64]) -> f64 {
        match self {
            PricingRule::Linear(_) | PricingRule::Proportional { .. } => self.price(x),
            PricingRule::ConvexSeparable { buy, sell } => {
                let mut acc = 0.0;
                for (&q, (b, s)) in x.iter().zip(buy.iter().zip(sell)) {
                    if q > 0.0 {
                        if b.cap.is_some() {
                            return f64::INFINITY;
                        }
                        acc += b.terminal_slope() * q;
                    } else if q < 0.0 {
                        if s.cap.is_some() {
                            return f64::INFINITY;
                        }
                        acc += s.terminal_slope() * q;
                    }
                }
                acc
            }
            PricingRule::GeneralConvex(_) => numeric_recession(|l| self.price(&x.iter().map(|v| v * l).collect::<Vec<_>>())),
        }
    }
}

/// Limit of `f(λ)/λ` along `λ = 2⁰, …, 2³⁰`. Geometrically shrinking
/// increments are extrapolated; anything else that has not settled to
/// `1e-7` is reported as divergent (`+∞`).
pub fn numeric_recession(f: impl Fn(f64) -> f64) -> f64 {
    const TOL: f64 = 1e-7;
    let mut slopes = Vec::with_capacity(31);
    for k in 0..=30 {
        let l = (2.0f64).powi(k);
        let v = f(l);
        if v == f64::INFINITY || v.is_nan() {
            return f64::INFINITY;
        }
        slopes.push(v / l);
    }
    let r = slopes[30];
    let d1 = slopes[30] - slopes[29];
    let d0 = slopes[29] - slopes[28];
    if d1 == 0.0 {
        return r;
    }
    let q = d1 / d0;
    if d0 != 0.0 && q.is_finite() && q.abs() < 0.999 {
        let extrapolated = r + d1 * q / (1.0 - q);
        if (extrapolated - r).abs() <= TOL * (1.0 + r.abs()) || d1.abs() <= TOL * (1.0 + r.abs()) {
            return extrapolated;
        }
    }
    if d1.abs() <= TOL * (1.0 + r.abs()) {
        r
    } else if d1 > 0.0 {
        f64::INFINITY
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    Unconstrained,
    LongOnly,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Rows `a·x ≤ b`.
    Halfspaces(Vec<(Vec<f64>, f64)>),
}

impl ConstraintSet {
    fn validate(&self, n_sec: usize) -> Result<()> {
        match self {
            ConstraintSet::Unconstrained | ConstraintSet::LongOnly => Ok(()),
            ConstraintSet::Box { lower, upper } => {
                for len in [lower.len(), upper.len()] {
                    if len != n_sec {
                        return Err(Error::Dimension { expected: n_sec, got: len });
                    }
                }
                if lower.iter().zip(upper).any(|(l, u)| !(*l <= 0.0 && *u >= 0.0)) {
                    return Err(Error::Invalid("box must contain the zero portfolio".into()));
                }
                Ok(())
            }
            ConstraintSet::Halfspaces(rows) => {
                for (a, b) in rows {
                    if a.len() != n_sec {
                        return Err(Error::Dimension { expected: n_sec, got: a.len() });
                    }
                    if !(*b >= 0.0) || a.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Invalid("halfspaces must contain the zero portfolio".into()));
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether `x ∈ P` within `tol`.
    pub fn admits(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConstraintSet::Unconstrained => true,
            ConstraintSet::LongOnly => x.iter().all(|&v| v >= -tol),
            ConstraintSet::Box { lower, upper } => {
                x.iter().zip(lower.iter().zip(upper)).all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
            }
            ConstraintSet::Halfspaces(rows) => rows.iter().all(|(a, b)| linalg::dot(a, x) <= b + tol),
        }
    }

    /// Whether `x ∈ P^∞` within `tol`.
    pub fn admits_direction(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConstraintSet::Unconstrained => true,
            ConstraintSet::LongOnly => x.iter().all(|&v| v >= -tol),
            ConstraintSet::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(&v, (&l, &u))| {
                (v >= -tol || l == f64::NEG_INFINITY) && (v <= tol || u == f64::INFINITY)
            }),
            ConstraintSet::Halfspaces(rows) => rows.iter().all(|(a, _)| linalg::dot(a, x) <= tol),
        }
    }

    /// Whether `P` is a cone.
    pub fn is_conic(&self) -> bool {
        match self {
            ConstraintSet::Unconstrained | ConstraintSet::LongOnly => true,
            ConstraintSet::Box { lower, upper } => {
                lower.iter().all(|&l| l == 0.0 || l == f64::NEG_INFINITY) && upper.iter().all(|&u| u == 0.0 || u == f64::INFINITY)
            }
            ConstraintSet::Halfspaces(rows) => rows.iter().all(|(_, b)| *b == 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Market {
    pub space: ProbabilitySpace,
    /// Security payoffs, one row per security.
    pub securities: Vec<Vec<f64>>,
    pub rule: PricingRule,
    pub constraints: ConstraintSet,
}

impl Market {
    pub fn new(space: ProbabilitySpace, securities: Vec<Vec<f64>>, rule: PricingRule, constraints: ConstraintSet) -> Result<Self> {
        let n = space.n();
        if securities.is_empty() {
            return Err(Error::Invalid("market needs at least one security".into()));
        }
        for row in &securities {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("security payoffs must be finite".into()));
            }
        }
        let r = linalg::rank(&securities, RANK_TOL);
        if r < securities.len() {
            return Err(Error::RankDeficient { rank: r, securities: securities.len() });
        }
        rule.validate(securities.len())?;
        constraints.validate(securities.len())?;
        Ok(Market { space, securities, rule, constraints })
    }

    pub fn n_states(&self) -> usize {
        self.space.n()
    }

    pub fn n_securities(&self) -> usize {
        self.securities.len()
    }

    pub fn probs(&self) -> &[f64] {
        self.space.probs()
    }

    pub fn portfolio_payoff(&self, x: &[f64]) -> Result<Payoff> {
        if x.len() != self.n_securities() {
            return Err(Error::Dimension { expected: self.n_securities(), got: x.len() });
        }
        let mut out = vec![0.0; self.n_states()];
        for (q, row) in x.iter().zip(&self.securities) {
            for (o, s) in out.iter_mut().zip(row) {
                *o += q * s;
            }
        }
        Ok(out)
    }

    pub fn price_portfolio(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_securities() {
            return Err(Error::Dimension { expected: self.n_securities(), got: x.len() });
        }
        Ok(self.rule.price(x))
    }

    /// The unique portfolio replicating `X`, if any.
    pub fn replicating_portfolio(&self, payoff: &[f64]) -> Option<Portfolio> {
        if payoff.len() != self.n_states() || payoff.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let x = linalg::least_squares(&self.securities, payoff);
        let back = self.portfolio_payoff(&x).ok()?;
        let resid = back.iter().zip(payoff).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        (resid <= REP_TOL).then_some(x)
    }

    fn replicate(&self, payoff: &[f64]) -> Result<Portfolio> {
        if payoff.len() != self.n_states() {
            return Err(Error::Dimension { expected: self.n_states(), got: payoff.len() });
        }
        self.replicating_portfolio(payoff).ok_or(Error::NotReplicable)
    }

    /// `π(X)`.
    pub fn pi(&self, payoff: &[f64]) -> Result<f64> {
        Ok(self.rule.price(&self.replicate(payoff)?))
    }

    pub fn in_m(&self, payoff: &[f64], tol: f64) -> bool {
        self.replicating_portfolio(payoff).map_or(false, |x| self.constraints.admits(&x, tol))
    }

    /// `π^∞(X)`.
    pub fn pi_recession(&self, payoff: &[f64]) -> Result<f64> {
        Ok(self.rule.recession_price(&self.replicate(payoff)?))
    }

    pub fn in_m_recession(&self, payoff: &[f64], tol: f64) -> bool {
        self.replicating_portfolio(payoff).map_or(false, |x| self.constraints.admits_direction(&x, tol))
    }

    /// Whether both `π` and `M` are conic.
    pub fn is_conic(&self) -> bool {
        self.rule.is_conic() && self.constraints.is_conic()
    }

    /// Symbolic recession of a scripted rule.
    pub fn rule_recession(&self) -> Option<Recession> {
        match &self.rule {
            PricingRule::GeneralConvex(e) => e.recession(self.n_states()),
            _ => None,
        }
    }

    /// Identity payoff matrix on `n` equally likely states.
    pub fn identity_securities(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn identity(rule: PricingRule, c: ConstraintSet) -> Market {
        Market::new(ProbabilitySpace::uniform(2), Market::identity_securities(2), rule, c).unwrap()
    }

    #[test]
    fn payoffs_and_replication() {
        let m = Market::new(
            ProbabilitySpace::uniform(2),
            vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            PricingRule::Linear(vec![1.0, 0.0]),
            ConstraintSet::Unconstrained,
        )
        .unwrap();
        assert_eq!(m.portfolio_payoff(&[1.0, 1.0]).unwrap(), vec![2.0, 0.0]);
        let x = m.replicating_portfolio(&[2.0, 0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        let single = Market::new(ProbabilitySpace::uniform(2), vec![vec![1.0, 1.0]], PricingRule::Linear(vec![1.0]), ConstraintSet::Unconstrained).unwrap();
        assert!(single.replicating_portfolio(&[1.0, 2.0]).is_none());
        assert_eq!(single.pi(&[1.0, 2.0]), Err(Error::NotReplicable));
    }

    #[test]
    fn rejects_redundant_securities_and_bad_probabilities() {
        let err = Market::new(
            ProbabilitySpace::uniform(2),
            vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            PricingRule::Linear(vec![1.0, 2.0]),
            ConstraintSet::Unconstrained,
        );
        assert!(matches!(err, Err(Error::RankDeficient { rank: 1, .. })));
        assert!(ProbabilitySpace::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilitySpace::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn proportional_and_separable_prices() {
        let r = PricingRule::Proportional { buy: vec![2.0], sell: vec![1.0] };
        assert_eq!(r.price(&[-3.0]), -3.0);
        assert_eq!(r.price(&[3.0]), 6.0);
        let buy = Curve { knots: vec![1.0], slopes: vec![1.0, 2.0], cap: Some(3.0) };
        let sell = Curve { knots: vec![2.0], slopes: vec![0.5, 0.25], cap: None };
        let r = PricingRule::ConvexSeparable { buy: vec![buy], sell: vec![sell] };
        assert_eq!(r.price(&[2.0]), 3.0);
        assert_eq!(r.price(&[4.0]), f64::INFINITY);
        assert_eq!(r.price(&[-4.0]), -1.5);
        assert_eq!(r.recession_price(&[1.0]), f64::INFINITY);
        assert_eq!(r.recession_price(&[-1.0]), -0.25);
    }

    #[test]
    fn numeric_recession_of_exponential_rule() {
        let m = identity(PricingRule::GeneralConvex(parse("exp(x1)-1").unwrap()), ConstraintSet::Unconstrained);
        assert_eq!(m.pi_recession(&[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(m.pi_recession(&[-1.0, 0.0]).unwrap().abs() <= 1e-7);
    }

    #[test]
    fn halfspace_recession_membership() {
        let m = identity(PricingRule::Linear(vec![1.0, 1.0]), ConstraintSet::Halfspaces(vec![(vec![1.0, 0.0], 1.0)]));
        assert!(!m.in_m(&[2.0, -2.0], MEMBER_TOL));
        assert!(m.in_m_recession(&[-1.0, 5.0], MEMBER_TOL));
        assert!(!m.in_m_recession(&[1.0, 0.0], MEMBER_TOL));
    }

    #[test]
    fn extended_subtraction_convention() {
        assert_eq!(ext_sub(f64::INFINITY, f64::INFINITY), f64::NEG_INFINITY);
        assert_eq!(ext_sub(1.0, f64::INFINITY), f64::NEG_INFINITY);
        assert_eq!(ext_sub(f64::INFINITY, 1.0), f64::INFINITY);
    }
}
