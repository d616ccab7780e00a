//! Acceptance sets: closed convex sets of payoffs containing the positive
//! cone, used as tolerance for replication errors.

pub mod cone;
pub mod poly;

use crate::error::{Error, Result};
use crate::expr::{convexity_spot_check, EvalPoint, Expr};
use crate::linalg::dot;
use crate::program::add_expr_le;
use crate::solver::{self, Cmp, ConvexProgram, LinearProgram, Status};
pub use poly::{PVar, PolyRep, PolyRow, View};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest state count for which cone bases are enumerated.
pub const MAX_CONE_DIM: usize = 6;

/// Concave increasing piecewise-linear utility with `u(0) = 0`.
///
/// `slopes[k]` applies between `knots[k-1]` and `knots[k]`; the first and
/// last slopes extend to `∓∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct Utility {
    pub knots: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl Utility {
    fn validate(&self) -> Result<()> {
        if self.slopes.len() != self.knots.len() + 1 {
            return Err(Error::Invalid("utility needs one more slope than knots".into()));
        }
        if self.knots.windows(2).any(|w| !(w[1] > w[0])) || self.knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Invalid("utility knots must be finite and increasing".into()));
        }
        if self.slopes.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Invalid("utility slopes must be finite and nonnegative".into()));
        }
        if self.slopes.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Invalid("utility must be concave".into()));
        }
        if self.slopes[0] <= 0.0 {
            return Err(Error::Invalid("utility must be increasing".into()));
        }
        Ok(())
    }

    /// Affine pieces `(intercept, slope)` whose minimum is `u`.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        self.slopes
            .iter()
            .enumerate()
            .map(|(k, &b)| {
                let t = if k < self.knots.len() { self.knots[k] } else { *self.knots.last().unwrap_or(&0.0) };
                (self.value(t) - b * t, b)
            })
            .collect()
    }

    pub fn value(&self, t: f64) -> f64 {
        let (lo, hi, sign) = if t >= 0.0 { (0.0, t, 1.0) } else { (t, 0.0, -1.0) };
        let mut pts = vec![lo];
        pts.extend(self.knots.iter().copied().filter(|&k| k > lo && k < hi));
        pts.push(hi);
        let acc: f64 = pts
            .windows(2)
            .map(|w| self.slopes[self.knots.partition_point(|&k| k <= 0.5 * (w[0] + w[1]))] * (w[1] - w[0]))
            .sum();
        sign * acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AcceptanceSet {
    PositiveCone,
    ExpectedShortfall { alpha: f64 },
    GainLoss { alpha: f64 },
    /// Payoffs nonnegative on the listed outcomes (zero-based).
    Scenarios { event: Vec<usize> },
    /// `E[qᵢX] ≥ floorᵢ` for densities `qᵢ`.
    TestProbabilities { tests: Vec<(Vec<f64>, f64)> },
    UtilityPwl { utility: Utility, floor: f64 },
    /// Second-order stochastic dominance over a benchmark payoff.
    Ssd { benchmark: Vec<f64> },
    /// `gⱼ(X) ≤ 0` for scripted convex `gⱼ` over `s1..sn`, with optional generators of `K(A)`.
    Scripted { constraints: Vec<Expr>, generators: Option<Vec<Vec<f64>>> },
    /// The closed cone spanned by `generators` and the positive cone.
    Cone { generators: Vec<Vec<f64>> },
}

/// Finite generator list of `K(A)`, or a marker that none is available.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeBase {
    Generators(Vec<Vec<f64>>),
    NotPolyhedral,
}

/// `ES_α(X) = min_t { t + E[(−X−t)⁺]/α }`, minimized over the breakpoints `t = −Xᵢ`.
pub fn expected_shortfall(alpha: f64, x: &[f64], probs: &[f64]) -> f64 {
    x.iter()
        .map(|&xi| {
            let t = -xi;
            t + x.iter().zip(probs).map(|(&v, p)| p * (-v - t).max(0.0)).sum::<f64>() / alpha
        })
        .fold(f64::INFINITY, f64::min)
}

/// The α-expectile: root of `t ↦ αE[(X−t)⁺] − (1−α)E[(t−X)⁺]`, by bisection to `1e-10`.
pub fn expectile(alpha: f64, x: &[f64], probs: &[f64]) -> f64 {
    let f = |t: f64| {
        x.iter().zip(probs).map(|(&v, p)| p * (alpha * (v - t).max(0.0) - (1.0 - alpha) * (t - v).max(0.0))).sum::<f64>()
    };
    let mut lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return lo;
    }
    while hi - lo > 1e-10 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn units(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

impl AcceptanceSet {
    fn dims(&self, n: usize) -> Result<()> {
        let check = |len: usize| if len == n { Ok(()) } else { Err(Error::Dimension { expected: n, got: len }) };
        match self {
            AcceptanceSet::TestProbabilities { tests } => tests.iter().try_for_each(|(q, _)| check(q.len())),
            AcceptanceSet::Ssd { benchmark } => check(benchmark.len()),
            AcceptanceSet::Cone { generators } => generators.iter().try_for_each(|g| {
                check(g.len())?;
                if g.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::Invalid("cone generators must be finite".into()))
                }
            }),
            AcceptanceSet::Scripted { constraints, generators } => {
                for c in constraints {
                    let (nx, ns) = c.arity();
                    if nx > 0 {
                        return Err(Error::Invalid("acceptance constraints may only use state variables".into()));
                    }
                    if ns > n {
                        return Err(Error::Dimension { expected: n, got: ns });
                    }
                }
                generators.iter().flatten().try_for_each(|g| check(g.len()))
            }
            AcceptanceSet::Scenarios { event } => {
                if event.iter().any(|&w| w >= n) {
                    return Err(Error::Invalid("scenario outcome out of range".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Checks parameters and samples the standing properties (contains 0, monotone, convex, proper).
    pub fn validate(&self, probs: &[f64]) -> Result<()> {
        let n = probs.len();
        self.dims(n)?;
        match self {
            AcceptanceSet::ExpectedShortfall { alpha } if !(*alpha > 0.0 && *alpha < 1.0) => {
                return Err(Error::Invalid("ES level must lie in (0,1)".into()))
            }
            AcceptanceSet::GainLoss { alpha } if !(*alpha > 0.0 && *alpha <= 0.5) => {
                return Err(Error::Invalid("gain-loss level must lie in (0,1/2]".into()))
            }
            AcceptanceSet::Scenarios { event } if event.is_empty() => {
                return Err(Error::Invalid("scenario event must be nonempty".into()))
            }
            AcceptanceSet::TestProbabilities { tests } => {
                if tests.is_empty() {
                    return Err(Error::Invalid("at least one test probability is required".into()));
                }
                for (q, floor) in tests {
                    if q.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || (dot(q, probs) - 1.0).abs() > 1e-9 {
                        return Err(Error::Invalid("test densities must be nonnegative with unit mean".into()));
                    }
                    if !(*floor <= 0.0) {
                        return Err(Error::Invalid("test floors must be nonpositive".into()));
                    }
                }
            }
            AcceptanceSet::UtilityPwl { utility, floor } => {
                utility.validate()?;
                if !(*floor <= 0.0) {
                    return Err(Error::Invalid("utility floor must be nonpositive".into()));
                }
            }
            AcceptanceSet::Ssd { benchmark } => {
                if benchmark.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Invalid("benchmark must be finite".into()));
                }
                if !self.contains(probs, &vec![0.0; n], 1e-12) {
                    return Err(Error::Invalid("zero payoff must dominate the benchmark".into()));
                }
            }
            AcceptanceSet::Scripted { constraints, .. } => {
                if constraints.is_empty() {
                    return Err(Error::Invalid("scripted acceptance set needs constraints".into()));
                }
                for c in constraints {
                    let v = c.eval(&EvalPoint { x: &[], s: &vec![0.0; n], probs });
                    if !matches!(v, Ok(v) if v <= 1e-9) {
                        return Err(Error::Invalid(format!("constraint `{c}` excludes the zero payoff")));
                    }
                    let all = |_: &[f64]| true;
                    let domain = |z: &[f64]| c.eval(&EvalPoint { x: &[], s: z, probs }).is_ok();
                    let dom: &dyn Fn(&[f64]) -> bool = if c.epigraph(probs).is_some() { &all } else { &domain };
                    convexity_spot_check(c, 0, n, probs, dom, 17)?;
                }
                self.sample_monotonicity(probs)?;
            }
            _ => {}
        }
        if self.non_member_witness(probs).is_none() {
            return Err(Error::Invalid("acceptance set must be a strict subset of the payoff space".into()));
        }
        Ok(())
    }

    fn sample_monotonicity(&self, probs: &[f64]) -> Result<()> {
        let n = probs.len();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut checked = 0;
        for _ in 0..20_000 {
            if checked >= 200 {
                break;
            }
            let scale = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
            if !self.contains(probs, &x, 1e-9) {
                continue;
            }
            checked += 1;
            for i in 0..n {
                let mut y = x.clone();
                y[i] += 1.0;
                if !self.contains(probs, &y, 1e-9) {
                    return Err(Error::Invalid(format!("acceptance set is not monotone at {x:?}")));
                }
            }
        }
        Ok(())
    }

    /// A payoff outside the set: the first of `−c·1`, `c = 1, 10, …, 10⁶`, that is rejected.
    pub fn non_member_witness(&self, probs: &[f64]) -> Option<Vec<f64>> {
        (0..=6).map(|k| vec![-(10f64.powi(k)); probs.len()]).find(|x| !self.contains(probs, x, 1e-9))
    }

    /// Membership within `tol` on the defining functionals.
    pub fn contains(&self, probs: &[f64], x: &[f64], tol: f64) -> bool {
        match self {
            AcceptanceSet::PositiveCone => x.iter().all(|&v| v >= -tol),
            AcceptanceSet::ExpectedShortfall { alpha } => expected_shortfall(*alpha, x, probs) <= tol,
            AcceptanceSet::GainLoss { alpha } => {
                let gains: f64 = x.iter().zip(probs).map(|(v, p)| p * v.max(0.0)).sum();
                let losses: f64 = x.iter().zip(probs).map(|(v, p)| p * (-v).max(0.0)).sum();
                alpha * gains - (1.0 - alpha) * losses >= -tol
            }
            AcceptanceSet::Scenarios { event } => event.iter().all(|&w| x[w] >= -tol),
            AcceptanceSet::TestProbabilities { tests } => tests.iter().all(|(q, floor)| {
                x.iter().zip(q).zip(probs).map(|((v, q), p)| p * q * v).sum::<f64>() >= floor - tol
            }),
            AcceptanceSet::UtilityPwl { utility, floor } => {
                x.iter().zip(probs).map(|(&v, p)| p * utility.value(v)).sum::<f64>() >= floor - tol
            }
            AcceptanceSet::Ssd { benchmark } => support_points(benchmark).iter().all(|&t| {
                let lhs: f64 = x.iter().zip(probs).map(|(v, p)| p * (t - v).max(0.0)).sum();
                let rhs: f64 = benchmark.iter().zip(probs).map(|(z, p)| p * (t - z).max(0.0)).sum();
                lhs <= rhs + tol
            }),
            AcceptanceSet::Scripted { constraints, .. } => constraints.iter().all(|c| {
                matches!(c.eval(&EvalPoint { x: &[], s: x, probs }), Ok(v) if v <= tol)
            }),
            AcceptanceSet::Cone { generators } => cone::in_cone(generators, x, true, tol),
        }
    }

    /// Whether `A` is a cone.
    pub fn is_conic(&self, probs: &[f64]) -> bool {
        match self {
            AcceptanceSet::Scripted { constraints, .. } => match self.poly(probs) {
                Some(rep) => rep.is_conic(),
                None => constraints.iter().all(|c| c.is_positively_homogeneous()),
            },
            _ => self.poly(probs).map_or(false, |rep| rep.is_conic()),
        }
    }

    /// Lifted polyhedral representation; `None` for scripted sets with smooth pieces.
    pub fn poly(&self, probs: &[f64]) -> Option<PolyRep> {
        let n = probs.len();
        let mut rep = PolyRep::new(n);
        match self {
            AcceptanceSet::PositiveCone => {
                for i in 0..n {
                    rep.row(vec![(PVar::X(i), 1.0)], Cmp::Ge, 0.0);
                }
            }
            AcceptanceSet::ExpectedShortfall { alpha } => {
                let t = rep.aux();
                let mut total = vec![(t, -1.0)];
                for (i, p) in probs.iter().enumerate() {
                    let w = rep.aux();
                    rep.row(vec![(w, 1.0), (PVar::X(i), 1.0), (t, 1.0)], Cmp::Ge, 0.0);
                    rep.row(vec![(w, 1.0)], Cmp::Ge, 0.0);
                    total.push((w, -p / alpha));
                }
                rep.row(total, Cmp::Ge, 0.0);
            }
            AcceptanceSet::GainLoss { alpha } => {
                let mut total = Vec::new();
                for (i, p) in probs.iter().enumerate() {
                    let w = rep.aux();
                    rep.row(vec![(w, 1.0), (PVar::X(i), 1.0)], Cmp::Ge, 0.0);
                    rep.row(vec![(w, 1.0)], Cmp::Ge, 0.0);
                    total.push((PVar::X(i), alpha * p));
                    total.push((w, -(1.0 - 2.0 * alpha) * p));
                }
                rep.row(total, Cmp::Ge, 0.0);
            }
            AcceptanceSet::Scenarios { event } => {
                for &w in event {
                    rep.row(vec![(PVar::X(w), 1.0)], Cmp::Ge, 0.0);
                }
            }
            AcceptanceSet::TestProbabilities { tests } => {
                for (q, floor) in tests {
                    let coefs = (0..n).map(|i| (PVar::X(i), probs[i] * q[i])).filter(|c| c.1 != 0.0).collect();
                    rep.row(coefs, Cmp::Ge, *floor);
                }
            }
            AcceptanceSet::UtilityPwl { utility, floor } => {
                let pieces = utility.pieces();
                let mut total = Vec::new();
                for (i, p) in probs.iter().enumerate() {
                    let v = rep.aux();
                    for &(a, b) in &pieces {
                        rep.row(vec![(PVar::X(i), b), (v, -1.0)], Cmp::Ge, -a);
                    }
                    total.push((v, *p));
                }
                rep.row(total, Cmp::Ge, *floor);
            }
            AcceptanceSet::Ssd { benchmark } => {
                for t in support_points(benchmark) {
                    let bound: f64 = benchmark.iter().zip(probs).map(|(z, p)| p * (t - z).max(0.0)).sum();
                    let mut total = Vec::new();
                    for (i, p) in probs.iter().enumerate() {
                        let w = rep.aux();
                        rep.row(vec![(w, 1.0), (PVar::X(i), 1.0)], Cmp::Ge, t);
                        rep.row(vec![(w, 1.0)], Cmp::Ge, 0.0);
                        total.push((w, -p));
                    }
                    rep.row(total, Cmp::Ge, -bound);
                }
            }
            AcceptanceSet::Scripted { constraints, .. } => {
                for c in constraints {
                    if !rep.add_expr_le0(c, probs) {
                        return None;
                    }
                }
            }
            AcceptanceSet::Cone { generators } => {
                let lam: Vec<PVar> = generators.iter().map(|_| rep.aux()).collect();
                for &l in &lam {
                    rep.row(vec![(l, 1.0)], Cmp::Ge, 0.0);
                }
                for i in 0..n {
                    let mut coefs = vec![(PVar::X(i), 1.0)];
                    coefs.extend(lam.iter().zip(generators).filter(|(_, g)| g[i] != 0.0).map(|(&l, g)| (l, -g[i])));
                    rep.row(coefs, Cmp::Ge, 0.0);
                }
            }
        }
        Some(rep)
    }

    /// Adds the requested view of `A` over payoff variables `w` to a program.
    pub fn embed(&self, probs: &[f64], p: &mut ConvexProgram, w: &[usize], view: View) -> Result<()> {
        if let Some(rep) = self.poly(probs) {
            rep.embed(p, w, view);
            return Ok(());
        }
        let AcceptanceSet::Scripted { constraints, generators } = self else {
            unreachable!("only scripted sets lack a polyhedral form")
        };
        let n = probs.len();
        match view {
            View::Set => {
                for c in constraints {
                    add_expr_le(p, c, probs, &[], w, &[], 0.0);
                }
            }
            View::Recession => {
                for c in constraints {
                    let r = c.recession(n).ok_or(Error::NotPolyhedral)?;
                    add_expr_le(p, &r.value, probs, &[], w, &[], 0.0);
                    for d in &r.domain {
                        add_expr_le(p, d, probs, &[], w, &[], 0.0);
                    }
                }
            }
            View::Conified(_) => {
                let gens = generators.as_ref().ok_or(Error::NotPolyhedral)?;
                let lam: Vec<usize> = gens.iter().map(|_| p.add_var(0.0, f64::INFINITY, 0.0, true)).collect();
                for i in 0..n {
                    let mut coefs = vec![(w[i], 1.0)];
                    coefs.extend(lam.iter().zip(gens).map(|(&l, g)| (l, -g[i])));
                    p.add_row(coefs, Cmp::Ge, 0.0);
                }
            }
        }
        Ok(())
    }

    /// `γ_A(Y) = inf_{X∈A} E[XY]`; `−∞` when unbounded below.
    pub fn support(&self, probs: &[f64], y: &[f64]) -> f64 {
        let mut p = ConvexProgram::new(LinearProgram::new(0));
        let w: Vec<usize> = probs.iter().zip(y).map(|(p_i, y_i)| p.add_var(f64::NEG_INFINITY, f64::INFINITY, p_i * y_i, true)).collect();
        if self.embed(probs, &mut p, &w, View::Set).is_err() {
            return f64::NEG_INFINITY;
        }
        let r = solver::solve(&p, 1e3);
        match r.status {
            Status::Unbounded => f64::NEG_INFINITY,
            Status::Infeasible => f64::INFINITY,
            _ => r.value.min(0.0),
        }
    }

    /// Membership in the recession cone `A^∞`. Scripted sets with smooth
    /// pieces are tested numerically through `λX ∈ A` for `λ = 1, 10, …, 10⁴`.
    pub fn in_recession(&self, probs: &[f64], x: &[f64], tol: f64) -> bool {
        match self {
            AcceptanceSet::TestProbabilities { tests } => {
                let cone = AcceptanceSet::TestProbabilities { tests: tests.iter().map(|(q, _)| (q.clone(), 0.0)).collect() };
                cone.contains(probs, x, tol)
            }
            AcceptanceSet::Ssd { .. } => x.iter().all(|&v| v >= -tol),
            AcceptanceSet::Scripted { .. } | AcceptanceSet::UtilityPwl { .. } => match self.poly(probs) {
                Some(rep) => rep.contains(x, View::Recession, tol),
                None => (0..=4).all(|k| {
                    let l = 10f64.powi(k);
                    let y: Vec<f64> = x.iter().map(|v| v * l).collect();
                    self.contains(probs, &y, tol * l)
                }),
            },
            _ => self.contains(probs, x, tol),
        }
    }

    /// Generators of `K(A)`, unit max-norm.
    pub fn cone_base(&self, probs: &[f64]) -> Result<ConeBase> {
        let n = probs.len();
        match self {
            AcceptanceSet::PositiveCone => return Ok(ConeBase::Generators(units(n))),
            AcceptanceSet::Cone { generators } => {
                let mut all = generators.clone();
                all.extend(units(n));
                return Ok(ConeBase::Generators(cone::reduce_generators(all)));
            }
            _ => {}
        }
        if let Some(rep) = self.poly(probs) {
            if n > MAX_CONE_DIM {
                return Err(Error::DimensionTooLarge(n));
            }
            return Ok(ConeBase::Generators(rep.conified_generators()));
        }
        match self {
            AcceptanceSet::Scripted { generators: Some(g), .. } => {
                let mut all = g.clone();
                all.extend(units(n));
                Ok(ConeBase::Generators(cone::reduce_generators(all)))
            }
            _ => Ok(ConeBase::NotPolyhedral),
        }
    }

    fn generators(&self, probs: &[f64]) -> Result<Vec<Vec<f64>>> {
        match self.cone_base(probs)? {
            ConeBase::Generators(g) => Ok(g),
            ConeBase::NotPolyhedral => Err(Error::NotPolyhedral),
        }
    }

    /// Membership in `K(A)`.
    pub fn conified_contains(&self, probs: &[f64], x: &[f64], tol: f64) -> Result<bool> {
        Ok(cone::in_cone(&self.generators(probs)?, x, true, tol))
    }

    /// Whether `K(A)` contains no line.
    pub fn is_pointed(&self, probs: &[f64]) -> Result<bool> {
        Ok(cone::is_pointed(&self.generators(probs)?))
    }

    /// Whether `A^∞` is exactly the positive cone.
    pub fn recession_is_orthant(&self, probs: &[f64]) -> bool {
        let n = probs.len();
        (0..n).all(|i| {
            let mut p = ConvexProgram::new(LinearProgram::new(0));
            let w: Vec<usize> = (0..n).map(|j| p.add_var(-1.0, 1.0, if i == j { 1.0 } else { 0.0 }, true)).collect();
            if self.embed(probs, &mut p, &w, View::Recession).is_err() {
                return false;
            }
            let r = solver::solve(&p, 1.0);
            r.status == Status::Optimal && r.value >= -1e-9
        })
    }
}

fn support_points(z: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = z.to_vec();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    const HALF: [f64; 2] = [0.5, 0.5];

    #[test]
    fn shortfall_and_expectile_values() {
        assert_eq!(expected_shortfall(0.5, &[-1.0, 3.0], &HALF), 1.0);
        assert_eq!(expected_shortfall(0.25, &[-1.0, 3.0], &HALF), 1.0);
        assert_eq!(expected_shortfall(0.3, &[2.5, 2.5], &HALF), -2.5);
        assert!(expectile(0.25, &[-1.0, 3.0], &HALF).abs() < 1e-9);
        assert!((expectile(0.5, &[-1.0, 3.0], &HALF) - 1.0).abs() < 1e-9);
        assert_eq!(expectile(0.2, &[4.0, 4.0], &HALF), 4.0);
    }

    #[test]
    fn family_membership() {
        let es = AcceptanceSet::ExpectedShortfall { alpha: 0.5 };
        assert!(!es.contains(&HALF, &[-1.0, 3.0], 1e-9));
        let gl = AcceptanceSet::GainLoss { alpha: 0.25 };
        assert!(gl.contains(&HALF, &[-1.0, 3.0], 1e-9));
        assert!(!gl.contains(&HALF, &[-1.0, 2.9], 1e-9));
    }

    #[test]
    fn utility_pieces_reproduce_values() {
        let u = Utility { knots: vec![-1.0, 2.0], slopes: vec![3.0, 1.0, 0.5] };
        assert_eq!(u.value(0.0), 0.0);
        assert_eq!(u.value(-2.0), -4.0);
        assert_eq!(u.value(3.0), 2.5);
        for t in [-3.0, -1.0, -0.5, 0.0, 1.0, 2.0, 5.0] {
            let m = u.pieces().iter().map(|(a, b)| a + b * t).fold(f64::INFINITY, f64::min);
            assert!((m - u.value(t)).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn support_function_cases() {
        let tp = AcceptanceSet::TestProbabilities { tests: vec![(vec![1.0, 1.0], -1.0)] };
        assert!((tp.support(&HALF, &[1.0, 1.0]) + 1.0).abs() < 1e-9);
        assert_eq!(AcceptanceSet::PositiveCone.support(&HALF, &[1.0, -1.0]), f64::NEG_INFINITY);
        assert_eq!(AcceptanceSet::PositiveCone.support(&HALF, &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn recession_membership() {
        let tp = AcceptanceSet::TestProbabilities { tests: vec![(vec![1.0, 1.0], -1.0)] };
        assert!(tp.contains(&HALF, &[-0.5, -0.5], 1e-9));
        assert!(!tp.in_recession(&HALF, &[-0.5, -0.5], 1e-9));
        let ssd = AcceptanceSet::Ssd { benchmark: vec![-2.0, 2.0] };
        assert!(ssd.in_recession(&HALF, &[1.0, 1.0], 1e-9));
        assert!(!ssd.in_recession(&HALF, &[-1e-3, 3.0], 1e-9));
    }

    #[test]
    fn cone_bases() {
        let pos = AcceptanceSet::PositiveCone.cone_base(&HALF).unwrap();
        assert_eq!(pos, ConeBase::Generators(vec![vec![1.0, 0.0], vec![0.0, 1.0]]));
        let wedge = AcceptanceSet::Scripted { constraints: vec![parse("max(-s1, 0) - s2").unwrap()], generators: None };
        assert_eq!(wedge.cone_base(&HALF).unwrap(), ConeBase::Generators(vec![vec![1.0, 0.0], vec![-1.0, 1.0]]));
        assert!(wedge.is_pointed(&HALF).unwrap());
        let smooth = AcceptanceSet::Scripted { constraints: vec![parse("exp(max(-s1, 0)) - 1 - s2").unwrap()], generators: None };
        assert_eq!(smooth.cone_base(&HALF).unwrap(), ConeBase::NotPolyhedral);
        assert_eq!(smooth.is_pointed(&HALF), Err(Error::NotPolyhedral));
    }

    #[test]
    fn validation_rejects_bad_sets() {
        assert!(AcceptanceSet::ExpectedShortfall { alpha: 1.0 }.validate(&HALF).is_err());
        assert!(AcceptanceSet::GainLoss { alpha: 0.6 }.validate(&HALF).is_err());
        let not_monotone = AcceptanceSet::Scripted { constraints: vec![parse("s1 - s2").unwrap()], generators: None };
        assert!(not_monotone.validate(&HALF).is_err());
        let concave = AcceptanceSet::Scripted { constraints: vec![parse("-s1*s1 - s2").unwrap()], generators: None };
        assert!(concave.validate(&HALF).is_err());
        let wedge = AcceptanceSet::Scripted { constraints: vec![parse("max(-s1, 0) - s2").unwrap()], generators: None };
        assert!(wedge.validate(&HALF).is_ok());
    }
}
