//! Good deals, scalable good deals and strong scalable good deals.

use crate::acceptance::{AcceptanceSet, View};
use crate::error::Result;
use crate::model::{Market, Payoff};
use crate::program::{add_market, program, MarketView};
use crate::solver::{self, Cmp, ConvexProgram, Status};
use rayon::prelude::*;
use serde::Serialize;

/// Margin above which an open condition counts as strictly satisfied.
pub const MARGIN_TOL: f64 = 1e-7;
/// Margin threshold on the cutting-plane path, where a constraint slack of
/// `CP` order lets curved boundaries admit spurious excursions of roughly
/// its square root.
pub const NL_MARGIN_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DealKind {
    None,
    GoodDeal,
    ScalableGoodDeal,
    StrongScalableGoodDeal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodDealReport {
    pub kind: DealKind,
    pub witness: Option<Payoff>,
    /// Max-norm of the witness within the unit box.
    #[serde(serialize_with = "crate::report::ext_real")]
    pub margin: f64,
    /// Basis of the lineality space of `N` (strong scan only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lineality: Vec<Payoff>,
}

impl GoodDealReport {
    fn none(margin: f64) -> Self {
        GoodDealReport { kind: DealKind::None, witness: None, margin, lineality: Vec::new() }
    }
}

/// Which sufficient condition rules out scalable good deals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoScalableCondition {
    CondI,
    CondII,
    CondIII,
    Inconclusive,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scope {
    Set,
    Recession,
}

/// `{Z ∈ M ∩ A : π(Z) ≤ 0}` (or its recession analogue) over payoff
/// variables boxed to `[−1, 1]`.
fn deal_program(m: &Market, a: Option<&AcceptanceSet>, scope: Scope) -> Result<(ConvexProgram, Vec<usize>)> {
    let mut p = program();
    let z = add_member(&mut p, m, a, scope)?;
    for &v in &z {
        p.lp.lower[v] = -1.0;
        p.lp.upper[v] = 1.0;
    }
    Ok((p, z))
}

fn add_member(p: &mut ConvexProgram, m: &Market, a: Option<&AcceptanceSet>, scope: Scope) -> Result<Vec<usize>> {
    let (mv, view) = match scope {
        Scope::Set => (add_market(p, m, MarketView::Set)?, View::Set),
        Scope::Recession => (add_market(p, m, MarketView::Recession)?, View::Recession),
    };
    p.lp.upper[mv.cost] = 0.0;
    if let Some(a) = a {
        a.embed(m.probs(), p, &mv.z, view)?;
    }
    Ok(mv.z)
}

/// Adds a second copy constrained to `−z`.
fn add_mirror(p: &mut ConvexProgram, m: &Market, a: Option<&AcceptanceSet>, scope: Scope, z: &[usize]) -> Result<()> {
    let y = add_member(p, m, a, scope)?;
    for (&zi, &yi) in z.iter().zip(&y) {
        p.add_row(vec![(zi, 1.0), (yi, 1.0)], Cmp::Eq, 0.0);
    }
    Ok(())
}

fn extreme(base: &ConvexProgram, var: usize, sign: f64) -> f64 {
    let mut p = base.clone();
    p.lp.objective[var] = -sign;
    let r = solver::solve(&p, 1.0);
    match r.status {
        Status::Optimal | Status::ToleranceReached => -r.value,
        Status::Unbounded => f64::INFINITY,
        Status::Infeasible => f64::NEG_INFINITY,
    }
}

fn tidy(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| if x.abs() < 1e-10 { 0.0 } else { x }).collect()
}

/// Largest coordinate excursion over the program, scanning `+e₁..+eₙ`
/// then `−e₁..−eₙ`, followed by an l1-minimal witness at that margin.
fn max_margin(base: &ConvexProgram, z: &[usize]) -> (f64, Option<Payoff>) {
    let n = z.len();
    let dirs: Vec<(usize, f64)> = [1.0, -1.0].iter().flat_map(|&s| (0..n).map(move |i| (i, s))).collect();
    let margins: Vec<f64> = dirs.par_iter().map(|&(i, s)| extreme(base, z[i], s)).collect();
    let mut best = 0usize;
    for k in 1..margins.len() {
        if margins[k] > margins[best] + 1e-9 {
            best = k;
        }
    }
    let margin = margins[best];
    let threshold = if base.is_linear() { MARGIN_TOL } else { NL_MARGIN_TOL };
    if !(margin > threshold) {
        return (margin.max(0.0), None);
    }
    let (i, s) = dirs[best];
    let mut p = base.clone();
    let slack = if base.is_linear() { 0.0 } else { 1e-9 };
    p.add_row(vec![(z[i], s)], Cmp::Ge, margin - slack);
    for &v in z {
        let t = p.add_var(0.0, f64::INFINITY, 1.0, true);
        p.add_row(vec![(t, 1.0), (v, -1.0)], Cmp::Ge, 0.0);
        p.add_row(vec![(t, 1.0), (v, 1.0)], Cmp::Ge, 0.0);
    }
    let r = solver::solve(&p, 1.0);
    let pt = if matches!(r.status, Status::Optimal | Status::ToleranceReached) { r.point } else { Vec::new() };
    if pt.is_empty() {
        let mut q = base.clone();
        q.lp.objective[z[i]] = -s;
        let r = solver::solve(&q, 1.0);
        return (margin, Some(tidy(z.iter().map(|&v| r.point[v]).collect())));
    }
    (margin, Some(tidy(z.iter().map(|&v| pt[v]).collect())))
}

fn scan(m: &Market, a: &AcceptanceSet, scope: Scope, kind: DealKind) -> Result<GoodDealReport> {
    let (p, z) = deal_program(m, Some(a), scope)?;
    let (margin, witness) = max_margin(&p, &z);
    Ok(match witness {
        Some(w) => GoodDealReport { kind, witness: Some(w), margin, lineality: Vec::new() },
        None => GoodDealReport::none(margin),
    })
}

/// Searches for `X ∈ A ∩ M \ {0}` with `π(X) ≤ 0`.
pub fn find_good_deal(m: &Market, a: &AcceptanceSet) -> Result<GoodDealReport> {
    scan(m, a, Scope::Set, DealKind::GoodDeal)
}

/// Searches for `X ∈ A^∞ ∩ M^∞ \ {0}` with `π^∞(X) ≤ 0`.
pub fn find_scalable_good_deal(m: &Market, a: &AcceptanceSet) -> Result<GoodDealReport> {
    scan(m, a, Scope::Recession, DealKind::ScalableGoodDeal)
}

/// Decides whether `N = A^∞ ∩ {X ∈ M^∞ : π^∞(X) ≤ 0}` is a vector space.
/// Builds a basis of `N ∩ (−N)` and then looks for a nonzero element of
/// `N` orthogonal to it.
pub fn has_strong_scalable(m: &Market, a: &AcceptanceSet) -> Result<GoodDealReport> {
    let n = m.n_states();
    let mut basis: Vec<Payoff> = Vec::new();
    while basis.len() < n {
        let (mut p, z) = deal_program(m, Some(a), Scope::Recession)?;
        add_mirror(&mut p, m, Some(a), Scope::Recession, &z)?;
        orthogonal_to(&mut p, &z, &basis);
        match max_margin(&p, &z).1 {
            Some(w) => basis.push(w),
            None => break,
        }
    }
    let (mut p, z) = deal_program(m, Some(a), Scope::Recession)?;
    orthogonal_to(&mut p, &z, &basis);
    let (margin, witness) = max_margin(&p, &z);
    Ok(match witness {
        Some(w) => GoodDealReport { kind: DealKind::StrongScalableGoodDeal, witness: Some(w), margin, lineality: basis },
        None => GoodDealReport { kind: DealKind::None, witness: None, margin, lineality: basis },
    })
}

fn orthogonal_to(p: &mut ConvexProgram, z: &[usize], basis: &[Payoff]) {
    for b in basis {
        let coefs = z.iter().zip(b).filter(|(_, c)| **c != 0.0).map(|(&v, &c)| (v, c)).collect();
        p.add_row(coefs, Cmp::Eq, 0.0);
    }
}

/// Checks, in order, `M^∞ = {0}`; `A^∞ = L⁰₊` without scalable arbitrage;
/// `M^∞ ⊂ L⁰₊` without scalable arbitrage.
pub fn sufficient_no_scalable(m: &Market, a: &AcceptanceSet) -> Result<NoScalableCondition> {
    let n = m.n_states();
    let mut rec = program();
    let mv = add_market(&mut rec, m, MarketView::Recession)?;
    for &v in &mv.z {
        rec.lp.lower[v] = -1.0;
        rec.lp.upper[v] = 1.0;
    }
    let ext: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|w| (extreme(&rec, mv.z[w], -1.0), extreme(&rec, mv.z[w], 1.0)))
        .collect();
    if ext.iter().all(|&(lo, hi)| lo <= 1e-9 && hi <= 1e-9) {
        return Ok(NoScalableCondition::CondIII);
    }
    let mut no_arbitrage = None;
    let mut arbitrage_free = || -> Result<bool> {
        if no_arbitrage.is_none() {
            no_arbitrage = Some(find_scalable_good_deal(m, &AcceptanceSet::PositiveCone)?.kind == DealKind::None);
        }
        Ok(no_arbitrage.unwrap())
    };
    if a.recession_is_orthant(m.probs()) && arbitrage_free()? {
        return Ok(NoScalableCondition::CondI);
    }
    if ext.iter().all(|&(lo, _)| lo <= 1e-9) && arbitrage_free()? {
        return Ok(NoScalableCondition::CondII);
    }
    Ok(NoScalableCondition::Inconclusive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::model::{ConstraintSet, PricingRule, ProbabilitySpace};

    fn market(rule: PricingRule, c: ConstraintSet) -> Market {
        Market::new(ProbabilitySpace::uniform(2), Market::identity_securities(2), rule, c).unwrap()
    }

    fn wedge() -> AcceptanceSet {
        AcceptanceSet::Scripted { constraints: vec![parse("max(-s1, 0) - s2").unwrap()], generators: None }
    }

    #[test]
    fn frictionless_complete_market_has_no_arbitrage() {
        let m = market(PricingRule::Linear(vec![0.5, 0.5]), ConstraintSet::Unconstrained);
        assert_eq!(find_good_deal(&m, &AcceptanceSet::PositiveCone).unwrap().kind, DealKind::None);
        assert_eq!(find_scalable_good_deal(&m, &AcceptanceSet::PositiveCone).unwrap().kind, DealKind::None);
    }

    #[test]
    fn negative_price_is_a_good_deal() {
        let m = market(PricingRule::Linear(vec![-1.0, 1.0]), ConstraintSet::Unconstrained);
        let r = find_good_deal(&m, &AcceptanceSet::PositiveCone).unwrap();
        assert_eq!(r.kind, DealKind::GoodDeal);
        assert_eq!(r.witness.unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn boxed_portfolios_have_trivial_recession() {
        let c = ConstraintSet::Box { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] };
        let m = market(PricingRule::Linear(vec![-1.0, 1.0]), c);
        assert_eq!(sufficient_no_scalable(&m, &wedge()).unwrap(), NoScalableCondition::CondIII);
        assert_eq!(find_scalable_good_deal(&m, &wedge()).unwrap().kind, DealKind::None);
    }

    #[test]
    fn line_in_n_is_reported_as_lineality() {
        let m = Market::new(
            ProbabilitySpace::uniform(2),
            vec![vec![0.0, 1.0]],
            PricingRule::Linear(vec![0.0]),
            ConstraintSet::Unconstrained,
        )
        .unwrap();
        let r = has_strong_scalable(&m, &AcceptanceSet::Scenarios { event: vec![0] }).unwrap();
        assert_eq!(r.kind, DealKind::None);
        assert_eq!(r.lineality, vec![vec![0.0, 1.0]]);
    }
}
