//! Superreplication prices and market-consistent price intervals.

use crate::acceptance::{AcceptanceSet, View};
use crate::error::{Error, Result};
use crate::gooddeal::{self, DealKind};
use crate::linalg::max_norm;
use crate::model::{Market, Payoff, Portfolio, MEMBER_TOL};
use crate::program::{add_market, program, MarketVars, MarketView};
use crate::solver::{self, Cmp, ConvexProgram, Status, CP_TOL};
use rayon::prelude::*;
use serde::Serialize;

/// Slack on the optimal value when describing the optimal face (LP path).
pub const TIE_TOL: f64 = 1e-9;
/// Face diameter below which the attainer is considered unique.
pub const FACE_TOL: f64 = 1e-7;
/// Agreement required between prices in the zero-spread check.
pub const PRICE_TOL: f64 = 1e-6;

/// Outcome of `π⁺(X) = inf{π(Z) : Z ∈ M, Z − X ∈ A}`.
#[derive(Debug, Clone, Serialize)]
pub struct Superreplication {
    #[serde(serialize_with = "crate::report::ext_real")]
    pub value: f64,
    pub status: Status,
    pub attained: bool,
    pub attainer: Option<Payoff>,
    pub portfolio: Option<Portfolio>,
    pub iterations: usize,
}

/// `MCP(X) = (−∞, sup]` or `(−∞, sup)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCPInterval {
    #[serde(serialize_with = "crate::report::ext_real")]
    pub sup: f64,
    pub right_closed: bool,
    #[serde(rename = "attainer")]
    pub attained_by: Option<Payoff>,
    #[serde(rename = "unique")]
    pub unique_attainer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSpreadReport {
    #[serde(serialize_with = "crate::report::ext_real")]
    pub price: f64,
    #[serde(serialize_with = "crate::report::ext_real")]
    pub spread: f64,
    pub no_good_deal: bool,
    pub hypotheses_hold: bool,
    pub interval: Option<MCPInterval>,
}

pub(crate) fn check_payoff(m: &Market, x: &[f64]) -> Result<()> {
    if x.len() != m.n_states() {
        return Err(Error::Dimension { expected: m.n_states(), got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("payoff must be finite".into()));
    }
    Ok(())
}

pub(crate) fn box_hint(x: &[f64]) -> f64 {
    2.0 * max_norm(x).max(1.0)
}

/// `{Z ∈ M, Z − X ∈ A}` with the cost variable bounding `π(Z)`.
fn superhedge_program(m: &Market, a: &AcceptanceSet, x: &[f64]) -> Result<(ConvexProgram, MarketVars)> {
    let mut p = program();
    let mv = add_market(&mut p, m, MarketView::Set)?;
    let w: Vec<usize> = mv
        .z
        .iter()
        .zip(x)
        .map(|(&z, &xi)| {
            let w = p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0, true);
            p.add_row(vec![(w, 1.0), (z, -1.0)], Cmp::Eq, -xi);
            w
        })
        .collect();
    a.embed(m.probs(), &mut p, &w, View::Set)?;
    Ok((p, mv))
}

/// `π⁺(X)`. Errors with `InfeasibleAcceptability` when no admissible
/// payoff dominates `X` up to acceptability.
pub fn superreplication_price(m: &Market, a: &AcceptanceSet, x: &[f64]) -> Result<Superreplication> {
    check_payoff(m, x)?;
    let (mut p, mv) = superhedge_program(m, a, x)?;
    p.lp.objective[mv.cost] = 1.0;
    let r = solver::solve(&p, box_hint(x));
    match r.status {
        Status::Infeasible => Err(Error::InfeasibleAcceptability),
        Status::Unbounded => Ok(Superreplication {
            value: f64::NEG_INFINITY,
            status: r.status,
            attained: false,
            attainer: None,
            portfolio: None,
            iterations: r.iterations,
        }),
        Status::Optimal | Status::ToleranceReached => {
            let pick = |idx: &[usize]| r.optimizer.as_ref().map(|o| idx.iter().map(|&j| o[j]).collect::<Vec<_>>());
            Ok(Superreplication {
                value: r.value,
                status: r.status,
                attained: r.attained,
                attainer: pick(&mv.z),
                portfolio: pick(&mv.x),
                iterations: r.iterations,
            })
        }
    }
}

/// Whether `(X, m) ∈ C`: some `Z ∈ M` with `Z − X ∈ A` has `π(Z) ≤ −m`.
pub fn in_c(m: &Market, a: &AcceptanceSet, x: &[f64], level: f64) -> Result<bool> {
    check_payoff(m, x)?;
    let (mut p, mv) = superhedge_program(m, a, x)?;
    p.lp.lower[mv.cost] = -level - 1.0;
    p.lp.objective[mv.cost] = 1.0;
    let r = solver::solve(&p, box_hint(x));
    Ok(matches!(r.status, Status::Optimal | Status::ToleranceReached) && r.value <= -level + TIE_TOL)
}

fn tie(p: &ConvexProgram) -> f64 {
    if p.is_linear() {
        TIE_TOL
    } else {
        CP_TOL
    }
}

/// Coordinate ranges `(min, max)` of the payoffs in the optimal face.
fn face_ranges(m: &Market, a: &AcceptanceSet, x: &[f64], value: f64) -> Result<Vec<(f64, f64)>> {
    let (mut base, mv) = superhedge_program(m, a, x)?;
    let t = tie(&base);
    base.add_row(vec![(mv.cost, 1.0)], Cmp::Le, value + t * (1.0 + value.abs()));
    let hint = box_hint(x);
    let jobs: Vec<(usize, f64)> = (0..m.n_states()).flat_map(|w| [(w, 1.0), (w, -1.0)]).collect();
    let ends: Vec<f64> = jobs
        .par_iter()
        .map(|&(w, s)| {
            let mut p = base.clone();
            p.lp.objective[mv.z[w]] = -s;
            let r = solver::solve(&p, hint);
            match r.status {
                Status::Unbounded => s * f64::INFINITY,
                Status::Infeasible => x[w],
                _ => -s * r.value,
            }
        })
        .collect();
    Ok(ends.chunks(2).map(|c| (c[1], c[0])).collect())
}

/// The market-consistent price interval of `X`.
pub fn mcp_interval(m: &Market, a: &AcceptanceSet, x: &[f64]) -> Result<MCPInterval> {
    let sr = match superreplication_price(m, a, x) {
        Err(Error::InfeasibleAcceptability) => {
            return Ok(MCPInterval { sup: f64::INFINITY, right_closed: false, attained_by: None, unique_attainer: false })
        }
        r => r?,
    };
    if sr.value == f64::NEG_INFINITY {
        return Err(Error::NonFinitePrice);
    }
    if !sr.attained {
        return Ok(MCPInterval { sup: sr.value, right_closed: true, attained_by: None, unique_attainer: false });
    }
    let ranges = face_ranges(m, a, x, sr.value)?;
    let deviation = ranges.iter().zip(x).fold(0.0f64, |d, (&(lo, hi), &xi)| d.max(hi - xi).max(xi - lo));
    let diameter = ranges.iter().fold(0.0f64, |d, &(lo, hi)| d.max(hi - lo));
    let right_closed = deviation <= FACE_TOL && m.in_m(x, MEMBER_TOL);
    Ok(MCPInterval {
        sup: sr.value,
        right_closed,
        attained_by: if right_closed { Some(x.to_vec()) } else { sr.attainer },
        unique_attainer: diameter <= FACE_TOL,
    })
}

/// Whether `Z` belongs to the optimal face `{Z ∈ M : Z − X ∈ A, π(Z) = π⁺(X)}`.
pub fn on_optimal_face(m: &Market, a: &AcceptanceSet, x: &[f64], z: &[f64]) -> Result<bool> {
    check_payoff(m, z)?;
    let sr = superreplication_price(m, a, x)?;
    if !sr.value.is_finite() || !m.in_m(z, MEMBER_TOL) {
        return Ok(false);
    }
    let diff: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
    if !a.contains(m.probs(), &diff, MEMBER_TOL) {
        return Ok(false);
    }
    let t = tie(&superhedge_program(m, a, x)?.0);
    Ok(m.pi(z)? <= sr.value + t * (1.0 + sr.value.abs()))
}

/// For `X ∈ M ∩ (−M)` without good deals and with zero bid-ask spread,
/// checks that `π(X) = π⁺(X)` and that the interval is right-closed.
pub fn zero_spread_consistency(m: &Market, a: &AcceptanceSet, x: &[f64]) -> Result<ZeroSpreadReport> {
    check_payoff(m, x)?;
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    if !(m.in_m(x, MEMBER_TOL) && m.in_m(&neg, MEMBER_TOL)) {
        return Err(Error::NotTwoSidedlyAttainable);
    }
    let price = m.pi(x)?;
    let spread = m.pi(&neg)? + price;
    let no_good_deal = gooddeal::find_good_deal(m, a)?.kind == DealKind::None;
    let hypotheses_hold = no_good_deal && spread.abs() <= TIE_TOL;
    let mut report = ZeroSpreadReport { price, spread, no_good_deal, hypotheses_hold, interval: None };
    if hypotheses_hold {
        let iv = mcp_interval(m, a, x)?;
        if (iv.sup - price).abs() > PRICE_TOL || !iv.right_closed {
            return Err(Error::InternalInconsistency(format!(
                "zero-spread payoff priced {price} but interval supremum is {} (right-closed: {})",
                iv.sup, iv.right_closed
            )));
        }
        report.interval = Some(iv);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::model::{ConstraintSet, PricingRule, ProbabilitySpace};

    fn market(rule: &str, c: ConstraintSet) -> Market {
        let rule = PricingRule::GeneralConvex(parse(rule).unwrap());
        Market::new(ProbabilitySpace::uniform(2), Market::identity_securities(2), rule, c).unwrap()
    }

    fn wedge() -> AcceptanceSet {
        AcceptanceSet::Scripted { constraints: vec![parse("max(-s1, 0) - s2").unwrap()], generators: None }
    }

    #[test]
    fn attained_at_the_payoff_itself() {
        let m = market("max(2*x1 + x2, x1 + 2*x2)", ConstraintSet::Unconstrained);
        let iv = mcp_interval(&m, &wedge(), &[-2.0, 1.0]).unwrap();
        assert!(iv.sup.abs() < 1e-9 && iv.right_closed && iv.unique_attainer);
    }

    #[test]
    fn attained_elsewhere() {
        let m = market("max(2*x1 + x2, x1 + 2*x2)", ConstraintSet::Unconstrained);
        let sr = superreplication_price(&m, &wedge(), &[1.0, -2.0]).unwrap();
        assert!((sr.value + 1.5).abs() < 1e-9);
        let z = sr.attainer.unwrap();
        assert!((z[0] + 0.5).abs() < 1e-9 && (z[1] + 0.5).abs() < 1e-9);
        assert!(!mcp_interval(&m, &wedge(), &[1.0, -2.0]).unwrap().right_closed);
    }

    #[test]
    fn unattained_infimum_is_right_closed() {
        let c = ConstraintSet::Box { lower: vec![f64::NEG_INFINITY, 0.0], upper: vec![f64::INFINITY, f64::INFINITY] };
        let m = market("exp(x1) - 1", c);
        let sr = superreplication_price(&m, &wedge(), &[0.5, -1.0]).unwrap();
        assert!((sr.value + 1.0).abs() < 1e-5 && !sr.attained, "{sr:?}");
        assert!(mcp_interval(&m, &wedge(), &[0.5, -1.0]).unwrap().right_closed);
    }

    #[test]
    fn zero_is_always_in_c() {
        let m = market("max(2*x1 + x2, x1 + 2*x2)", ConstraintSet::Unconstrained);
        assert!(in_c(&m, &wedge(), &[0.0, 0.0], 0.0).unwrap());
        assert!(in_c(&m, &wedge(), &[-2.0, 1.0], 0.0).unwrap());
        assert!(!in_c(&m, &wedge(), &[-2.0, 1.0], 0.01).unwrap());
    }
}
