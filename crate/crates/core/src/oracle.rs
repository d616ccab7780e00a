//! Brute-force grid oracles for tiny markets (at most three securities).

use crate::acceptance::AcceptanceSet;
use crate::error::{Error, Result};
use crate::gooddeal::{DealKind, GoodDealReport};
use crate::model::{Market, Payoff, Portfolio};
use rayon::prelude::*;
use serde::Serialize;

/// Largest number of securities the oracles accept.
pub const MAX_SECURITIES: usize = 3;
/// Scales used to probe whether a good deal survives in volume.
pub const DEAL_SCALES: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

const MEMBER_TOL: f64 = 1e-9;

/// The cube `[lower, upper]^N` sampled with step `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.lower.is_finite() || !self.upper.is_finite() || self.upper < self.lower {
            return Err(Error::Invalid("grid needs finite bounds and a positive step".into()));
        }
        if self.ticks() > 2001 {
            return Err(Error::Invalid("grid has more than 2001 points per axis".into()));
        }
        Ok(())
    }

    fn ticks(&self) -> usize {
        ((self.upper - self.lower) / self.step + 1e-9).floor() as usize + 1
    }

    fn tick(&self, k: usize) -> f64 {
        (self.lower + k as f64 * self.step).min(self.upper)
    }

    fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        let t = self.ticks();
        let total = t.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                (0..dim)
                    .map(|_| {
                        let k = idx % t;
                        idx /= t;
                        self.tick(k)
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrutePrice {
    /// Smallest cost among feasible grid portfolios (`+∞` if none).
    #[serde(serialize_with = "crate::report::ext_real")]
    pub value: f64,
    pub minimizer: Option<Portfolio>,
    /// Sampled max-norm Lipschitz constant of `V₀` on the box.
    pub lipschitz: f64,
    /// `lipschitz · step`.
    pub radius: f64,
    pub feasible_points: usize,
}

fn check_size(m: &Market) -> Result<()> {
    if m.n_securities() > MAX_SECURITIES {
        return Err(Error::HypothesesNotMet(format!("oracle supports at most {MAX_SECURITIES} securities")));
    }
    Ok(())
}

/// Sum over securities of the largest difference quotient along that axis.
fn lipschitz(m: &Market, grid: &GridSpec, pts: &[Vec<f64>]) -> f64 {
    let h = grid.step;
    let stride = (pts.len() / 4000).max(1);
    (0..m.n_securities())
        .map(|i| {
            pts.par_iter()
                .step_by(stride)
                .filter(|x| x[i] + h <= grid.upper + 1e-12)
                .map(|x| {
                    let mut y = x.clone();
                    y[i] += h;
                    let (a, b) = (m.rule.price(x), m.rule.price(&y));
                    if a.is_finite() && b.is_finite() {
                        (b - a).abs() / h
                    } else {
                        0.0
                    }
                })
                .reduce(|| 0.0, f64::max)
        })
        .sum()
}

/// Minimizes `V₀(x)` over grid portfolios with `Sᵀx − X ∈ A` and `x ∈ P`.
pub fn brute_price(m: &Market, a: &AcceptanceSet, x: &[f64], grid: &GridSpec) -> Result<BrutePrice> {
    check_size(m)?;
    grid.validate()?;
    if x.len() != m.n_states() {
        return Err(Error::Dimension { expected: m.n_states(), got: x.len() });
    }
    let pts = grid.points(m.n_securities());
    let probs = m.probs();
    let feasible: Vec<(f64, &Vec<f64>)> = pts
        .par_iter()
        .filter(|q| m.constraints.admits(q, MEMBER_TOL))
        .filter_map(|q| {
            let z = m.portfolio_payoff(q).ok()?;
            let w: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
            let cost = m.rule.price(q);
            (cost.is_finite() && a.contains(probs, &w, MEMBER_TOL)).then_some((cost, q))
        })
        .collect();
    let best = feasible.iter().min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.partial_cmp(b.1).unwrap()));
    let lip = lipschitz(m, grid, &pts);
    Ok(BrutePrice {
        value: best.map_or(f64::INFINITY, |b| b.0),
        minimizer: best.map(|b| b.1.clone()),
        lipschitz: lip,
        radius: lip * grid.step,
        feasible_points: feasible.len(),
    })
}

/// Scans grid portfolios for good deals and keeps those that stay good
/// deals at every scale in `scales`.
pub fn brute_deal_scan(m: &Market, a: &AcceptanceSet, grid: &GridSpec, scales: &[f64]) -> Result<GoodDealReport> {
    check_size(m)?;
    grid.validate()?;
    let probs = m.probs();
    let is_deal = |q: &[f64], s: f64| -> bool {
        let q: Vec<f64> = q.iter().map(|v| v * s).collect();
        if !m.constraints.admits(&q, MEMBER_TOL) || !(m.rule.price(&q) <= MEMBER_TOL) {
            return false;
        }
        m.portfolio_payoff(&q).map_or(false, |z| a.contains(probs, &z, MEMBER_TOL))
    };
    let found: Vec<(Payoff, bool)> = grid
        .points(m.n_securities())
        .into_par_iter()
        .filter_map(|q| {
            let z = m.portfolio_payoff(&q).ok()?;
            if z.iter().all(|v| v.abs() <= MEMBER_TOL) || !is_deal(&q, 1.0) {
                return None;
            }
            let scalable = scales.iter().all(|&s| is_deal(&q, s));
            Some((z, scalable))
        })
        .collect();
    let rank = |z: &Payoff| {
        let norm = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        (z.iter().map(|v| v.abs()).sum::<f64>() / norm, -norm)
    };
    let pick = |scalable: bool| {
        found
            .iter()
            .filter(|(_, s)| *s || !scalable)
            .min_by(|a, b| {
                let (ra, rb) = (rank(&a.0), rank(&b.0));
                ra.0.total_cmp(&rb.0).then(ra.1.total_cmp(&rb.1)).then_with(|| a.0.partial_cmp(&b.0).unwrap())
            })
            .map(|(z, _)| z.clone())
    };
    let (kind, witness) = match pick(true) {
        Some(z) => {
            let norm = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            (DealKind::ScalableGoodDeal, Some(z.iter().map(|v| v / norm).collect::<Payoff>()))
        }
        None => match pick(false) {
            Some(z) => (DealKind::GoodDeal, Some(z)),
            None => (DealKind::None, None),
        },
    };
    let margin = witness.as_ref().map_or(0.0, |z| z.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    Ok(GoodDealReport { kind, witness, margin, lineality: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::model::{ConstraintSet, PricingRule, ProbabilitySpace};

    fn market(rule: PricingRule, c: ConstraintSet) -> Market {
        Market::new(ProbabilitySpace::uniform(2), Market::identity_securities(2), rule, c).unwrap()
    }

    #[test]
    fn zero_payoff_in_frictionless_market() {
        let m = market(PricingRule::Linear(vec![0.5, 0.5]), ConstraintSet::Unconstrained);
        let g = GridSpec { lower: -2.0, upper: 2.0, step: 0.5 };
        let r = brute_price(&m, &AcceptanceSet::PositiveCone, &[0.0, 0.0], &g).unwrap();
        assert!(r.value <= 0.0 && r.value >= -r.radius);
        assert!((r.lipschitz - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boxed_market_has_no_scalable_deal() {
        let c = ConstraintSet::Box { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] };
        let m = market(PricingRule::GeneralConvex(parse("x1 + x2").unwrap()), c);
        let g = GridSpec { lower: -1.0, upper: 1.0, step: 0.5 };
        let r = brute_deal_scan(&m, &AcceptanceSet::PositiveCone, &g, &DEAL_SCALES).unwrap();
        assert_eq!(r.kind, DealKind::None);
    }

    #[test]
    fn rejects_large_markets() {
        let m = Market::new(
            ProbabilitySpace::uniform(4),
            Market::identity_securities(4),
            PricingRule::Linear(vec![0.25; 4]),
            ConstraintSet::Unconstrained,
        )
        .unwrap();
        let g = GridSpec { lower: -1.0, upper: 1.0, step: 1.0 };
        assert!(brute_price(&m, &AcceptanceSet::PositiveCone, &[0.0; 4], &g).is_err());
    }
}
