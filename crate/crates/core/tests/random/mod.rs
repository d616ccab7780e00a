#![allow(dead_code)]

use gdp_core::acceptance::{AcceptanceSet, Utility};
use gdp_core::linalg;
use gdp_core::model::{ConstraintSet, Curve, Market, PricingRule, ProbabilitySpace};
use rand::Rng;

fn round(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

pub fn probs(rng: &mut impl Rng, n: usize) -> ProbabilitySpace {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=4) as f64).collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|v| v / total).collect();
    let head: f64 = p[..n - 1].iter().sum();
    p[n - 1] = 1.0 - head;
    ProbabilitySpace::new(p).unwrap()
}

pub fn securities(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    loop {
        let s: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-2..=2) as f64).collect()).collect();
        if linalg::rank(&s, 1e-9) == k {
            return s;
        }
    }
}

pub fn payoff(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| round(rng.gen_range(-3.0..3.0), 0.25)).collect()
}

/// Prices of the securities under a random positive deflator, optionally perturbed.
fn prices(rng: &mut impl Rng, space: &ProbabilitySpace, s: &[Vec<f64>]) -> Vec<f64> {
    let q: Vec<f64> = (0..space.n()).map(|_| rng.gen_range(0.2..1.5)).collect();
    let noise = rng.gen_bool(0.4);
    s.iter()
        .map(|row| {
            let base = space.pairing(&q, row);
            round(if noise { base + rng.gen_range(-1.0..1.0) } else { base }, 1.0 / 64.0)
        })
        .collect()
}

fn conic_rule(rng: &mut impl Rng, space: &ProbabilitySpace, s: &[Vec<f64>]) -> PricingRule {
    let mid = prices(rng, space, s);
    if rng.gen_bool(0.5) {
        PricingRule::Linear(mid)
    } else {
        let spread: Vec<f64> = mid.iter().map(|_| round(rng.gen_range(0.0..0.3), 1.0 / 64.0)).collect();
        PricingRule::Proportional {
            buy: mid.iter().zip(&spread).map(|(m, d)| m + d).collect(),
            sell: mid.iter().zip(&spread).map(|(m, d)| m - d).collect(),
        }
    }
}

fn curve(rng: &mut impl Rng, first: f64, convex: bool) -> Curve {
    let k = rng.gen_range(0..=2);
    let mut knots = Vec::new();
    let mut slopes = vec![first];
    let mut at = 0.0;
    for _ in 0..k {
        at += rng.gen_range(1..=3) as f64 * 0.5;
        knots.push(at);
        let step = rng.gen_range(0.0..0.5);
        let prev = *slopes.last().unwrap();
        slopes.push(if convex { prev + step } else { (prev - step).max(0.0) });
    }
    Curve { knots, slopes: slopes.into_iter().map(|v| round(v, 1.0 / 64.0)).collect(), cap: None }
}

fn rule(rng: &mut impl Rng, space: &ProbabilitySpace, s: &[Vec<f64>]) -> PricingRule {
    if rng.gen_bool(0.7) {
        return conic_rule(rng, space, s);
    }
    let mid = prices(rng, space, s);
    let mut buy = Vec::new();
    let mut sell = Vec::new();
    for &p in &mid {
        let p = p.abs() + 0.25;
        buy.push(curve(rng, p, true));
        sell.push(curve(rng, (p - 0.25).max(0.0), false));
    }
    PricingRule::ConvexSeparable { buy, sell }
}

fn constraints(rng: &mut impl Rng, k: usize, conic: bool) -> ConstraintSet {
    match rng.gen_range(0..if conic { 3 } else { 5 }) {
        0 => ConstraintSet::Unconstrained,
        1 => ConstraintSet::LongOnly,
        2 => {
            let rows = (0..rng.gen_range(1..=2)).map(|_| ((0..k).map(|_| rng.gen_range(-2..=2) as f64).collect(), 0.0)).collect();
            ConstraintSet::Halfspaces(rows)
        }
        3 => ConstraintSet::Box {
            lower: (0..k).map(|_| -(rng.gen_range(0..=4) as f64) * 0.5).collect(),
            upper: (0..k).map(|_| rng.gen_range(0..=4) as f64 * 0.5).collect(),
        },
        _ => {
            let rows = (0..rng.gen_range(1..=2))
                .map(|_| ((0..k).map(|_| rng.gen_range(-2..=2) as f64).collect(), rng.gen_range(0..=4) as f64 * 0.5))
                .collect();
            ConstraintSet::Halfspaces(rows)
        }
    }
}

/// `n` strictly positive densities with unit mean.
fn densities(rng: &mut impl Rng, space: &ProbabilitySpace, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = (0..space.n()).map(|_| rng.gen_range(0.1..2.0)).collect();
            let mean = space.expectation(&raw);
            raw.iter().map(|v| v / mean).collect()
        })
        .collect()
}

fn pointed_cone(rng: &mut impl Rng, space: &ProbabilitySpace) -> AcceptanceSet {
    match rng.gen_range(0..4) {
        0 => AcceptanceSet::PositiveCone,
        1 => AcceptanceSet::ExpectedShortfall { alpha: round(rng.gen_range(0.05..0.95), 0.01) },
        2 => AcceptanceSet::GainLoss { alpha: round(rng.gen_range(0.05..0.45), 0.01) },
        _ => {
            let count = space.n() + rng.gen_range(0..=1);
            AcceptanceSet::TestProbabilities { tests: densities(rng, space, count).into_iter().map(|q| (q, 0.0)).collect() }
        }
    }
}

/// A market with conic acceptance set whose conification is pointed.
pub fn ftap_instance(rng: &mut impl Rng) -> (Market, AcceptanceSet) {
    let n = rng.gen_range(2..=4);
    let k = rng.gen_range(1..=n.min(3));
    let space = probs(rng, n);
    let s = securities(rng, n, k);
    let r = rule(rng, &space, &s);
    let c = constraints(rng, k, false);
    let a = pointed_cone(rng, &space);
    (Market::new(space, s, r, c).unwrap(), a)
}

/// A market with polyhedral pricing, constraints and acceptance set.
pub fn polyhedral_instance(rng: &mut impl Rng) -> (Market, AcceptanceSet) {
    let n = rng.gen_range(2..=4);
    let k = rng.gen_range(1..=n.min(3));
    let space = probs(rng, n);
    let s = securities(rng, n, k);
    let r = rule(rng, &space, &s);
    let c = constraints(rng, k, false);
    let a = match rng.gen_range(0..4) {
        0 => pointed_cone(rng, &space),
        1 => {
            let event: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
            AcceptanceSet::Scenarios { event: if event.is_empty() { vec![0] } else { event } }
        }
        2 => {
            let count = rng.gen_range(1..=n);
            let tests = densities(rng, &space, count);
            AcceptanceSet::TestProbabilities { tests: tests.into_iter().map(|q| (q, -round(rng.gen_range(0.0..1.0), 0.25))).collect() }
        }
        _ => AcceptanceSet::UtilityPwl {
            utility: Utility { knots: vec![-1.0, 1.0], slopes: vec![2.0, 1.0, 0.5] },
            floor: -round(rng.gen_range(0.0..1.0), 0.25),
        },
    };
    (Market::new(space, s, r, c).unwrap(), a)
}

/// Two states, two unimodular securities, grid-aligned data.
pub fn tiny_instance(rng: &mut impl Rng) -> (Market, AcceptanceSet, Vec<f64>) {
    let mats = [
        [[1.0, 0.0], [0.0, 1.0]],
        [[1.0, 1.0], [0.0, 1.0]],
        [[1.0, 0.0], [1.0, 1.0]],
        [[2.0, 1.0], [1.0, 1.0]],
    ];
    let s: Vec<Vec<f64>> = mats[rng.gen_range(0..mats.len())].iter().map(|r| r.to_vec()).collect();
    let space = ProbabilitySpace::uniform(2);
    let q: Vec<f64> = (0..2).map(|_| rng.gen_range(3..=5) as f64 * 0.25).collect();
    let mid: Vec<f64> = s.iter().map(|row| space.pairing(&q, row)).collect();
    let r = if rng.gen_bool(0.5) {
        PricingRule::Linear(mid)
    } else {
        PricingRule::Proportional { buy: mid.iter().map(|m| m + 0.25).collect(), sell: mid.iter().map(|m| m - 0.25).collect() }
    };
    let c = match rng.gen_range(0..3) {
        0 => ConstraintSet::Unconstrained,
        1 => ConstraintSet::LongOnly,
        _ => ConstraintSet::Box { lower: vec![-2.0, -2.0], upper: vec![2.0, 2.0] },
    };
    let a = match rng.gen_range(0..3) {
        0 => AcceptanceSet::PositiveCone,
        1 => AcceptanceSet::ExpectedShortfall { alpha: 0.5 },
        _ => AcceptanceSet::GainLoss { alpha: 0.25 },
    };
    let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-4..=4) as f64 * 0.25).collect();
    (Market::new(space, s, r, c).unwrap(), a, x)
}
