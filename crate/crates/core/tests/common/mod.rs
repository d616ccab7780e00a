#![allow(dead_code)]

use gdp_core::acceptance::AcceptanceSet;
use gdp_core::expr::parse;
use gdp_core::model::{ConstraintSet, Market, PricingRule, ProbabilitySpace};

const INF: f64 = f64::INFINITY;

pub fn scripted_rule(src: &str) -> PricingRule {
    PricingRule::GeneralConvex(parse(src).unwrap())
}

pub fn two_state(rule: PricingRule, c: ConstraintSet) -> Market {
    Market::new(ProbabilitySpace::uniform(2), Market::identity_securities(2), rule, c).unwrap()
}

pub fn scripted(constraints: &[&str], generators: Option<Vec<Vec<f64>>>) -> AcceptanceSet {
    AcceptanceSet::Scripted { constraints: constraints.iter().map(|c| parse(c).unwrap()).collect(), generators }
}

/// `{(x, y) : y ≥ max(−x, 0)}`.
pub fn wedge() -> AcceptanceSet {
    scripted(&["max(-s1, 0) - s2"], None)
}

pub fn max_linear_market() -> Market {
    two_state(scripted_rule("max(2*x1 + x2, x1 + 2*x2)"), ConstraintSet::Unconstrained)
}

pub fn capped_long_market() -> Market {
    two_state(scripted_rule("max(x1 + x2, x1 + 2*x2)"), ConstraintSet::Halfspaces(vec![(vec![1.0, 0.0], 1.0)]))
}

pub fn exponential_market() -> Market {
    two_state(scripted_rule("exp(x1) - 1"), ConstraintSet::Box { lower: vec![-INF, 0.0], upper: vec![INF, INF] })
}

pub fn quadratic_market() -> Market {
    two_state(scripted_rule("x1 + pow(x2, 2)"), ConstraintSet::Unconstrained)
}

pub fn bounded_linear_market() -> Market {
    two_state(PricingRule::Linear(vec![1.0, 1.0]), ConstraintSet::Box { lower: vec![-1.0, 0.0], upper: vec![INF, 1.0] })
}

/// `π = max(x, y)`, `A = ℝ²₊ ∪ {x < 0, y ≥ x²}` whose conification is a halfplane.
pub fn parabola_counterexample() -> (Market, AcceptanceSet) {
    let m = two_state(scripted_rule("max(x1, x2)"), ConstraintSet::Unconstrained);
    let a = scripted(&["pow(max(-s1, 0), 2) - s2"], Some(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]]));
    (m, a)
}

/// `π = x + y`, `A = ℝ²₊ ∪ {x < 0, y ≥ e^{−x} − 1}`.
pub fn exponential_counterexample() -> (Market, AcceptanceSet) {
    let m = two_state(PricingRule::Linear(vec![1.0, 1.0]), ConstraintSet::Unconstrained);
    let a = scripted(&["exp(max(-s1, 0)) - 1 - s2"], Some(vec![vec![1.0, 0.0], vec![-1.0, 1.0]]));
    (m, a)
}

/// `π = −√(x² + xy)` on `M = {0 ≤ y ≤ −x}`.
pub fn geometric_mean_market() -> Market {
    let c = ConstraintSet::Halfspaces(vec![(vec![0.0, -1.0], 0.0), (vec![1.0, 1.0], 0.0)]);
    two_state(scripted_rule("-sqrt(x1*x1 + x1*x2)"), c)
}

/// `π = max(x, x + y)`, `M = {y ≥ 0}`, `A = {y ≥ max(−2x, 0), x ≥ −1}`.
pub fn nonconic_gap() -> (Market, AcceptanceSet) {
    let m = two_state(scripted_rule("max(x1, x1 + x2)"), ConstraintSet::Halfspaces(vec![(vec![0.0, -1.0], 0.0)]));
    let a = scripted(&["max(-2*s1, 0) - s2", "-1 - s1"], Some(vec![vec![1.0, 0.0], vec![-1.0, 2.0]]));
    (m, a)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn close_vec(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, *y, tol))
}
