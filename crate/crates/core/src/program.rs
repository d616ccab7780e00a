//! Helpers that translate expressions into program constraints.

use crate::error::{Error, Result};
use crate::expr::{Expr, ExprFn, LinVar};
use crate::model::{ConstraintSet, Market, PricingRule};
use crate::solver::{Cmp, ConvexProgram, LinearProgram, CP_TOL};
use std::sync::Arc;

/// Adds `e(x, s) + Σ linear ≤ rhs` where `x_vars`/`s_vars` give the program
/// indices of the expression's variables. Piecewise-linear expressions become
/// rows with auxiliary variables; anything else a nonlinear constraint.
pub fn add_expr_le(
    p: &mut ConvexProgram,
    e: &Expr,
    probs: &[f64],
    x_vars: &[usize],
    s_vars: &[usize],
    linear: &[(usize, f64)],
    rhs: f64,
) {
    if let Some(form) = e.epigraph(probs) {
        let aux: Vec<usize> = (0..form.aux).map(|_| p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0, false)).collect();
        let map = |v: LinVar| match v {
            LinVar::X(i) => x_vars[i],
            LinVar::S(i) => s_vars[i],
            LinVar::Aux(k) => aux[k],
        };
        for r in &form.rows {
            let r = r.normalized();
            p.add_row(r.terms.iter().map(|&(v, c)| (map(v), c)).collect(), Cmp::Le, -r.constant);
        }
        let v = form.value.normalized();
        let mut coefs: Vec<(usize, f64)> = v.terms.iter().map(|&(v, c)| (map(v), c)).collect();
        coefs.extend_from_slice(linear);
        p.add_row(coefs, Cmp::Le, rhs - v.constant);
    } else {
        let f = ExprFn::new(e.clone(), probs, x_vars.to_vec(), s_vars.to_vec()).with_linear(linear.to_vec(), -rhs);
        p.add_nonlinear(Arc::new(f), CP_TOL * 1e-3);
    }
}

/// Which market objects a program describes: `(M, π)` or `(M^∞, π^∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketView {
    Set,
    Recession,
}

/// Program indices of the portfolio, payoff and cost variables.
#[derive(Debug, Clone)]
pub struct MarketVars {
    pub x: Vec<usize>,
    pub z: Vec<usize>,
    pub cost: usize,
}

/// Adds `x ∈ P`, `z = Sᵀx` and `V₀(x) ≤ cost` (or their recession versions).
/// Portfolio and payoff variables are boxed; `cost` is free and unboxed.
pub fn add_market(p: &mut ConvexProgram, m: &Market, view: MarketView) -> Result<MarketVars> {
    let inf = f64::INFINITY;
    let rec = view == MarketView::Recession;
    let k = m.n_securities();
    let (mut lo, mut hi) = (vec![-inf; k], vec![inf; k]);
    match &m.constraints {
        ConstraintSet::Unconstrained | ConstraintSet::Halfspaces(_) => {}
        ConstraintSet::LongOnly => lo = vec![0.0; k],
        ConstraintSet::Box { lower, upper } => {
            for i in 0..k {
                lo[i] = if rec && lower[i].is_finite() { 0.0 } else { lower[i] };
                hi[i] = if rec && upper[i].is_finite() { 0.0 } else { upper[i] };
            }
        }
    }
    if let PricingRule::ConvexSeparable { buy, sell } = &m.rule {
        for i in 0..k {
            if let Some(c) = buy[i].cap {
                hi[i] = hi[i].min(if rec { 0.0 } else { c });
            }
            if let Some(c) = sell[i].cap {
                lo[i] = lo[i].max(if rec { 0.0 } else { -c });
            }
        }
    }
    let x: Vec<usize> = (0..k).map(|i| p.add_var(lo[i], hi[i], 0.0, true)).collect();
    if let ConstraintSet::Halfspaces(rows) = &m.constraints {
        for (a, b) in rows {
            let coefs = x.iter().zip(a).filter(|(_, c)| **c != 0.0).map(|(&v, &c)| (v, c)).collect();
            p.add_row(coefs, Cmp::Le, if rec { 0.0 } else { *b });
        }
    }
    let z: Vec<usize> = (0..m.n_states()).map(|_| p.add_var(-inf, inf, 0.0, true)).collect();
    for (w, &zw) in z.iter().enumerate() {
        let mut coefs = vec![(zw, 1.0)];
        coefs.extend(x.iter().zip(&m.securities).filter(|(_, s)| s[w] != 0.0).map(|(&v, s)| (v, -s[w])));
        p.add_row(coefs, Cmp::Eq, 0.0);
    }
    let cost = p.add_var(-inf, inf, 0.0, false);
    match &m.rule {
        PricingRule::Linear(pr) => {
            let mut coefs: Vec<(usize, f64)> = x.iter().zip(pr).map(|(&v, &c)| (v, c)).collect();
            coefs.push((cost, -1.0));
            p.add_row(coefs, Cmp::Le, 0.0);
        }
        PricingRule::Proportional { buy, sell } => {
            let mut total = vec![(cost, -1.0)];
            for i in 0..k {
                let u = p.add_var(-inf, inf, 0.0, false);
                p.add_row(vec![(x[i], buy[i]), (u, -1.0)], Cmp::Le, 0.0);
                p.add_row(vec![(x[i], sell[i]), (u, -1.0)], Cmp::Le, 0.0);
                total.push((u, 1.0));
            }
            p.add_row(total, Cmp::Le, 0.0);
        }
        PricingRule::ConvexSeparable { buy, sell } => {
            let mut total = vec![(cost, -1.0)];
            for i in 0..k {
                let u = p.add_var(-inf, inf, 0.0, false);
                if rec {
                    p.add_row(vec![(x[i], buy[i].terminal_slope()), (u, -1.0)], Cmp::Le, 0.0);
                    p.add_row(vec![(x[i], sell[i].terminal_slope()), (u, -1.0)], Cmp::Le, 0.0);
                } else {
                    // buy piece: v + s(q - t); sell piece mirrored: -v + s(q + t)
                    for (v, s, t) in buy[i].pieces() {
                        p.add_row(vec![(x[i], s), (u, -1.0)], Cmp::Le, s * t - v);
                    }
                    for (v, s, t) in sell[i].pieces() {
                        p.add_row(vec![(x[i], s), (u, -1.0)], Cmp::Le, v - s * t);
                    }
                }
                total.push((u, 1.0));
            }
            p.add_row(total, Cmp::Le, 0.0);
        }
        PricingRule::GeneralConvex(e) => {
            if rec {
                let r = m.rule_recession().ok_or(Error::NotPolyhedral)?;
                add_expr_le(p, &r.value, &[], &x, &[], &[(cost, -1.0)], 0.0);
                for d in &r.domain {
                    add_expr_le(p, d, &[], &x, &[], &[], 0.0);
                }
            } else {
                add_expr_le(p, e, &[], &x, &[], &[(cost, -1.0)], 0.0);
            }
        }
    }
    Ok(MarketVars { x, z, cost })
}

/// An empty program.
pub fn program() -> ConvexProgram {
    ConvexProgram::new(LinearProgram::new(0))
}
