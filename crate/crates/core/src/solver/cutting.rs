//! Kelley cutting-plane method with an auto-expanding localization box.

use super::lp::{self, Cmp, LinearProgram, LpStatus, Row};
use super::{ConvexFn, ConvexProgram, SolveResult, Status, CP_MAX_ITER, CP_TOL, MAX_DOUBLINGS};

const MAX_CUTS: usize = 400;
/// Relative step of the probes that validate a cut.
const PROBE: f64 = 1e-6;
/// Constraint values or gradients beyond this are treated as outside the
/// domain; cuts taken there would wreck the conditioning of the LP.
const HUGE: f64 = 1e15;

fn usable(v: f64, g: &[(usize, f64)]) -> bool {
    v.abs() <= HUGE && g.iter().all(|e| e.1.abs() <= HUGE)
}

struct Outcome {
    status: Status,
    value: f64,
    x: Vec<f64>,
    ray: Option<Vec<f64>>,
    iterations: usize,
}

fn boxed_lp(p: &ConvexProgram, b: f64) -> LinearProgram {
    let mut lp = p.lp.clone();
    for j in 0..lp.num_vars() {
        if p.boxed[j] {
            lp.lower[j] = lp.lower[j].max(-b);
            lp.upper[j] = lp.upper[j].min(b);
        }
    }
    lp
}

fn cut_from(val: f64, grad: &[(usize, f64)], at: &[f64]) -> Option<Row> {
    if !val.is_finite() || grad.iter().any(|g| !g.1.is_finite()) {
        return None;
    }
    let rhs = grad.iter().map(|&(j, g)| g * at[j]).sum::<f64>() - val;
    Some(Row::new(grad.to_vec(), Cmp::Le, rhs))
}

/// Cut at `at`, checked against coordinate probes. A gradient taken at a
/// kink can overstate the function nearby; cuts at the offending probes
/// are returned instead.
/// Probes leaving the linear constraints on the function's own arguments
/// are skipped, since convexity is only assumed there.
fn checked_cuts(f: &dyn ConvexFn, val: f64, grad: &[(usize, f64)], at: &[f64], lp: &LinearProgram) -> Vec<Row> {
    let Some(cut) = cut_from(val, grad, at) else { return Vec::new() };
    let own = |j: usize| grad.iter().any(|e| e.0 == j);
    let domain: Vec<&Row> = lp.rows.iter().filter(|r| r.coefs.iter().all(|e| own(e.0))).collect();
    let mut out = Vec::new();
    for &(j, _) in grad {
        for sign in [1.0, -1.0] {
            let mut z = at.to_vec();
            z[j] += sign * PROBE * (1.0 + at[j].abs());
            if z[j] < lp.lower[j] || z[j] > lp.upper[j] || domain.iter().any(|r| r.violation(&z) > 0.0) {
                continue;
            }
            let Some((fz, gz)) = f.eval(&z) else { continue };
            if !fz.is_finite() {
                continue;
            }
            let model = val + grad.iter().map(|&(k, g)| g * (z[k] - at[k])).sum::<f64>();
            if model > fz + 1e-10 * (1.0 + fz.abs() + model.abs()) {
                out.extend(cut_from(fz, &gz, &z));
            }
        }
    }
    if out.is_empty() {
        out.push(cut);
    }
    out
}

/// Finds the last point on `[anchor, x]` where every constraint evaluates
/// finitely and returns cuts taken there.
fn boundary_cuts(p: &ConvexProgram, anchor: &[f64], x: &[f64]) -> Vec<Row> {
    let finite_at = |y: &[f64]| {
        p.nonlinear.iter().all(|c| match c.f.eval(y) {
            Some((v, g)) => usable(v, &g),
            None => false,
        })
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let point = |t: f64| -> Vec<f64> { anchor.iter().zip(x).map(|(a, b)| a + t * (b - a)).collect() };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if finite_at(&point(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = point(lo);
    p.nonlinear
        .iter()
        .filter_map(|c| c.f.eval(&y).and_then(|(v, g)| cut_from(v, &g, &y)))
        .collect()
}

fn prune(cuts: &mut Vec<Row>, x: &[f64]) {
    if cuts.len() <= MAX_CUTS {
        return;
    }
    let keep_recent = MAX_CUTS / 2;
    let split = cuts.len() - keep_recent;
    let mut old: Vec<(f64, Row)> = cuts.drain(..split).map(|r| (r.rhs - r.activity(x), r)).collect();
    old.sort_by(|a, b| a.0.total_cmp(&b.0));
    old.truncate(MAX_CUTS - keep_recent);
    let mut kept: Vec<Row> = old.into_iter().map(|(_, r)| r).collect();
    kept.append(cuts);
    *cuts = kept;
}

/// Kelley iterations on a fixed box. `cuts` persists across calls since
/// every cut is globally valid.
fn kelley(p: &ConvexProgram, b: f64, cuts: &mut Vec<Row>, max_iter: usize, anchor: Option<Vec<f64>>) -> Outcome {
    let base = boxed_lp(p, b);
    let mut anchor = anchor;
    let mut last_x = vec![0.0; p.num_vars()];
    let mut last_value = f64::NEG_INFINITY;
    let mut stalls = 0usize;
    for it in 0..max_iter {
        let mut lp = base.clone();
        lp.rows.extend(cuts.iter().cloned());
        let sol = lp::solve(&lp);
        if sol.status == LpStatus::Infeasible {
            return Outcome { status: Status::Infeasible, value: f64::INFINITY, x: last_x, ray: None, iterations: it + 1 };
        }
        let x = sol.x.clone();
        let mut added = 0usize;
        let mut all_ok = true;
        let mut domain_fail = false;
        for c in &p.nonlinear {
            match c.f.eval(&x) {
                Some((val, grad)) if usable(val, &grad) => {
                    // feasibility relative to the magnitude of the terms
                    let scale = grad.iter().fold(0.0f64, |m, &(j, g)| m.max((g * x[j]).abs()));
                    let tol = c.tol * (1.0 + scale * 1e-3);
                    if val > tol || sol.status == LpStatus::Unbounded {
                        all_ok &= val <= tol;
                        let new = checked_cuts(c.f.as_ref(), val, &grad, &x, &base);
                        added += new.len();
                        cuts.extend(new);
                    }
                }
                _ => {
                    all_ok = false;
                    domain_fail = true;
                }
            }
        }
        if domain_fail {
            if let Some(a) = &anchor {
                let extra = boundary_cuts(p, a, &x);
                added += extra.len();
                cuts.extend(extra);
            }
        } else {
            anchor = Some(x.clone());
        }
        if sol.status == LpStatus::Unbounded {
            if all_ok && added == 0 {
                return Outcome { status: Status::Unbounded, value: f64::NEG_INFINITY, x, ray: sol.ray, iterations: it + 1 };
            }
        } else if all_ok {
            return Outcome { status: Status::Optimal, value: sol.value, x, ray: None, iterations: it + 1 };
        }
        if added == 0 || x == last_x {
            stalls += 1;
            if stalls > 3 {
                return Outcome { status: Status::ToleranceReached, value: sol.value, x, ray: None, iterations: it + 1 };
            }
        }
        if sol.status == LpStatus::Optimal {
            last_value = sol.value;
        }
        prune(cuts, &x);
        last_x = x;
    }
    Outcome { status: Status::ToleranceReached, value: last_value, x: last_x, ray: None, iterations: max_iter }
}

fn pinned(p: &ConvexProgram, x: &[f64], b: f64) -> bool {
    (0..x.len()).any(|j| {
        p.boxed[j]
            && ((x[j] <= -b * (1.0 - 1e-9) && p.lp.lower[j] < -b) || (x[j] >= b * (1.0 - 1e-9) && p.lp.upper[j] > b))
    })
}

/// Among near-optimal points on box `b`, picks one furthest along `drift`.
fn push_along(p: &ConvexProgram, b: f64, value: f64, drift: &[f64], cuts: &[Row], from: &[f64]) -> Option<Vec<f64>> {
    let mut q = p.clone();
    let obj = q.lp.objective.clone();
    let coefs: Vec<(usize, f64)> = obj.iter().enumerate().filter(|e| *e.1 != 0.0).map(|(j, &c)| (j, c)).collect();
    q.lp.add_row(coefs, Cmp::Le, value + 1e-9 * (1.0 + value.abs()));
    q.lp.objective = drift.iter().map(|d| -d).collect();
    let mut local = cuts.to_vec();
    let out = kelley(&q, b, &mut local, CP_MAX_ITER, Some(from.to_vec()));
    (out.status == Status::Optimal).then_some(out.x)
}

/// Kelley outer approximation with localization box `box_hint`, doubled
/// up to `2^10` times while the optimizer sits on the box boundary. A value
/// that improves with the box until the gains drop below `CP_TOL` is
/// reported as not attained.
pub fn solve_cutting_plane(p: &ConvexProgram, box_hint: f64) -> SolveResult {
    let mut b = box_hint.max(1e-6);
    let mut cuts: Vec<Row> = Vec::new();
    let mut iterations = 0usize;
    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut improved_ever = false;
    let mut last_gain = 0.0;
    let mut last_improvement = f64::INFINITY;
    let mut last_infeasible = None;
    for k in 0..=MAX_DOUBLINGS {
        let start = prev.as_ref().map(|(_, x)| x.clone());
        let out = kelley(p, b, &mut cuts, CP_MAX_ITER, start);
        iterations += out.iterations;
        match out.status {
            Status::Infeasible => {
                last_infeasible = Some(out.x);
                b *= 2.0;
                continue;
            }
            Status::Unbounded => {
                return SolveResult {
                    status: Status::Unbounded,
                    value: f64::NEG_INFINITY,
                    optimizer: None,
                    point: out.x,
                    duals: None,
                    attained: false,
                    direction: out.ray,
                    iterations,
                };
            }
            Status::ToleranceReached => {
                return SolveResult {
                    status: Status::ToleranceReached,
                    value: out.value,
                    optimizer: None,
                    point: out.x,
                    duals: None,
                    attained: false,
                    direction: None,
                    iterations,
                };
            }
            Status::Optimal => {}
        }
        let mut x = out.x;
        let v = out.value;
        if let Some((pv, px)) = &prev {
            let drift: Vec<f64> = x.iter().zip(px).map(|(a, c)| a - c).collect();
            if drift.iter().any(|d| d.abs() > 0.0) {
                if let Some(y) = push_along(p, b, v, &drift, &cuts, &x) {
                    x = y;
                }
            }
            let gain = pv - v;
            if gain > 1e-12 * (1.0 + v.abs()) {
                improved_ever = true;
                last_improvement = gain;
            }
            last_gain = gain;
        }
        if !pinned(p, &x, b) || k == MAX_DOUBLINGS {
            let at_edge = pinned(p, &x, b);
            if at_edge && improved_ever && last_gain > 1e-6 * (1.0 + v.abs()) {
                let dir = prev.as_ref().map(|(_, px)| {
                    let d: Vec<f64> = x.iter().zip(px).map(|(a, c)| a - c).collect();
                    let s = d.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1e-300);
                    d.iter().map(|e| if (e / s).abs() < 1e-9 { 0.0 } else { e / s }).collect()
                });
                return SolveResult {
                    status: Status::Unbounded,
                    value: f64::NEG_INFINITY,
                    optimizer: None,
                    point: x,
                    duals: None,
                    attained: false,
                    direction: dir,
                    iterations,
                };
            }
            // improvements that faded below the tolerance indicate an asymptote
            let fading = last_improvement < CP_TOL * (1.0 + v.abs());
            let attained = !(improved_ever && (at_edge || fading));
            return SolveResult {
                status: Status::Optimal,
                value: v,
                optimizer: attained.then(|| x.clone()),
                point: x,
                duals: None,
                attained,
                direction: None,
                iterations,
            };
        }
        prev = Some((v, x));
        b *= 2.0;
    }
    SolveResult {
        status: Status::Infeasible,
        value: f64::INFINITY,
        optimizer: None,
        point: last_infeasible.unwrap_or_else(|| vec![0.0; p.num_vars()]),
        duals: None,
        attained: false,
        direction: None,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{ConvexFn, LinearProgram};
    use std::sync::Arc;

    /// `exp(x0) − 1 − x1 ≤ 0`.
    struct ExpEpi;
    impl ConvexFn for ExpEpi {
        fn eval(&self, x: &[f64]) -> Option<(f64, Vec<(usize, f64)>)> {
            let e = x[0].exp();
            Some((e - 1.0 - x[1], vec![(0, e), (1, -1.0)]))
        }
    }

    /// `max(2a+b, a+2b) − t ≤ 0` over variables (a, b, t).
    struct MaxEpi;
    impl ConvexFn for MaxEpi {
        fn eval(&self, x: &[f64]) -> Option<(f64, Vec<(usize, f64)>)> {
            let (f1, f2) = (2.0 * x[0] + x[1], x[0] + 2.0 * x[1]);
            if f1 >= f2 {
                Some((f1 - x[2], vec![(0, 2.0), (1, 1.0), (2, -1.0)]))
            } else {
                Some((f2 - x[2], vec![(0, 1.0), (1, 2.0), (2, -1.0)]))
            }
        }
    }

    #[test]
    fn exp_minus_one_is_not_attained() {
        let mut lp = LinearProgram::new(2);
        lp.objective[1] = 1.0;
        let mut p = ConvexProgram::new(lp);
        p.boxed[1] = false;
        p.add_nonlinear(Arc::new(ExpEpi), 1e-9);
        let r = solve_cutting_plane(&p, 1.0);
        assert_eq!(r.status, Status::Optimal);
        assert!((r.value + 1.0).abs() < 1e-6, "value {}", r.value);
        assert!(!r.attained);
    }

    #[test]
    fn max_linear_with_halfplanes() {
        let mut lp = LinearProgram::new(3);
        lp.objective[2] = 1.0;
        lp.add_row(vec![(1, 1.0)], Cmp::Ge, 1.0);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Cmp::Ge, -1.0);
        let mut p = ConvexProgram::new(lp);
        p.boxed[2] = false;
        p.add_nonlinear(Arc::new(MaxEpi), 1e-9);
        let r = solve_cutting_plane(&p, 4.0);
        assert_eq!(r.status, Status::Optimal);
        assert!(r.value.abs() < 1e-9, "value {}", r.value);
        assert!(r.attained);
    }

    #[test]
    fn linear_descent_is_unbounded() {
        let mut lp = LinearProgram::new(3);
        lp.objective[2] = 1.0;
        let mut p = ConvexProgram::new(lp);
        p.boxed[2] = false;
        p.add_nonlinear(Arc::new(MaxEpi), 1e-9);
        let r = solve_cutting_plane(&p, 1.0);
        assert_eq!(r.status, Status::Unbounded);
        assert_eq!(r.value, f64::NEG_INFINITY);
    }
}
