//! Double-description enumeration of polyhedral cones and generator utilities.

use crate::linalg::{dot, max_norm};
use crate::solver::{lp, Cmp, LinearProgram, LpStatus};

const EPS: f64 = 1e-10;

/// A polyhedral cone in V-form: `cone(rays) + span(lines)`.
#[derive(Debug, Clone, Default)]
pub struct VCone {
    pub rays: Vec<Vec<f64>>,
    pub lines: Vec<Vec<f64>>,
}

struct Ray {
    v: Vec<f64>,
    zeros: Vec<bool>,
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let m = max_norm(&v);
    if m > 0.0 {
        v.iter_mut().for_each(|x| {
            *x /= m;
            if x.abs() < 1e-13 {
                *x = 0.0;
            }
        });
    }
    v
}

fn sign(a: &[f64], v: &[f64]) -> (f64, i8) {
    let s = dot(a, v);
    let scale = max_norm(a).max(1.0);
    if s > EPS * scale {
        (s, 1)
    } else if s < -EPS * scale {
        (s, -1)
    } else {
        (s, 0)
    }
}

/// Generators of `{x ∈ ℝᵈ : a·x ≥ 0 for a in ineqs, a·x = 0 for a in eqs}`.
pub fn double_description(d: usize, ineqs: &[Vec<f64>], eqs: &[Vec<f64>]) -> VCone {
    let mut constraints: Vec<Vec<f64>> = Vec::with_capacity(ineqs.len() + 2 * eqs.len());
    for e in eqs {
        constraints.push(e.clone());
        constraints.push(e.iter().map(|v| -v).collect());
    }
    constraints.extend(ineqs.iter().cloned());

    let mut lines: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut rays: Vec<Ray> = Vec::new();

    for (ci, a) in constraints.iter().enumerate() {
        if let Some(li) = lines.iter().position(|l| sign(a, l).1 != 0) {
            let mut l = lines.swap_remove(li);
            let al = dot(a, &l);
            if al < 0.0 {
                l.iter_mut().for_each(|x| *x = -*x);
            }
            let al = al.abs();
            for other in lines.iter_mut() {
                let f = dot(a, other) / al;
                other.iter_mut().zip(&l).for_each(|(o, p)| *o -= f * p);
            }
            for r in rays.iter_mut() {
                let f = dot(a, &r.v) / al;
                r.v.iter_mut().zip(&l).for_each(|(o, p)| *o -= f * p);
                r.v = normalize(std::mem::take(&mut r.v));
                r.zeros.push(true);
            }
            let mut zeros = vec![true; ci];
            zeros.push(false);
            rays.push(Ray { v: normalize(l), zeros });
            continue;
        }

        let signs: Vec<(f64, i8)> = rays.iter().map(|r| sign(a, &r.v)).collect();
        let mut next: Vec<Ray> = Vec::new();
        let rank_needed = d.saturating_sub(lines.len()).saturating_sub(2);
        for (i, r) in rays.iter().enumerate() {
            if signs[i].1 >= 0 {
                let mut zeros = r.zeros.clone();
                zeros.push(signs[i].1 == 0);
                next.push(Ray { v: r.v.clone(), zeros });
            }
        }
        for (i, rp) in rays.iter().enumerate() {
            if signs[i].1 <= 0 {
                continue;
            }
            for (j, rn) in rays.iter().enumerate() {
                if signs[j].1 >= 0 {
                    continue;
                }
                let common: Vec<bool> = rp.zeros.iter().zip(&rn.zeros).map(|(p, q)| *p && *q).collect();
                let count = common.iter().filter(|c| **c).count();
                if count < rank_needed {
                    continue;
                }
                let adjacent = rays.iter().enumerate().all(|(k, rk)| {
                    k == i || k == j || !common.iter().zip(&rk.zeros).all(|(c, z)| !*c || *z)
                });
                if !adjacent {
                    continue;
                }
                let (sp, sn) = (signs[i].0, -signs[j].0);
                let v: Vec<f64> = rp.v.iter().zip(&rn.v).map(|(p, q)| sn * p + sp * q).collect();
                if max_norm(&v) <= EPS {
                    continue;
                }
                let mut zeros = common;
                zeros.push(true);
                next.push(Ray { v: normalize(v), zeros });
            }
        }
        rays = next;
    }
    VCone { rays: rays.into_iter().map(|r| r.v).collect(), lines: lines.into_iter().map(normalize).collect() }
}

/// Whether `x` is a conic combination of `gens` plus a nonnegative vector
/// (when `plus_orthant`), within `tol` on each coordinate.
pub fn in_cone(gens: &[Vec<f64>], x: &[f64], plus_orthant: bool, tol: f64) -> bool {
    let mut p = LinearProgram::new(0);
    let lam: Vec<usize> = gens.iter().map(|_| p.add_var(0.0, f64::INFINITY, 0.0)).collect();
    let slack_lo = if plus_orthant { 0.0 } else { -tol };
    for (i, &xi) in x.iter().enumerate() {
        let mut coefs: Vec<(usize, f64)> = lam.iter().zip(gens).map(|(&v, g)| (v, g[i])).filter(|t| t.1 != 0.0).collect();
        let s = p.add_var(slack_lo, if plus_orthant { f64::INFINITY } else { tol }, 0.0);
        coefs.push((s, 1.0));
        p.add_row(coefs, Cmp::Eq, xi);
    }
    lp::solve(&p).status == LpStatus::Optimal
}

/// Whether the cone generated by `gens` contains no line.
pub fn is_pointed(gens: &[Vec<f64>]) -> bool {
    if gens.is_empty() {
        return true;
    }
    let n = gens[0].len();
    let mut p = LinearProgram::new(0);
    let lam: Vec<usize> = gens.iter().map(|_| p.add_var(0.0, 1.0, -1.0)).collect();
    for i in 0..n {
        let coefs: Vec<(usize, f64)> = lam.iter().zip(gens).map(|(&v, g)| (v, g[i])).filter(|t| t.1 != 0.0).collect();
        if !coefs.is_empty() {
            p.add_row(coefs, Cmp::Eq, 0.0);
        }
    }
    let s = lp::solve(&p);
    s.status == LpStatus::Optimal && s.value >= -1e-9
}

/// Normalizes, deduplicates and drops generators that are conic combinations of the others.
pub fn reduce_generators(gens: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for g in gens {
        if max_norm(&g) <= 1e-9 {
            continue;
        }
        let g = normalize(g);
        if !out.iter().any(|h| h.iter().zip(&g).all(|(a, b)| (a - b).abs() <= 1e-9)) {
            out.push(g);
        }
    }
    let mut i = 0;
    while i < out.len() {
        let others: Vec<Vec<f64>> = out.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
        if in_cone(&others, &out[i], false, 1e-9) {
            out.remove(i);
        } else {
            i += 1;
        }
    }
    out.sort_by(|a, b| b.iter().zip(a).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    out
}
