//! Lifted polyhedral representation `{X : ∃v, rows(X, v)}` of acceptance sets.

use super::cone::{double_description, reduce_generators};
use crate::expr::{Affine, Expr, LinVar};
use crate::solver::{lp, Cmp, ConvexProgram, LinearProgram, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PVar {
    X(usize),
    Aux(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyRow {
    pub coefs: Vec<(PVar, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// Which set derived from `A` to embed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    /// `A` itself.
    Set,
    /// The recession cone `A^∞`.
    Recession,
    /// `K(A) = cl cone(A)`; the payload is the program index of the scaling variable `s ≥ 0`.
    Conified(usize),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolyRep {
    pub n: usize,
    pub n_aux: usize,
    pub rows: Vec<PolyRow>,
}

impl PolyRep {
    pub fn new(n: usize) -> Self {
        PolyRep { n, n_aux: 0, rows: Vec::new() }
    }

    pub fn aux(&mut self) -> PVar {
        self.n_aux += 1;
        PVar::Aux(self.n_aux - 1)
    }

    pub fn row(&mut self, coefs: Vec<(PVar, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push(PolyRow { coefs, cmp, rhs });
    }

    /// Adds `expr(X) ≤ 0` for a piecewise-linear expression; `false` if it is not one.
    pub fn add_expr_le0(&mut self, e: &Expr, probs: &[f64]) -> bool {
        let Some(form) = e.epigraph(probs) else {
            return false;
        };
        let base = self.n_aux;
        self.n_aux += form.aux;
        let map = |a: &Affine| -> Option<(Vec<(PVar, f64)>, f64)> {
            let mut coefs = Vec::new();
            for &(v, c) in &a.normalized().terms {
                coefs.push(match v {
                    LinVar::S(i) => (PVar::X(i), c),
                    LinVar::Aux(k) => (PVar::Aux(base + k), c),
                    LinVar::X(_) => return None,
                });
            }
            Some((coefs, a.constant))
        };
        let mut pending = Vec::new();
        for a in std::iter::once(&form.value).chain(&form.rows) {
            let Some((coefs, c)) = map(a) else {
                self.n_aux = base;
                return false;
            };
            pending.push(PolyRow { coefs, cmp: Cmp::Le, rhs: -c });
        }
        self.rows.extend(pending);
        true
    }

    pub fn is_conic(&self) -> bool {
        self.rows.iter().all(|r| r.rhs == 0.0)
    }

    /// Adds the view of the set over the payoff variables `w` (program indices).
    pub fn embed(&self, p: &mut ConvexProgram, w: &[usize], view: View) {
        let aux: Vec<usize> = (0..self.n_aux).map(|_| p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0, false)).collect();
        for r in &self.rows {
            let mut coefs: Vec<(usize, f64)> = r
                .coefs
                .iter()
                .map(|&(v, c)| match v {
                    PVar::X(i) => (w[i], c),
                    PVar::Aux(k) => (aux[k], c),
                })
                .collect();
            let rhs = match view {
                View::Set => r.rhs,
                View::Recession => 0.0,
                View::Conified(s) => {
                    if r.rhs != 0.0 {
                        coefs.push((s, -r.rhs));
                    }
                    0.0
                }
            };
            p.add_row(coefs, r.cmp, rhs);
        }
    }

    /// Whether the fixed payoff `x` lies in the view, allowing each row a violation of `tol`.
    pub fn contains(&self, x: &[f64], view: View, tol: f64) -> bool {
        let mut p = ConvexProgram::new(LinearProgram::new(0));
        let w: Vec<usize> = x.iter().map(|&v| p.add_var(v, v, 0.0, false)).collect();
        let s = match view {
            View::Conified(_) => View::Conified(p.add_var(0.0, f64::INFINITY, 0.0, false)),
            v => v,
        };
        self.embed(&mut p, &w, s);
        let slack = p.add_var(0.0, f64::INFINITY, 1.0, false);
        let rows = std::mem::take(&mut p.lp.rows);
        for mut r in rows {
            match r.cmp {
                Cmp::Ge => {
                    r.coefs.push((slack, 1.0));
                    p.add_row(r.coefs, Cmp::Ge, r.rhs);
                }
                Cmp::Le => {
                    r.coefs.push((slack, -1.0));
                    p.add_row(r.coefs, Cmp::Le, r.rhs);
                }
                Cmp::Eq => {
                    let mut lo = r.coefs.clone();
                    lo.push((slack, 1.0));
                    p.add_row(lo, Cmp::Ge, r.rhs);
                    r.coefs.push((slack, -1.0));
                    p.add_row(r.coefs, Cmp::Le, r.rhs);
                }
            }
        }
        let sol = lp::solve(&p.lp);
        sol.status == LpStatus::Optimal && sol.value <= tol
    }

    /// Generators of `K(A) = cl cone(A)` by double description of the lifted
    /// cone `{(X, v, s) : rows with rhs·s, s ≥ 0}` followed by projection.
    pub fn conified_generators(&self) -> Vec<Vec<f64>> {
        let d = self.n + self.n_aux + 1;
        let col = |v: PVar| match v {
            PVar::X(i) => i,
            PVar::Aux(k) => self.n + k,
        };
        let mut ineqs = Vec::new();
        let mut eqs = Vec::new();
        for r in &self.rows {
            let mut a = vec![0.0; d];
            for &(v, c) in &r.coefs {
                a[col(v)] += c;
            }
            a[d - 1] -= r.rhs;
            match r.cmp {
                Cmp::Ge => ineqs.push(a),
                Cmp::Le => ineqs.push(a.iter().map(|v| -v).collect()),
                Cmp::Eq => eqs.push(a),
            }
        }
        let mut s_row = vec![0.0; d];
        s_row[d - 1] = 1.0;
        ineqs.push(s_row);
        let cone = double_description(d, &ineqs, &eqs);
        let mut gens: Vec<Vec<f64>> = cone.rays.iter().map(|r| r[..self.n].to_vec()).collect();
        for l in &cone.lines {
            gens.push(l[..self.n].to_vec());
            gens.push(l[..self.n].iter().map(|v| -v).collect());
        }
        for i in 0..self.n {
            let mut e = vec![0.0; self.n];
            e[i] = 1.0;
            gens.push(e);
        }
        reduce_generators(gens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn scripted_wedge_compiles_and_generates() {
        let mut rep = PolyRep::new(2);
        assert!(rep.add_expr_le0(&parse("max(-s1, 0) - s2").unwrap(), &[0.5, 0.5]));
        assert!(rep.contains(&[-1.0, 1.0], View::Set, 1e-9));
        assert!(!rep.contains(&[-1.0, 0.5], View::Set, 1e-9));
        let g = rep.conified_generators();
        assert_eq!(g, vec![vec![1.0, 0.0], vec![-1.0, 1.0]]);
    }

    #[test]
    fn recession_drops_floors() {
        let mut rep = PolyRep::new(2);
        rep.row(vec![(PVar::X(0), 0.5), (PVar::X(1), 0.5)], Cmp::Ge, -1.0);
        assert!(rep.contains(&[-1.0, 0.5], View::Set, 1e-9));
        assert!(!rep.contains(&[-1.0, 0.5], View::Recession, 1e-9));
        assert!(rep.contains(&[-1.0, 0.5], View::Conified(0), 1e-9));
    }
}
