//! Price deflators, consistency, superreplication duality and the finite-state FTAP.

use crate::acceptance::{cone, AcceptanceSet, ConeBase, View};
use crate::error::{Error, Result};
use crate::gooddeal::{self, DealKind, MARGIN_TOL};
use crate::linalg::max_norm;
use crate::model::{Market, Payoff};
use crate::pricing::{self, MCPInterval};
use crate::program::{add_market, program, MarketView};
use crate::solver::{self, lp, Cmp, ConvexProgram, LinearProgram, LpStatus, Status, CP_TOL};
use rayon::prelude::*;
use serde::Serialize;

/// Deflators with `γ_{π,M}` above this bound are treated as infinite.
pub const GAMMA_BOUND: f64 = 1e6;
/// Initial max-norm bound on deflators.
pub const DEFLATOR_BOX: f64 = 1e3;
const PROBE_STEP: f64 = 1e-4;
const DUAL_MAX_ITER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    NotDeflator,
    Deflator,
    WeaklyConsistent,
    Consistent,
    StrictlyConsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeflatorReport {
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    #[serde(rename = "gamma_piM", serialize_with = "crate::report::ext_real")]
    pub gamma_pi_m: f64,
    #[serde(rename = "gamma_A", serialize_with = "crate::report::ext_real")]
    pub gamma_a: f64,
    pub classification: Classification,
    /// Minimum of `E[DX]` over acceptable payoffs of unit max-norm
    /// (over the normalized cone generators for conic `A`).
    #[serde(serialize_with = "crate::report::ext_real")]
    pub strict_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DualMode {
    /// Supremum over all deflators of `E[DX] − γ_{π,M}(D) + γ_A(D)`.
    Weak,
    /// Supremum over strictly consistent deflators of `E[DX] − γ_{π,M}(D)`.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualResult {
    pub mode: DualMode,
    #[serde(serialize_with = "crate::report::ext_real")]
    pub value: f64,
    pub attained: bool,
    pub deflator: Vec<f64>,
    /// Every piece was solved on the LP path.
    pub exact: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualMcp {
    pub interval: MCPInterval,
    pub primal: MCPInterval,
    pub strict_inclusion: bool,
    pub deflator: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    EquivalenceHolds,
    PreconditionFailed,
    CounterexampleDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Preconditions {
    pub pointed: bool,
    pub conic_or_conified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtapReport {
    pub primal_no_scalable: bool,
    pub deflator_found: bool,
    pub preconditions: Preconditions,
    pub verdict: Verdict,
    /// Absence of scalable good deals with respect to `K(A)`, for nonconic `A`.
    pub no_scalable_wrt_conification: Option<bool>,
    pub deflator: Option<Vec<f64>>,
    pub witness: Option<Payoff>,
}

/// A globally valid linear inequality in `D` produced by an evaluation.
#[derive(Debug, Clone)]
enum Cut {
    /// `E[DZ] − cost ≤ γ(D)`.
    Point { z: Payoff, cost: f64 },
    /// `E[DR] ≤ cost` is necessary for finiteness.
    Ray { r: Payoff, cost: f64 },
}

#[derive(Debug, Clone)]
struct Eval {
    value: f64,
    cut: Option<Cut>,
    linear: bool,
}

/// Recession values below `−screen_tol` certify an infinite conjugate.
fn screen_tol(linear: bool) -> f64 {
    if linear {
        1e-9
    } else {
        0.1 * CP_TOL
    }
}

fn snap(v: &[f64]) -> Vec<f64> {
    let s = max_norm(v).max(1e-300);
    v.iter().map(|x| if (x / s).abs() < 1e-9 { 0.0 } else { *x }).collect()
}

fn extract(r: &solver::SolveResult, idx: &[usize]) -> Vec<f64> {
    let src = r.optimizer.as_ref().unwrap_or(&r.point);
    idx.iter().map(|&j| src[j]).collect()
}

/// `γ_{π,M}(Y)` with a cut. Finiteness is screened on `M^∞ ∩ [−1,1]ⁿ` first.
fn conjugate(m: &Market, y: &[f64]) -> Result<Eval> {
    let p = m.probs();
    let mut rec = program();
    let mv = add_market(&mut rec, m, MarketView::Recession)?;
    rec.lp.objective[mv.cost] = 1.0;
    for (w, &z) in mv.z.iter().enumerate() {
        rec.lp.lower[z] = -1.0;
        rec.lp.upper[z] = 1.0;
        rec.lp.objective[z] = -p[w] * y[w];
    }
    let linear = rec.is_linear();
    let r = solver::solve(&rec, 1.0);
    if matches!(r.status, Status::Optimal | Status::ToleranceReached) && r.value < -screen_tol(linear) {
        let cost = extract(&r, &[mv.cost])[0];
        return Ok(Eval { value: f64::INFINITY, cut: Some(Cut::Ray { r: snap(&extract(&r, &mv.z)), cost }), linear });
    }
    if m.is_conic() {
        return Ok(Eval { value: 0.0, cut: Some(Cut::Point { z: vec![0.0; y.len()], cost: 0.0 }), linear });
    }
    let mut q = program();
    let mv = add_market(&mut q, m, MarketView::Set)?;
    q.lp.objective[mv.cost] = 1.0;
    for (w, &z) in mv.z.iter().enumerate() {
        q.lp.objective[z] = -p[w] * y[w];
    }
    let linear = linear && q.is_linear();
    let r = solver::solve(&q, 10.0);
    Ok(match r.status {
        Status::Unbounded => {
            let cut = r.direction.as_ref().map(|d| {
                let rr: Vec<f64> = mv.z.iter().map(|&j| d[j]).collect();
                let s = max_norm(&rr).max(1e-300);
                Cut::Ray { r: snap(&rr.iter().map(|v| v / s).collect::<Vec<_>>()), cost: d[mv.cost] / s }
            });
            Eval { value: f64::INFINITY, cut, linear }
        }
        Status::Infeasible => return Err(Error::InternalInconsistency("zero portfolio rejected by the market".into())),
        _ => {
            let pt = &r.point;
            Eval {
                value: -r.value,
                cut: Some(Cut::Point { z: mv.z.iter().map(|&j| pt[j]).collect(), cost: pt[mv.cost] }),
                linear,
            }
        }
    })
}

/// `γ_A(Y)` with a cut: `Point` gives `γ_A(D) ≤ E[DW]`, `Ray` requires `E[DV] ≥ 0`.
fn support(a: &AcceptanceSet, probs: &[f64], y: &[f64]) -> Result<Eval> {
    let n = probs.len();
    let build = |view: View, bound: f64| -> Result<(ConvexProgram, Vec<usize>)> {
        let mut p = program();
        let w: Vec<usize> = (0..n).map(|i| p.add_var(-bound, bound, probs[i] * y[i], true)).collect();
        a.embed(probs, &mut p, &w, view)?;
        Ok((p, w))
    };
    let (rec, w) = build(View::Recession, 1.0)?;
    let linear = rec.is_linear();
    let r = solver::solve(&rec, 1.0);
    if matches!(r.status, Status::Optimal | Status::ToleranceReached) && r.value < -screen_tol(linear) {
        return Ok(Eval { value: f64::NEG_INFINITY, cut: Some(Cut::Ray { r: snap(&extract(&r, &w)), cost: 0.0 }), linear });
    }
    if a.is_conic(probs) || y.iter().all(|&v| v == 0.0) {
        return Ok(Eval { value: 0.0, cut: Some(Cut::Point { z: vec![0.0; n], cost: 0.0 }), linear });
    }
    let (p, w) = build(View::Set, f64::INFINITY)?;
    let linear = linear && p.is_linear();
    let r = solver::solve(&p, 10.0);
    Ok(match r.status {
        Status::Unbounded => {
            let cut = r.direction.as_ref().map(|d| Cut::Ray { r: snap(&w.iter().map(|&j| d[j]).collect::<Vec<_>>()), cost: 0.0 });
            Eval { value: f64::NEG_INFINITY, cut, linear }
        }
        Status::Infeasible => return Err(Error::InternalInconsistency("acceptance set excludes zero".into())),
        _ => Eval { value: r.value.min(0.0), cut: Some(Cut::Point { z: extract(&r, &w), cost: 0.0 }), linear },
    })
}

fn check_deflator(m: &Market, d: &[f64]) -> Result<()> {
    if d.len() != m.n_states() {
        return Err(Error::Dimension { expected: m.n_states(), got: d.len() });
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("deflator must be finite".into()));
    }
    Ok(())
}

/// `γ_{π,M}(Y) = sup_{X∈M} E[XY] − π(X)`.
pub fn gamma_pi_m(m: &Market, y: &[f64]) -> Result<f64> {
    check_deflator(m, y)?;
    let v = conjugate(m, y)?.value;
    Ok(if v > GAMMA_BOUND { f64::INFINITY } else { v })
}

fn generators(a: &AcceptanceSet, probs: &[f64]) -> Result<Vec<Vec<f64>>> {
    match a.cone_base(probs)? {
        ConeBase::Generators(g) => Ok(g),
        ConeBase::NotPolyhedral => Err(Error::NotPolyhedral),
    }
}

/// `min E[DX]` over `X ∈ A` with `‖X‖_∞ = 1`.
fn unit_sphere_margin(a: &AcceptanceSet, probs: &[f64], d: &[f64]) -> Result<f64> {
    let n = probs.len();
    let jobs: Vec<(usize, f64)> = (0..n).flat_map(|i| [(i, 1.0), (i, -1.0)]).collect();
    let vals: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let mut p = program();
            let w: Vec<usize> = (0..n).map(|j| p.add_var(-1.0, 1.0, probs[j] * d[j], true)).collect();
            p.lp.lower[w[i]] = s;
            p.lp.upper[w[i]] = s;
            a.embed(probs, &mut p, &w, View::Set)?;
            let r = solver::solve(&p, 1.0);
            Ok(match r.status {
                Status::Infeasible => f64::INFINITY,
                Status::Unbounded => f64::NEG_INFINITY,
                _ => r.value,
            })
        })
        .collect();
    vals.into_iter().try_fold(f64::INFINITY, |acc, v| Ok(acc.min(v?)))
}

/// Whether `A` meets the cone spanned by `tight` only at zero.
fn meets_face_trivially(a: &AcceptanceSet, probs: &[f64], tight: &[Vec<f64>]) -> Result<bool> {
    if tight.is_empty() {
        return Ok(true);
    }
    let n = probs.len();
    if a.poly(probs).is_some() {
        let mut p = program();
        let lam: Vec<usize> = tight.iter().map(|_| p.add_var(0.0, 1.0, -1.0, false)).collect();
        p.add_row(lam.iter().map(|&l| (l, 1.0)).collect(), Cmp::Le, 1.0);
        let w: Vec<usize> = (0..n)
            .map(|i| {
                let w = p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0, false);
                let mut coefs = vec![(w, 1.0)];
                coefs.extend(lam.iter().zip(tight).map(|(&l, g)| (l, -g[i])));
                p.add_row(coefs, Cmp::Eq, 0.0);
                w
            })
            .collect();
        a.embed(probs, &mut p, &w, View::Set)?;
        let r = solver::solve(&p, 1.0);
        return Ok(!(r.status == Status::Optimal && -r.value > 1e-7));
    }
    let mut probes: Vec<Vec<f64>> = tight.to_vec();
    let centroid: Vec<f64> = (0..n).map(|i| tight.iter().map(|g| g[i]).sum::<f64>() / tight.len() as f64).collect();
    probes.push(centroid);
    Ok(probes.iter().all(|g| {
        let x: Vec<f64> = g.iter().map(|v| v * PROBE_STEP).collect();
        !a.contains(probs, &x, 0.0)
    }))
}

/// Classifies `D` as a deflator of increasing strength.
pub fn classify_deflator(m: &Market, a: &AcceptanceSet, d: &[f64]) -> Result<DeflatorReport> {
    check_deflator(m, d)?;
    let probs = m.probs();
    let gamma_pi_m = gamma_pi_m(m, d)?;
    let gamma_a = support(a, probs, d)?.value;
    let mut report = DeflatorReport {
        d: d.to_vec(),
        gamma_pi_m,
        gamma_a,
        classification: Classification::NotDeflator,
        strict_margin: f64::NAN,
    };
    if gamma_pi_m == f64::INFINITY {
        return Ok(report);
    }
    report.classification = if gamma_a == f64::NEG_INFINITY {
        Classification::Deflator
    } else if gamma_a < -1e-9 {
        Classification::WeaklyConsistent
    } else {
        Classification::Consistent
    };
    if report.classification != Classification::Consistent {
        return Ok(report);
    }
    let gens = generators(a, probs)?;
    let on_gens = gens.iter().map(|g| m.space.pairing(d, g)).fold(f64::INFINITY, f64::min);
    let strict = if a.is_conic(probs) {
        report.strict_margin = on_gens;
        on_gens > MARGIN_TOL
    } else {
        let margin = unit_sphere_margin(a, probs, d)?;
        report.strict_margin = margin;
        let tight: Vec<Vec<f64>> = gens.into_iter().filter(|g| m.space.pairing(d, g) <= MARGIN_TOL).collect();
        margin > MARGIN_TOL && (on_gens > MARGIN_TOL || meets_face_trivially(a, probs, &tight)?)
    };
    if strict {
        report.classification = Classification::StrictlyConsistent;
    }
    Ok(report)
}

fn pairing_row(probs: &[f64], d_vars: &[usize], z: &[f64]) -> Vec<(usize, f64)> {
    d_vars.iter().zip(z).zip(probs).filter(|((_, zi), _)| **zi != 0.0).map(|((&v, &zi), &p)| (v, p * zi)).collect()
}

/// Maximizes the minimal normalized pairing with the generators of `K(A)`
/// subject to `γ_{π,M}(D) ≤ GAMMA_BOUND` and `0 ≤ D ≤ DEFLATOR_BOX`.
pub fn find_strictly_consistent_deflator(m: &Market, a: &AcceptanceSet) -> Result<Option<DeflatorReport>> {
    let probs = m.probs();
    let gens = generators(a, probs)?;
    if !cone::is_pointed(&gens) {
        return Err(Error::PointednessFailed);
    }
    let n = m.n_states();
    let mut lp = LinearProgram::new(0);
    let d: Vec<usize> = (0..n).map(|_| lp.add_var(0.0, DEFLATOR_BOX, 0.0)).collect();
    let eps = lp.add_var(f64::NEG_INFINITY, DEFLATOR_BOX, -1.0);
    for g in &gens {
        let mut coefs = pairing_row(probs, &d, g);
        coefs.push((eps, -1.0));
        lp.add_row(coefs, Cmp::Ge, 0.0);
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..DUAL_MAX_ITER {
        let sol = lp::solve(&lp);
        if sol.status != LpStatus::Optimal {
            break;
        }
        let dv: Vec<f64> = d.iter().map(|&j| sol.x[j]).collect();
        let e = sol.x[eps];
        let c = conjugate(m, &dv)?;
        if c.value <= GAMMA_BOUND {
            best = Some((dv, e));
            break;
        }
        match c.cut {
            Some(Cut::Ray { r, cost }) => lp.add_row(pairing_row(probs, &d, &r), Cmp::Le, cost),
            Some(Cut::Point { z, cost }) => lp.add_row(pairing_row(probs, &d, &z), Cmp::Le, GAMMA_BOUND + cost),
            None => break,
        }
    }
    let Some((dv, e)) = best else {
        return Ok(None);
    };
    if e > MARGIN_TOL || (e >= -1e-9 && !a.is_conic(probs)) {
        let report = classify_deflator(m, a, &dv)?;
        if report.classification == Classification::StrictlyConsistent {
            return Ok(Some(report));
        }
    }
    Ok(None)
}

struct DualState {
    lp: LinearProgram,
    d: Vec<usize>,
    g: usize,
    s: Option<usize>,
}

impl DualState {
    /// Adds the cut and reports whether it separates the master solution `at`.
    fn add(&mut self, probs: &[f64], c: &Cut, support: bool, at: &[f64]) -> bool {
        let before = self.lp.rows.len();
        match (c, support) {
            (Cut::Point { z, cost }, false) => {
                let mut coefs = pairing_row(probs, &self.d, z);
                coefs.push((self.g, -1.0));
                self.lp.add_row(coefs, Cmp::Le, *cost);
            }
            (Cut::Ray { r, cost }, false) => self.lp.add_row(pairing_row(probs, &self.d, r), Cmp::Le, *cost),
            (Cut::Point { z, .. }, true) => {
                let mut coefs: Vec<(usize, f64)> = pairing_row(probs, &self.d, z).into_iter().map(|(j, v)| (j, -v)).collect();
                coefs.push((self.s.unwrap(), 1.0));
                self.lp.add_row(coefs, Cmp::Le, 0.0);
            }
            (Cut::Ray { r, .. }, true) => self.lp.add_row(pairing_row(probs, &self.d, r), Cmp::Ge, 0.0),
        }
        self.lp.rows[before..].iter().any(|r| r.violation(at) > 1e-10 * (1.0 + r.rhs.abs() + r.activity(at).abs()))
    }
}

/// Dual superreplication by cutting planes in deflator space with a box
/// on `D` that doubles while the optimizer sits on it.
pub fn dual_superreplication(m: &Market, a: &AcceptanceSet, x: &[f64], mode: DualMode) -> Result<DualResult> {
    pricing::check_payoff(m, x)?;
    let probs = m.probs();
    let n = m.n_states();
    let gens = match mode {
        DualMode::Strict => Some(generators(a, probs)?),
        DualMode::Weak => None,
    };
    let mut lp = LinearProgram::new(0);
    let d: Vec<usize> = (0..n).map(|i| lp.add_var(0.0, DEFLATOR_BOX, -probs[i] * x[i])).collect();
    let g = lp.add_var(0.0, f64::INFINITY, 1.0);
    let s = match mode {
        DualMode::Weak => Some(lp.add_var(f64::NEG_INFINITY, 0.0, -1.0)),
        DualMode::Strict => None,
    };
    if let Some(gens) = &gens {
        for gen in gens {
            lp.add_row(pairing_row(probs, &d, gen), Cmp::Ge, 0.0);
        }
    }
    let mut st = DualState { lp, d, g, s };
    let objective = |dv: &[f64], c: &Eval, sp: Option<&Eval>| -> f64 {
        let base = m.space.pairing(dv, x) - c.value;
        match sp {
            Some(e) => base + e.value,
            None => base,
        }
    };

    let mut bound = DEFLATOR_BOX;
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut exact = true;
    let mut iterations = 0usize;
    let mut history: Vec<f64> = Vec::new();
    let mut pinned = false;
    for doubling in 0..=solver::MAX_DOUBLINGS {
        let mut box_best = (f64::NEG_INFINITY, vec![0.0; n]);
        let mut master_feasible = true;
        for _ in 0..DUAL_MAX_ITER {
            iterations += 1;
            let sol = lp::solve(&st.lp);
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => {
                    master_feasible = false;
                    break;
                }
                status => return Err(Error::InternalInconsistency(format!("deflator master problem is {status:?}"))),
            }
            let upper = -sol.value;
            let dv: Vec<f64> = st.d.iter().map(|&j| sol.x[j]).collect();
            let c = conjugate(m, &dv)?;
            let sp = match mode {
                DualMode::Weak => Some(support(a, probs, &dv)?),
                DualMode::Strict => None,
            };
            exact &= c.linear && sp.as_ref().map_or(true, |e| e.linear);
            let f = objective(&dv, &c, sp.as_ref());
            if f > box_best.0 {
                box_best = (f, dv.clone());
            }
            if box_best.0.is_finite() && upper - box_best.0 <= 1e-9 * (1.0 + box_best.0.abs()) {
                break;
            }
            let mut added = false;
            if let Some(cut) = &c.cut {
                added |= st.add(probs, cut, false, &sol.x);
            }
            if let Some(cut) = sp.as_ref().and_then(|e| e.cut.as_ref()) {
                added |= st.add(probs, cut, true, &sol.x);
            }
            if !added {
                break;
            }
        }
        if box_best.0 > best.0 {
            best = box_best.clone();
        }
        if master_feasible && box_best.0 == f64::NEG_INFINITY && !history.is_empty() {
            // no finite evaluation on this box: nothing new was learned
            break;
        }
        if master_feasible {
            history.push(box_best.0);
        }
        pinned = !master_feasible || box_best.1.iter().any(|&v| v >= bound * (1.0 - 1e-9));
        if !pinned || doubling == solver::MAX_DOUBLINGS {
            break;
        }
        bound *= 2.0;
        for &j in &st.d {
            st.lp.upper[j] = bound;
        }
    }
    let improved_ever = history.windows(2).any(|w| w[1] > w[0] + 1e-9 * (1.0 + w[0].abs()));
    if pinned && linear_growth(&history) {
        return Ok(DualResult { mode, value: f64::INFINITY, attained: false, deflator: best.1, exact, iterations });
    }
    let mut attained = !(pinned && improved_ever);
    if let (DualMode::Strict, Some(gens), true) = (mode, &gens, attained) {
        attained = strict_attainment(m, &mut st, gens, best.0, x)?;
    }
    Ok(DualResult { mode, value: best.0, attained, deflator: best.1, exact, iterations })
}

/// Values on doubling boxes that keep growing in proportion to the box:
/// a concave objective with this profile is unbounded.
fn linear_growth(history: &[f64]) -> bool {
    let k = history.len();
    if k < 3 {
        return false;
    }
    let (d0, d1) = (history[k - 2] - history[k - 3], history[k - 1] - history[k - 2]);
    d0 > 0.0 && d1 >= 1.5 * d0 && history[k - 1] > 1e3
}

/// Whether some deflator with objective within `1e-9` of `value` is strictly
/// consistent by a margin above the threshold.
fn strict_attainment(m: &Market, st: &mut DualState, gens: &[Vec<f64>], value: f64, x: &[f64]) -> Result<bool> {
    let probs = m.probs();
    let mut lp = st.lp.clone();
    let mut coefs: Vec<(usize, f64)> = pairing_row(probs, &st.d, x);
    coefs.push((st.g, -1.0));
    lp.add_row(coefs, Cmp::Ge, value - 1e-9 * (1.0 + value.abs()));
    lp.objective = vec![0.0; lp.num_vars()];
    let eps = lp.add_var(f64::NEG_INFINITY, 1.0, -1.0);
    for g in gens {
        let mut coefs = pairing_row(probs, &st.d, g);
        coefs.push((eps, -1.0));
        lp.add_row(coefs, Cmp::Ge, 0.0);
    }
    let sol = lp::solve(&lp);
    if sol.status != LpStatus::Optimal || sol.x[eps] <= MARGIN_TOL {
        return Ok(false);
    }
    let dv: Vec<f64> = st.d.iter().map(|&j| sol.x[j]).collect();
    let f = m.space.pairing(&dv, x) - conjugate(m, &dv)?.value;
    Ok(f >= value - 1e-7 * (1.0 + value.abs()))
}

/// Dual description of `MCP(X)` via strictly consistent deflators,
/// cross-checked against the primal interval.
pub fn dual_mcp(m: &Market, a: &AcceptanceSet, x: &[f64]) -> Result<DualMcp> {
    let probs = m.probs();
    let cone_ok = matches!(a, AcceptanceSet::PositiveCone)
        || (a.is_conic(probs) && matches!(a.cone_base(probs), Ok(ConeBase::Generators(ref g)) if cone::is_pointed(g)));
    if !cone_ok {
        return Err(Error::HypothesesNotMet("acceptance set is neither the positive cone nor a pointed cone".into()));
    }
    if gooddeal::find_scalable_good_deal(m, a)?.kind != DealKind::None {
        return Err(Error::HypothesesNotMet("the market admits a scalable good deal".into()));
    }
    let dual = dual_superreplication(m, a, x, DualMode::Strict)?;
    let primal = pricing::mcp_interval(m, a, x)?;
    if (dual.value - primal.sup).abs() > 1e-6 {
        return Err(Error::InternalInconsistency(format!(
            "dual value {} differs from superreplication price {}",
            dual.value, primal.sup
        )));
    }
    let strict_inclusion = primal.right_closed && !dual.attained;
    if dual.attained && !primal.right_closed {
        return Err(Error::InternalInconsistency("dual supremum attained but the primal interval is open".into()));
    }
    let interval = MCPInterval { sup: dual.value, right_closed: dual.attained, attained_by: None, unique_attainer: false };
    Ok(DualMcp { interval, primal, strict_inclusion, deflator: dual.deflator })
}

/// Runs both sides of the finite-state FTAP and reports which implications hold.
pub fn verify_ftap(m: &Market, a: &AcceptanceSet) -> Result<FtapReport> {
    let probs = m.probs();
    let conic = a.is_conic(probs);
    let scalable = gooddeal::find_scalable_good_deal(m, a)?;
    let primal_no_scalable = scalable.kind == DealKind::None;
    let mut report = FtapReport {
        primal_no_scalable,
        deflator_found: false,
        preconditions: Preconditions { pointed: false, conic_or_conified: false },
        verdict: Verdict::PreconditionFailed,
        no_scalable_wrt_conification: None,
        deflator: None,
        witness: scalable.witness,
    };
    let gens = match a.cone_base(probs) {
        Ok(ConeBase::Generators(g)) => g,
        Ok(ConeBase::NotPolyhedral) | Err(Error::DimensionTooLarge(_)) => return Ok(report),
        Err(e) => return Err(e),
    };
    report.preconditions.conic_or_conified = true;
    report.preconditions.pointed = cone::is_pointed(&gens);
    if !report.preconditions.pointed {
        return Ok(report);
    }
    let found = find_strictly_consistent_deflator(m, a)?;
    report.deflator_found = found.is_some();
    report.deflator = found.map(|r| r.d);
    report.verdict = if conic {
        if primal_no_scalable == report.deflator_found {
            Verdict::EquivalenceHolds
        } else {
            Verdict::CounterexampleDetected
        }
    } else {
        let conified = AcceptanceSet::Cone { generators: gens };
        let wrt_k = gooddeal::find_scalable_good_deal(m, &conified)?;
        let none_wrt_k = wrt_k.kind == DealKind::None;
        report.no_scalable_wrt_conification = Some(none_wrt_k);
        if !none_wrt_k && report.witness.is_none() {
            report.witness = wrt_k.witness;
        }
        let forward = !none_wrt_k || report.deflator_found;
        let backward = !report.deflator_found || primal_no_scalable;
        if forward && backward {
            Verdict::EquivalenceHolds
        } else {
            Verdict::CounterexampleDetected
        }
    };
    Ok(report)
}
