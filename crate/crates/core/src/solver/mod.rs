//! Optimization engine shared by every higher module.
//!
//! Linear programs go through the dense simplex in [`lp`]; programs with
//! nonlinear convex constraints go through the Kelley outer approximation
//! in [`cutting`], which repeatedly calls the simplex.

pub mod cutting;
pub mod lp;

use std::sync::Arc;

pub use cutting::solve_cutting_plane;
pub use lp::{Cmp, LinearProgram, LpSolution, LpStatus, Row};

/// Primal feasibility tolerance of the LP path.
pub const FEAS_TOL: f64 = 1e-9;
/// Optimality tolerance of the LP path.
pub const OPT_TOL: f64 = 1e-9;
/// Value tolerance of the cutting-plane path.
pub const CP_TOL: f64 = 1e-6;
/// Iteration cap of the cutting-plane path.
pub const CP_MAX_ITER: usize = 10_000;
/// Number of box doublings attempted before giving up on localization.
pub const MAX_DOUBLINGS: u32 = 10;

/// A convex function of the program variables with one subgradient.
pub trait ConvexFn: Send + Sync {
    /// Value and sparse subgradient at `x`; `None` outside the domain.
    /// The value may be `+inf` when it overflows.
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<(usize, f64)>)>;
}

/// Nonlinear constraint `f(x) ≤ 0`, satisfied when `f(x) ≤ tol`.
#[derive(Clone)]
pub struct NlConstraint {
    pub f: Arc<dyn ConvexFn>,
    pub tol: f64,
}

/// Linear objective over linear rows, bounds and convex constraints.
#[derive(Clone)]
pub struct ConvexProgram {
    pub lp: LinearProgram,
    pub nonlinear: Vec<NlConstraint>,
    /// Variables that receive the artificial localization box.
    pub boxed: Vec<bool>,
}

impl ConvexProgram {
    pub fn new(lp: LinearProgram) -> Self {
        let n = lp.num_vars();
        ConvexProgram { lp, nonlinear: Vec::new(), boxed: vec![true; n] }
    }

    pub fn is_linear(&self) -> bool {
        self.nonlinear.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.lp.num_vars()
    }

    /// Adds a variable; `boxed` controls localization on the cutting-plane path.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64, boxed: bool) -> usize {
        self.boxed.push(boxed);
        self.lp.add_var(lower, upper, cost)
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.lp.add_row(coefs, cmp, rhs);
    }

    pub fn add_nonlinear(&mut self, f: Arc<dyn ConvexFn>, tol: f64) {
        self.nonlinear.push(NlConstraint { f, tol });
    }

    /// Largest violation of any linear or nonlinear constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v = self.lp.max_violation(x);
        for c in &self.nonlinear {
            match c.f.eval(x) {
                Some((val, _)) => v = v.max(val),
                None => return f64::INFINITY,
            }
        }
        v
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.lp.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Status {
    Optimal,
    Unbounded,
    Infeasible,
    ToleranceReached,
}

/// Result of a solve on either path.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    /// Optimal value as an extended real.
    pub value: f64,
    /// Minimizer, present iff the value is attained.
    pub optimizer: Option<Vec<f64>>,
    /// Best point found, also when the value is not attained.
    pub point: Vec<f64>,
    /// Row multipliers (LP path only).
    pub duals: Option<Vec<f64>>,
    pub attained: bool,
    /// Improving recession direction when unbounded.
    pub direction: Option<Vec<f64>>,
    pub iterations: usize,
}

impl SolveResult {
    fn from_lp(s: LpSolution) -> Self {
        match s.status {
            LpStatus::Optimal => SolveResult {
                status: Status::Optimal,
                value: s.value,
                optimizer: Some(s.x.clone()),
                point: s.x,
                duals: Some(s.row_duals),
                attained: true,
                direction: None,
                iterations: 1,
            },
            LpStatus::Unbounded => SolveResult {
                status: Status::Unbounded,
                value: f64::NEG_INFINITY,
                optimizer: None,
                point: s.x,
                duals: None,
                attained: false,
                direction: s.ray,
                iterations: 1,
            },
            LpStatus::Infeasible => SolveResult {
                status: Status::Infeasible,
                value: f64::INFINITY,
                optimizer: None,
                point: s.x,
                duals: None,
                attained: false,
                direction: None,
                iterations: 1,
            },
        }
    }
}

/// Solves a linear program given as a [`ConvexProgram`] without nonlinear parts.
pub fn solve_lp(p: &ConvexProgram) -> SolveResult {
    debug_assert!(p.is_linear());
    SolveResult::from_lp(lp::solve(&p.lp))
}

/// Dispatches to the LP path when possible and to cutting planes otherwise.
pub fn solve(p: &ConvexProgram, box_hint: f64) -> SolveResult {
    if p.is_linear() {
        solve_lp(p)
    } else {
        solve_cutting_plane(p, box_hint)
    }
}
