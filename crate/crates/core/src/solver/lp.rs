//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are stated as `min c·x` subject to linear rows and (possibly
//! infinite) variable bounds. The solver converts to standard form
//! internally, recovers the primal point by refactoring the final basis,
//! and reports row multipliers together with reduced costs so that the
//! Lagrangian dual value can be recomputed by the caller.

/// Comparison sense of a linear row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// Sparse linear row `Σ coef·x  cmp  rhs`.
#[derive(Debug, Clone)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Row {
    pub fn new(coefs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) -> Self {
        Row { coefs, cmp, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.cmp {
            Cmp::Le => (a - self.rhs).max(0.0),
            Cmp::Ge => (self.rhs - a).max(0.0),
            Cmp::Eq => (a - self.rhs).abs(),
        }
    }
}

/// A linear program `min objective·x` over rows and bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    /// Program with `n` free variables and a zero objective.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            objective: vec![0.0; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push(Row::new(coefs, cmp, rhs));
    }

    /// Largest row or bound violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for r in &self.rows {
            v = v.max(r.violation(x));
        }
        for j in 0..x.len() {
            v = v.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal value; `-inf` when unbounded, `+inf` when infeasible.
    pub value: f64,
    /// Optimal point, or a feasible point when unbounded.
    pub x: Vec<f64>,
    /// Row multipliers: `≥ 0` on `Ge` rows, `≤ 0` on `Le` rows.
    pub row_duals: Vec<f64>,
    /// `c − Aᵀy`; nonnegative at active lower bounds, nonpositive at upper.
    pub reduced_costs: Vec<f64>,
    /// Improving recession direction when unbounded.
    pub ray: Option<Vec<f64>>,
}

impl LpSolution {
    /// Lagrangian dual value `b·y + Σ bound terms` of the certificate.
    pub fn dual_value(&self, lp: &LinearProgram) -> f64 {
        let mut v = 0.0;
        for (r, y) in lp.rows.iter().zip(&self.row_duals) {
            v += r.rhs * y;
        }
        for (j, &r) in self.reduced_costs.iter().enumerate() {
            let bound = if r > 0.0 { lp.lower[j] } else { lp.upper[j] };
            // roundoff against an infinite bound is not a certificate term
            if r != 0.0 && (bound.is_finite() || r.abs() > super::OPT_TOL) {
                v += r * bound;
            }
        }
        v
    }
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

/// How an original variable is expressed through standard-form columns.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Standard {
    /// Dense constraint matrix, one row per standardized row.
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    c0: f64,
    maps: Vec<VarMap>,
    /// Index of the original row, `None` for bound rows.
    origin: Vec<Option<usize>>,
    /// Sign applied to make `b ≥ 0`.
    sign: Vec<f64>,
    cmp: Vec<Cmp>,
    n_struct: usize,
}

fn standardize(lp: &LinearProgram) -> Standard {
    let n = lp.num_vars();
    let mut maps = Vec::with_capacity(n);
    let mut ncol = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l.is_finite() {
            maps.push(VarMap { offset: l, cols: vec![(ncol, 1.0)] });
            if u.is_finite() {
                bound_rows.push((ncol, u - l));
            }
            ncol += 1;
        } else if u.is_finite() {
            maps.push(VarMap { offset: u, cols: vec![(ncol, -1.0)] });
            ncol += 1;
        } else {
            maps.push(VarMap { offset: 0.0, cols: vec![(ncol, 1.0), (ncol + 1, -1.0)] });
            ncol += 2;
        }
    }
    let mut c = vec![0.0; ncol];
    let mut c0 = 0.0;
    for j in 0..n {
        c0 += lp.objective[j] * maps[j].offset;
        for &(k, s) in &maps[j].cols {
            c[k] += lp.objective[j] * s;
        }
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut origin = Vec::new();
    let mut cmp = Vec::new();
    for (i, r) in lp.rows.iter().enumerate() {
        let mut row = vec![0.0; ncol];
        let mut rhs = r.rhs;
        for &(j, v) in &r.coefs {
            rhs -= v * maps[j].offset;
            for &(k, s) in &maps[j].cols {
                row[k] += v * s;
            }
        }
        a.push(row);
        b.push(rhs);
        origin.push(Some(i));
        cmp.push(r.cmp);
    }
    for (k, ub) in bound_rows {
        let mut row = vec![0.0; ncol];
        row[k] = 1.0;
        a.push(row);
        b.push(ub);
        origin.push(None);
        cmp.push(Cmp::Le);
    }
    let mut sign = vec![1.0; b.len()];
    for i in 0..b.len() {
        if b[i] < 0.0 {
            sign[i] = -1.0;
            b[i] = -b[i];
            for v in a[i].iter_mut() {
                *v = -*v;
            }
            cmp[i] = match cmp[i] {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
        }
    }
    Standard { a, b, c, c0, maps, origin, sign, cmp, n_struct: ncol }
}

/// Dense tableau over structural, slack and artificial columns.
struct Tableau {
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    active: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, k: usize) {
        let p = self.t[r][k];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let prow = self.t[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.t.len() {
            if i == r || !self.active[i] {
                continue;
            }
            let f = self.t[i][k];
            if f != 0.0 {
                for (v, pv) in self.t[i].iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * prhs;
                self.t[i][k] = 0.0;
            }
        }
        self.basis[r] = k;
    }

    fn reduced(&self, cost: &[f64], allowed: &[bool]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &bv) in self.basis.iter().enumerate() {
            if !self.active[i] {
                continue;
            }
            let cb = cost[bv];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(&self.t[i]) {
                    *dj -= cb * tij;
                }
            }
        }
        for (j, a) in allowed.iter().enumerate() {
            if !a {
                d[j] = 0.0;
            }
        }
        d
    }

    /// Runs Bland's rule; returns the unbounded entering column if any.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Option<usize> {
        let max_iter = 50_000 + 200 * (self.ncols + self.t.len());
        for _ in 0..max_iter {
            let d = self.reduced(cost, allowed);
            let scale = 1.0 + cost.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let entering = (0..self.ncols).find(|&j| allowed[j] && d[j] < -COST_TOL * scale);
            let k = match entering {
                None => return None,
                Some(k) => k,
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                if !self.active[i] {
                    continue;
                }
                let a = self.t[i][k];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i].max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Some(k),
                Some((r, _)) => self.pivot(r, k),
            }
        }
        None
    }
}

/// Solves `B z = rhs` (or `Bᵀ z = rhs`) by Gaussian elimination with
/// partial pivoting. Returns `None` when `B` is numerically singular.
fn dense_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let (p, pv) = (col..n)
            .map(|i| (i, m[i][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if pv < 1e-13 {
            return None;
        }
        m.swap(col, p);
        rhs.swap(col, p);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[i][k] -= f * m[col][k];
                }
                rhs[i] -= f * rhs[col];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * z[k]).sum();
        z[i] = (rhs[i] - s) / m[i][i];
    }
    Some(z)
}

fn to_original(maps: &[VarMap], z: &[f64]) -> Vec<f64> {
    maps.iter()
        .map(|m| m.offset + m.cols.iter().map(|&(k, s)| s * z[k]).sum::<f64>())
        .collect()
}

fn direction_to_original(maps: &[VarMap], z: &[f64]) -> Vec<f64> {
    maps.iter()
        .map(|m| m.cols.iter().map(|&(k, s)| s * z[k]).sum::<f64>())
        .collect()
}

/// Solves the linear program. Deterministic for a given input ordering.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars();
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] + FEAS_TOL {
            return infeasible(lp);
        }
    }
    let st = standardize(lp);
    let m = st.a.len();
    let ns = st.n_struct;

    // Column layout: structural | slack/surplus | artificial.
    let mut slack_of = vec![None; m];
    let mut art_of = vec![None; m];
    let mut ncols = ns;
    for i in 0..m {
        if st.cmp[i] != Cmp::Eq {
            slack_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let first_art = ncols;
    for i in 0..m {
        if st.cmp[i] != Cmp::Le {
            art_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut full = vec![vec![0.0; ncols]; m];
    let mut basis = vec![0; m];
    for i in 0..m {
        full[i][..ns].copy_from_slice(&st.a[i]);
        if let Some(s) = slack_of[i] {
            full[i][s] = if st.cmp[i] == Cmp::Le { 1.0 } else { -1.0 };
        }
        if let Some(a) = art_of[i] {
            full[i][a] = 1.0;
            basis[i] = a;
        } else {
            basis[i] = slack_of[i].unwrap();
        }
    }
    let original_cols = full.clone();
    let mut tab = Tableau {
        t: full,
        rhs: st.b.clone(),
        basis,
        ncols,
        active: vec![true; m],
    };

    // Phase 1.
    if first_art < ncols {
        let mut cost1 = vec![0.0; ncols];
        for c in cost1.iter_mut().skip(first_art) {
            *c = 1.0;
        }
        let allowed = vec![true; ncols];
        tab.run(&cost1, &allowed);
        let infeas: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= first_art)
            .map(|i| tab.rhs[i])
            .sum();
        let bscale = 1.0 + st.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > FEAS_TOL * bscale {
            return infeasible(lp);
        }
        for i in 0..m {
            if tab.basis[i] >= first_art {
                let k = (0..first_art).find(|&j| tab.t[i][j].abs() > 1e-7);
                match k {
                    Some(k) => tab.pivot(i, k),
                    None => tab.active[i] = false,
                }
            }
        }
    }

    // Phase 2.
    let mut cost2 = vec![0.0; ncols];
    cost2[..ns].copy_from_slice(&st.c);
    let mut allowed = vec![true; ncols];
    for a in allowed.iter_mut().skip(first_art) {
        *a = false;
    }
    let unbounded_col = tab.run(&cost2, &allowed);

    // Recover the basic solution from the original columns.
    let rows: Vec<usize> = (0..m).filter(|&i| tab.active[i]).collect();
    let bmat: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| rows.iter().map(|&r| original_cols[i][tab.basis[r]]).collect())
        .collect();
    let brhs: Vec<f64> = rows.iter().map(|&i| st.b[i]).collect();
    let mut z = vec![0.0; ncols];
    match dense_solve(bmat.clone(), brhs) {
        Some(xb) => {
            for (p, &r) in rows.iter().enumerate() {
                z[tab.basis[r]] = xb[p].max(0.0);
            }
        }
        None => {
            for &r in &rows {
                z[tab.basis[r]] = tab.rhs[r].max(0.0);
            }
        }
    }
    let x = to_original(&st.maps, &z[..ns]);

    if let Some(k) = unbounded_col {
        let mut dz = vec![0.0; ncols];
        dz[k] = 1.0;
        for &r in &rows {
            dz[tab.basis[r]] = -tab.t[r][k];
        }
        let ray = direction_to_original(&st.maps, &dz[..ns]);
        return LpSolution {
            status: LpStatus::Unbounded,
            value: f64::NEG_INFINITY,
            x,
            row_duals: vec![0.0; lp.rows.len()],
            reduced_costs: vec![0.0; n],
            ray: Some(ray),
        };
    }

    // Duals from Bᵀ y = c_B on the standardized rows.
    let bt: Vec<Vec<f64>> = (0..rows.len())
        .map(|p| rows.iter().map(|&i| original_cols[i][tab.basis[rows[p]]]).collect())
        .collect();
    let cb: Vec<f64> = rows.iter().map(|&r| cost2[tab.basis[r]]).collect();
    let mut row_duals = vec![0.0; lp.rows.len()];
    if let Some(y) = dense_solve(bt, cb) {
        for (p, &i) in rows.iter().enumerate() {
            if let Some(orig) = st.origin[i] {
                row_duals[orig] = y[p] * st.sign[i];
            }
        }
    }
    for (r, y) in lp.rows.iter().zip(row_duals.iter_mut()) {
        *y = match r.cmp {
            Cmp::Ge => y.max(0.0),
            Cmp::Le => y.min(0.0),
            Cmp::Eq => *y,
        };
    }
    let mut reduced_costs = lp.objective.clone();
    for (r, &y) in lp.rows.iter().zip(&row_duals) {
        if y != 0.0 {
            for &(j, a) in &r.coefs {
                reduced_costs[j] -= a * y;
            }
        }
    }
    let value = st.c0 + st.c.iter().zip(&z[..ns]).map(|(c, v)| c * v).sum::<f64>();
    LpSolution {
        status: LpStatus::Optimal,
        value,
        x,
        row_duals,
        reduced_costs,
        ray: None,
    }
}

fn infeasible(lp: &LinearProgram) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        value: f64::INFINITY,
        x: vec![0.0; lp.num_vars()],
        row_duals: vec![0.0; lp.rows.len()],
        reduced_costs: vec![0.0; lp.num_vars()],
        ray: None,
    }
}
