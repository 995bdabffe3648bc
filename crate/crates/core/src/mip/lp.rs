//! Bounded dual simplex on an explicit basis inverse.
//!
//! Rows are turned into equalities `a·x − s = 0` with one logical column `s`
//! per row carrying the row bounds, so the working matrix is `[A | −I]` and
//! every basis starts from (and can fall back to) the all-logical one.
//! Infinite bounds are replaced by a large artificial box; a solution that
//! ends on such a box is reported as unbounded.

use super::MipError;
use std::time::Instant;

/// Magnitude of the artificial box placed on infinite bounds.
const ART_BOUND: f64 = 1e7;
const PRIMAL_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-7;
const DROP_TOL: f64 = 1e-12;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_STREAK: usize = 50;
/// Largest dual infeasibility absorbed by a cost shift.
const SHIFT_LIMIT: f64 = 1e-5;

/// Compressed storage in both orientations.
#[derive(Debug, Clone, Default)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from row lists of `(column, value)` (columns unique per row).
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let nrows = rows.len();
        let mut row_start = Vec::with_capacity(nrows + 1);
        let mut row_col = Vec::new();
        let mut row_val = Vec::new();
        let mut counts = vec![0usize; ncols];
        row_start.push(0);
        for r in rows {
            for &(j, v) in r {
                if v != 0.0 {
                    row_col.push(j);
                    row_val.push(v);
                    counts[j] += 1;
                }
            }
            row_start.push(row_col.len());
        }
        let mut col_start = vec![0usize; ncols + 1];
        for j in 0..ncols {
            col_start[j + 1] = col_start[j] + counts[j];
        }
        let mut fill = col_start.clone();
        let mut col_row = vec![0usize; row_col.len()];
        let mut col_val = vec![0.0; row_col.len()];
        for i in 0..nrows {
            for p in row_start[i]..row_start[i + 1] {
                let j = row_col[p];
                col_row[fill[j]] = i;
                col_val[fill[j]] = row_val[p];
                fill[j] += 1;
            }
        }
        SparseMatrix { nrows, ncols, col_start, col_row, col_val, row_start, row_col, row_val }
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_start[j]..self.col_start[j + 1]).map(move |p| (self.col_row[p], self.col_val[p]))
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_start[i]..self.row_start[i + 1]).map(move |p| (self.row_col[p], self.row_val[p]))
    }

    pub fn col_len(&self, j: usize) -> usize {
        self.col_start[j + 1] - self.col_start[j]
    }

    pub fn nnz(&self) -> usize {
        self.row_col.len()
    }
}

/// `min c·x` subject to `row_lo ≤ A x ≤ row_hi`, `col_lo ≤ x ≤ col_hi`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub matrix: SparseMatrix,
    pub cost: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
}

impl LpProblem {
    pub fn ncols(&self) -> usize {
        self.matrix.ncols
    }
    pub fn nrows(&self) -> usize {
        self.matrix.nrows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The objective reached the cutoff; the LP optimum is at least that value.
    Cutoff,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
}

/// Simplex state reusable across bound changes (warm starts).
#[derive(Debug, Clone)]
pub struct DualSimplex {
    m: usize,
    n: usize,
    a: SparseMatrix,
    cost: Vec<f64>,
    /// Costs used for pricing: `cost` plus a small perturbation while one is active.
    work_cost: Vec<f64>,
    /// Upper bound on `|cost·x − work_cost·x|` over the current boxes.
    pert_slack: f64,
    perturbing: bool,
    lo: Vec<f64>,
    hi: Vec<f64>,
    art_lo: Vec<bool>,
    art_hi: Vec<bool>,
    state: Vec<VarState>,
    head: Vec<usize>,
    pos: Vec<usize>,
    /// Column-major `m × m` basis inverse.
    binv: Vec<f64>,
    /// Dual steepest-edge weights `‖e_r B⁻¹‖²` per basis position.
    weight: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    costed: Vec<usize>,
    since_refactor: usize,
    pub iterations: u64,
    // Scratch buffers.
    rho: Vec<f64>,
    alpha_row: Vec<f64>,
    touched: Vec<usize>,
    in_touched: Vec<bool>,
    alpha_col: Vec<f64>,
}

const NOT_BASIC: usize = usize::MAX;

impl DualSimplex {
    pub fn new(p: &LpProblem) -> Self {
        let m = p.nrows();
        let n = p.ncols();
        let total = n + m;
        let mut cost = p.cost.clone();
        cost.resize(total, 0.0);
        let mut s = DualSimplex {
            m,
            n,
            a: p.matrix.clone(),
            work_cost: cost.clone(),
            cost,
            pert_slack: 0.0,
            perturbing: false,
            lo: vec![0.0; total],
            hi: vec![0.0; total],
            art_lo: vec![false; total],
            art_hi: vec![false; total],
            state: vec![VarState::Lower; total],
            head: (n..total).collect(),
            pos: vec![NOT_BASIC; total],
            binv: vec![0.0; m * m],
            weight: vec![1.0; m],
            x: vec![0.0; total],
            d: vec![0.0; total],
            costed: Vec::new(),
            since_refactor: 0,
            iterations: 0,
            rho: vec![0.0; m],
            alpha_row: vec![0.0; total],
            touched: Vec::new(),
            in_touched: vec![false; total],
            alpha_col: vec![0.0; m],
        };
        s.costed = (0..total).filter(|&j| s.cost[j] != 0.0).collect();
        for j in 0..n {
            s.set_bounds_raw(j, p.col_lo[j], p.col_hi[j]);
        }
        // Logical bounds: row bounds, boxed by the activity range where finite.
        for i in 0..m {
            let (mut amin, mut amax) = (0.0f64, 0.0f64);
            for (j, v) in p.matrix.row(i) {
                let (l, h) = (p.col_lo[j], p.col_hi[j]);
                if v > 0.0 {
                    amin += v * l;
                    amax += v * h;
                } else {
                    amin += v * h;
                    amax += v * l;
                }
            }
            let lo = p.row_lo[i].max(if amin.is_nan() { f64::NEG_INFINITY } else { amin });
            let hi = p.row_hi[i].min(if amax.is_nan() { f64::INFINITY } else { amax });
            s.set_bounds_raw(n + i, lo, hi.max(lo));
        }
        s.reset_basis();
        s
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    fn set_bounds_raw(&mut self, j: usize, lo: f64, hi: f64) {
        self.art_lo[j] = lo == f64::NEG_INFINITY;
        self.art_hi[j] = hi == f64::INFINITY;
        self.lo[j] = if self.art_lo[j] { -ART_BOUND } else { lo };
        self.hi[j] = if self.art_hi[j] { ART_BOUND } else { hi };
    }

    /// Changes the bounds of structural column `j`; the basis is kept.
    pub fn set_col_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        debug_assert!(j < self.n);
        self.set_bounds_raw(j, lo, hi);
        match self.state[j] {
            VarState::Lower => self.x[j] = self.lo[j],
            VarState::Upper => self.x[j] = self.hi[j],
            VarState::Basic => {}
        }
    }

    pub fn col_bounds(&self, j: usize) -> (f64, f64) {
        let lo = if self.art_lo[j] { f64::NEG_INFINITY } else { self.lo[j] };
        let hi = if self.art_hi[j] { f64::INFINITY } else { self.hi[j] };
        (lo, hi)
    }

    /// Returns to the all-logical basis.
    pub fn reset_basis(&mut self) {
        let (m, n) = (self.m, self.n);
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
            self.head[i] = n + i;
        }
        self.pos.iter_mut().for_each(|p| *p = NOT_BASIC);
        for j in 0..n + m {
            self.state[j] = VarState::Lower;
        }
        for i in 0..m {
            self.pos[n + i] = i;
            self.state[n + i] = VarState::Basic;
        }
        self.since_refactor = 0;
        self.weight.iter_mut().for_each(|w| *w = 1.0);
        self.compute_duals();
        self.place_nonbasics();
        self.compute_primal();
    }

    fn place_nonbasics(&mut self) {
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let st = if self.d[j] < 0.0 { VarState::Upper } else { VarState::Lower };
            self.state[j] = st;
            self.x[j] = if st == VarState::Upper { self.hi[j] } else { self.lo[j] };
        }
    }

    fn compute_primal(&mut self) {
        let (m, n) = (self.m, self.n);
        // B x_B = −N x_N
        let mut rhs = vec![0.0; m];
        for j in 0..n {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for (i, v) in self.a.col(j) {
                    rhs[i] -= v * self.x[j];
                }
            }
        }
        for i in 0..m {
            let j = n + i;
            if self.state[j] != VarState::Basic {
                rhs[i] += self.x[j];
            }
        }
        let mut xb = vec![0.0; m];
        for (k, &r) in rhs.iter().enumerate() {
            if r != 0.0 {
                let col = &self.binv[k * m..(k + 1) * m];
                for (xi, &b) in xb.iter_mut().zip(col) {
                    *xi += b * r;
                }
            }
        }
        for (i, &v) in xb.iter().enumerate() {
            self.x[self.head[i]] = v;
        }
    }

    fn compute_duals(&mut self) {
        let (m, n) = (self.m, self.n);
        let cb: Vec<f64> = self.head.iter().map(|&j| self.work_cost[j]).collect();
        let mut y = vec![0.0; m];
        if cb.iter().any(|&c| c != 0.0) {
            for (k, yk) in y.iter_mut().enumerate() {
                let col = &self.binv[k * m..(k + 1) * m];
                *yk = col.iter().zip(&cb).map(|(a, b)| a * b).sum();
            }
        }
        for j in 0..n {
            if self.state[j] == VarState::Basic {
                self.d[j] = 0.0;
            } else {
                self.d[j] = self.work_cost[j] - self.a.col(j).map(|(i, v)| y[i] * v).sum::<f64>();
            }
        }
        for i in 0..m {
            let j = n + i;
            self.d[j] = if self.state[j] == VarState::Basic { 0.0 } else { self.work_cost[j] + y[i] };
        }
    }

    /// Rebuilds the inverse by pivoting the basic structurals into the
    /// all-logical basis. Columns that cannot be pivoted in are replaced by
    /// logicals.
    fn refactor(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut structurals: Vec<usize> = self.head.iter().copied().filter(|&j| j < n).collect();
        structurals.sort_by_key(|&j| (self.a.col_len(j), j));
        let target_logical: Vec<bool> = (0..m).map(|i| self.state[n + i] == VarState::Basic).collect();

        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
            self.head[i] = n + i;
        }
        let mut replaceable: Vec<bool> = target_logical.iter().map(|&t| !t).collect();
        let mut alpha = vec![0.0; m];
        for &q in &structurals {
            self.ftran_col(q, &mut alpha);
            let mut best = None;
            let mut best_abs = 0.0;
            for r in 0..m {
                if replaceable[r] && alpha[r].abs() > best_abs {
                    best_abs = alpha[r].abs();
                    best = Some(r);
                }
            }
            match best {
                Some(r) if best_abs > 1e-9 => {
                    self.update_inverse(r, &alpha);
                    self.head[r] = q;
                    replaceable[r] = false;
                }
                _ => {
                    // Singular: q leaves the basis.
                    let st = if self.x[q] - self.lo[q] <= self.hi[q] - self.x[q] {
                        VarState::Lower
                    } else {
                        VarState::Upper
                    };
                    self.state[q] = st;
                }
            }
        }
        self.pos.iter_mut().for_each(|p| *p = NOT_BASIC);
        for j in 0..n + m {
            if self.state[j] == VarState::Basic {
                self.state[j] = VarState::Lower;
            }
        }
        for i in 0..m {
            let j = self.head[i];
            self.pos[j] = i;
            self.state[j] = VarState::Basic;
        }
        for j in 0..n + m {
            if self.state[j] != VarState::Basic {
                self.x[j] = if self.state[j] == VarState::Upper { self.hi[j] } else { self.lo[j] };
            }
        }
        self.since_refactor = 0;
        self.recompute_weights();
        self.compute_duals();
        self.compute_primal();
    }

    fn recompute_weights(&mut self) {
        let m = self.m;
        self.weight.iter_mut().for_each(|w| *w = 0.0);
        for k in 0..m {
            for (w, &b) in self.weight.iter_mut().zip(&self.binv[k * m..(k + 1) * m]) {
                *w += b * b;
            }
        }
    }

    /// Perturbs the pricing costs to break dual degeneracy. The direction
    /// follows each nonbasic's bound so the current basis stays dual feasible.
    fn perturb(&mut self) {
        let total = self.n + self.m;
        self.pert_slack = 0.0;
        for j in 0..total {
            // Deterministic pseudo-random magnitude in [0.5, 1] · 1e-6.
            let h = (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
            let u = 0.5 + 0.5 * ((h >> 11) as f64 / (1u64 << 53) as f64);
            let mag = 1e-6 * u * (1.0 + self.cost[j].abs());
            let xi = match self.state[j] {
                VarState::Lower => mag,
                VarState::Upper => -mag,
                VarState::Basic => {
                    if h & 1 == 0 {
                        mag
                    } else {
                        -mag
                    }
                }
            };
            self.work_cost[j] = self.cost[j] + xi;
            self.pert_slack += xi.abs() * self.lo[j].abs().max(self.hi[j].abs());
        }
    }

    fn unperturb(&mut self) {
        self.work_cost.copy_from_slice(&self.cost);
        self.pert_slack = 0.0;
        self.perturbing = false;
    }

    /// `out = B⁻¹ a_q` for any column of `[A | −I]`.
    fn ftran_col(&self, q: usize, out: &mut [f64]) {
        let m = self.m;
        out.iter_mut().for_each(|v| *v = 0.0);
        if q >= self.n {
            let k = q - self.n;
            for (o, &b) in out.iter_mut().zip(&self.binv[k * m..(k + 1) * m]) {
                *o = -b;
            }
        } else {
            for (k, v) in self.a.col(q) {
                for (o, &b) in out.iter_mut().zip(&self.binv[k * m..(k + 1) * m]) {
                    *o += b * v;
                }
            }
        }
    }

    /// Replaces basis position `r` by the column whose ftran is `alpha`,
    /// updating the steepest-edge weights exactly.
    fn update_inverse(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let nz: Vec<usize> = (0..m).filter(|&i| i != r && alpha[i].abs() > DROP_TOL).collect();
        let mut tau = vec![0.0; nz.len()];
        let mut wr = 0.0;
        for k in 0..m {
            let col = &mut self.binv[k * m..(k + 1) * m];
            let v = col[r];
            if v == 0.0 {
                continue;
            }
            wr += v * v;
            for (t, &i) in tau.iter_mut().zip(&nz) {
                *t += col[i] * v;
            }
            let v = v / piv;
            for &i in &nz {
                col[i] -= alpha[i] * v;
            }
            col[r] = v;
        }
        for (t, &i) in tau.iter().zip(&nz) {
            let beta = alpha[i] / piv;
            self.weight[i] = (self.weight[i] - 2.0 * beta * t + beta * beta * wr).max(1e-12);
        }
        self.weight[r] = (wr / (piv * piv)).max(1e-12);
    }

    fn work_objective(&self) -> f64 {
        if self.pert_slack == 0.0 {
            return self.objective_internal();
        }
        (0..self.n + self.m).map(|j| self.work_cost[j] * self.x[j]).sum()
    }

    fn objective_internal(&self) -> f64 {
        self.costed.iter().map(|&j| self.cost[j] * self.x[j]).sum()
    }

    fn at_artificial(&self, j: usize) -> bool {
        (self.art_lo[j] && self.x[j] <= -ART_BOUND * 0.999) || (self.art_hi[j] && self.x[j] >= ART_BOUND * 0.999)
    }

    fn any_nonbasic_artificial(&self) -> bool {
        (0..self.n + self.m).any(|j| match self.state[j] {
            VarState::Lower => self.art_lo[j],
            VarState::Upper => self.art_hi[j],
            VarState::Basic => false,
        })
    }

    /// Restores dual feasibility by moving boxed nonbasics to the bound
    /// matching the sign of their reduced cost.
    fn flip_to_dual_feasible(&mut self) -> bool {
        let mut flipped = false;
        for j in 0..self.n + self.m {
            match self.state[j] {
                VarState::Lower if self.d[j] < -DUAL_TOL && self.hi[j] > self.lo[j] => {
                    self.state[j] = VarState::Upper;
                    self.x[j] = self.hi[j];
                    flipped = true;
                }
                VarState::Upper if self.d[j] > DUAL_TOL && self.hi[j] > self.lo[j] => {
                    self.state[j] = VarState::Lower;
                    self.x[j] = self.lo[j];
                    flipped = true;
                }
                VarState::Lower => self.x[j] = self.lo[j],
                VarState::Upper => self.x[j] = self.hi[j],
                VarState::Basic => {}
            }
        }
        flipped
    }

    /// Restores dual feasibility: small infeasibilities are absorbed by
    /// shifting the pricing cost while perturbation is active, the rest by
    /// moving boxed nonbasics to the matching bound. Returns whether any
    /// nonbasic moved.
    fn make_dual_feasible(&mut self) -> bool {
        let mut moved = false;
        for j in 0..self.n + self.m {
            let wrong = match self.state[j] {
                VarState::Lower => self.d[j] < -DUAL_TOL,
                VarState::Upper => self.d[j] > DUAL_TOL,
                VarState::Basic => false,
            };
            if !wrong {
                continue;
            }
            let boxed = self.hi[j] > self.lo[j] && !(self.art_lo[j] || self.art_hi[j]);
            if self.perturbing && (self.d[j].abs() <= SHIFT_LIMIT || !boxed) {
                let shift = -self.d[j];
                self.work_cost[j] += shift;
                self.d[j] = 0.0;
                self.pert_slack += shift.abs() * self.lo[j].abs().max(self.hi[j].abs());
            } else if self.hi[j] > self.lo[j] {
                self.state[j] = if self.state[j] == VarState::Lower { VarState::Upper } else { VarState::Lower };
                self.x[j] = if self.state[j] == VarState::Upper { self.hi[j] } else { self.lo[j] };
                moved = true;
            }
        }
        moved
    }

    fn primal_infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        let tol = PRIMAL_TOL * (1.0 + v.abs().min(1e4));
        if v < self.lo[j] - tol {
            self.lo[j] - v
        } else if v > self.hi[j] + tol {
            v - self.hi[j]
        } else {
            0.0
        }
    }

    /// Runs the dual simplex from the current basis.
    pub fn solve(&mut self, cutoff: f64, deadline: Option<Instant>) -> Result<LpStatus, MipError> {
        let mut attempts = 0;
        loop {
            match self.solve_once(cutoff, deadline) {
                Ok(st) => return Ok(st),
                Err(e) if attempts == 0 => {
                    log::debug!("simplex restart from the logical basis: {e}");
                    attempts += 1;
                    self.reset_basis();
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Leaving row: largest squared infeasibility over its steepest-edge weight.
    fn choose_row(&self, bland: bool) -> Option<usize> {
        let mut r = None;
        let mut best = 0.0;
        for i in 0..self.m {
            let inf = self.primal_infeasibility(self.head[i]);
            if inf <= 0.0 {
                continue;
            }
            if bland {
                if r.is_none_or(|r: usize| self.head[i] < self.head[r]) {
                    r = Some(i);
                }
            } else if inf * inf > best * self.weight[i] {
                best = inf * inf / self.weight[i];
                r = Some(i);
            }
        }
        r
    }

    /// `alpha_row = e_r B⁻¹ [A | −I]` over the touched columns.
    fn compute_pivot_row(&mut self, r: usize) {
        let (m, n) = (self.m, self.n);
        for k in 0..m {
            self.rho[k] = self.binv[k * m + r];
        }
        for &j in &self.touched {
            self.alpha_row[j] = 0.0;
            self.in_touched[j] = false;
        }
        self.touched.clear();
        for k in 0..m {
            let rk = self.rho[k];
            if rk.abs() <= DROP_TOL {
                continue;
            }
            for (j, v) in self.a.row(k) {
                if !self.in_touched[j] {
                    self.in_touched[j] = true;
                    self.touched.push(j);
                }
                self.alpha_row[j] += rk * v;
            }
            let j = n + k;
            if !self.in_touched[j] {
                self.in_touched[j] = true;
                self.touched.push(j);
            }
            self.alpha_row[j] -= rk;
        }
    }

    /// Bound-flipping ratio test with Harris tolerances. `slope` is the
    /// primal infeasibility of the leaving variable. Returns the entering
    /// column and the columns to flip, or `None` when the dual is unbounded.
    fn ratio_test(&self, up: bool, mut slope: f64, bland: bool) -> Option<(usize, Vec<usize>)> {
        let sign = if up { 1.0 } else { -1.0 };
        // (column, ratio, |alpha|, Harris bound)
        let mut cand: Vec<(usize, f64, f64, f64)> = Vec::new();
        for &j in &self.touched {
            if self.state[j] == VarState::Basic || self.hi[j] <= self.lo[j] {
                continue;
            }
            let a = self.alpha_row[j];
            let t = sign * a;
            let (ok, dj) = match self.state[j] {
                VarState::Lower => (t < -PIVOT_TOL, self.d[j].max(0.0)),
                _ => (t > PIVOT_TOL, (-self.d[j]).max(0.0)),
            };
            if ok {
                let aa = a.abs();
                cand.push((j, dj / aa, aa, (dj + DUAL_TOL) / aa));
            }
        }
        if cand.is_empty() {
            return None;
        }
        cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut flips = Vec::new();
        let mut start = 0;
        loop {
            if start >= cand.len() {
                return None;
            }
            let mut theta_max = f64::INFINITY;
            let mut end = start;
            while end < cand.len() && cand[end].1 <= theta_max {
                theta_max = theta_max.min(cand[end].3);
                end += 1;
            }
            // Group: candidates with ratio within the Harris bound.
            let group: Vec<usize> = (start..end).filter(|&g| cand[g].1 <= theta_max).collect();
            let mut width = 0.0;
            for &g in &group {
                let j = cand[g].0;
                if self.art_lo[j] || self.art_hi[j] {
                    width = f64::INFINITY;
                    break;
                }
                width += cand[g].2 * (self.hi[j] - self.lo[j]);
            }
            if !bland && slope - width > PRIMAL_TOL {
                slope -= width;
                flips.extend(group.iter().map(|&g| cand[g].0));
                start = end;
                continue;
            }
            let mut q = group[0];
            for &g in &group {
                let better = if bland {
                    cand[g].1 < cand[q].1 - 1e-12 || (cand[g].1 <= cand[q].1 + 1e-12 && cand[g].0 < cand[q].0)
                } else {
                    cand[g].2 > cand[q].2
                };
                if better {
                    q = g;
                }
            }
            return Some((cand[q].0, flips));
        }
    }

    fn solve_once(&mut self, cutoff: f64, deadline: Option<Instant>) -> Result<LpStatus, MipError> {
        let (m, n) = (self.m, self.n);
        let total = n + m;
        self.unperturb();
        self.compute_duals();
        self.flip_to_dual_feasible();
        self.perturb();
        self.perturbing = true;
        self.compute_duals();
        self.make_dual_feasible();
        self.compute_primal();
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut iter_here = 0u64;
        let max_iter = 50_000 + 200 * (total as u64);
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
                if self.make_dual_feasible() {
                    self.compute_primal();
                }
            }
            iter_here += 1;
            if iter_here > max_iter {
                return Err(MipError::NumericalFailure("simplex iteration limit reached".into()));
            }
            if iter_here % 64 == 0 {
                if let Some(dl) = deadline {
                    if Instant::now() >= dl {
                        return Ok(LpStatus::TimeLimit);
                    }
                }
            }
            if cutoff.is_finite()
                && !self.any_nonbasic_artificial()
                && self.work_objective() - self.pert_slack >= cutoff
            {
                return Ok(LpStatus::Cutoff);
            }

            let Some(r) = self.choose_row(bland) else {
                if self.since_refactor > 0 {
                    // Confirm on a fresh factorization.
                    self.refactor();
                    if self.make_dual_feasible() {
                        self.compute_primal();
                    }
                    if (0..m).any(|i| self.primal_infeasibility(self.head[i]) > 0.0) {
                        continue;
                    }
                }
                if self.perturbing {
                    // Finish on the true costs.
                    self.perturbing = false;
                    self.unperturb();
                    self.compute_duals();
                    if self.make_dual_feasible() {
                        self.compute_primal();
                        continue;
                    }
                }
                if (0..total).any(|j| self.at_artificial(j)) {
                    return Ok(LpStatus::Unbounded);
                }
                return Ok(LpStatus::Optimal);
            };
            let leave = self.head[r];
            let (target, up) =
                if self.x[leave] < self.lo[leave] { (self.lo[leave], true) } else { (self.hi[leave], false) };
            self.compute_pivot_row(r);
            let slope = (self.x[leave] - target).abs();
            let Some((q, flips)) = self.ratio_test(up, slope, bland) else {
                return Ok(LpStatus::Infeasible);
            };

            let mut alpha = std::mem::take(&mut self.alpha_col);
            self.ftran_col(q, &mut alpha);
            let arq = alpha[r];
            let arq_row = self.alpha_row[q];
            if arq.abs() < 1e-9 || (arq - arq_row).abs() > 1e-6 * (1.0 + arq.abs()) {
                self.alpha_col = alpha;
                if self.since_refactor == 0 {
                    return Err(MipError::NumericalFailure(format!(
                        "unstable pivot {arq:e} (row estimate {arq_row:e})"
                    )));
                }
                self.refactor();
                if self.make_dual_feasible() {
                    self.compute_primal();
                }
                continue;
            }

            // Bound flips of the passed breakpoints.
            if !flips.is_empty() {
                let mut delta_b = vec![0.0; m];
                for &j in &flips {
                    let (from, to, st) = match self.state[j] {
                        VarState::Lower => (self.lo[j], self.hi[j], VarState::Upper),
                        _ => (self.hi[j], self.lo[j], VarState::Lower),
                    };
                    let step = to - from;
                    if j < n {
                        for (i, v) in self.a.col(j) {
                            delta_b[i] += v * step;
                        }
                    } else {
                        delta_b[j - n] -= step;
                    }
                    self.x[j] = to;
                    self.state[j] = st;
                }
                // x_B −= B⁻¹ Δb
                for (k, &db) in delta_b.iter().enumerate() {
                    if db != 0.0 {
                        let col = &self.binv[k * m..(k + 1) * m];
                        for (i, &b) in col.iter().enumerate() {
                            if b != 0.0 {
                                self.x[self.head[i]] -= b * db;
                            }
                        }
                    }
                }
            }

            // Cost shift so the entering reduced cost has the right sign.
            let wrong = match self.state[q] {
                VarState::Lower => self.d[q] < 0.0,
                _ => self.d[q] > 0.0,
            };
            if wrong && self.perturbing {
                let shift = -self.d[q];
                self.work_cost[q] += shift;
                self.d[q] = 0.0;
                self.pert_slack += shift.abs() * self.lo[q].abs().max(self.hi[q].abs());
            }

            let theta_d = self.d[q] / arq_row;
            // Primal step.
            let delta = (self.x[leave] - target) / arq;
            for i in 0..m {
                let a = alpha[i];
                if a != 0.0 {
                    let j = self.head[i];
                    self.x[j] -= a * delta;
                }
            }
            self.x[q] += delta;
            self.x[leave] = target;
            // Dual step.
            for &j in &self.touched {
                if self.state[j] != VarState::Basic {
                    self.d[j] -= theta_d * self.alpha_row[j];
                }
            }
            self.d[q] = 0.0;
            self.d[leave] = -theta_d;

            self.update_inverse(r, &alpha);
            self.alpha_col = alpha;
            self.head[r] = q;
            self.pos[q] = r;
            self.pos[leave] = NOT_BASIC;
            self.state[q] = VarState::Basic;
            self.state[leave] = if up { VarState::Lower } else { VarState::Upper };
            self.since_refactor += 1;
            self.iterations += 1;

            if theta_d.abs() < 1e-12 && flips.is_empty() {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    pub fn objective(&self) -> f64 {
        self.objective_internal()
    }

    /// Structural primal values.
    pub fn primal(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Reduced costs of the structural columns (0 for basic ones).
    pub fn reduced_costs(&self) -> &[f64] {
        &self.d[..self.n]
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.state[j] == VarState::Basic
    }

    pub fn at_lower(&self, j: usize) -> bool {
        self.state[j] == VarState::Lower
    }

    pub fn at_upper(&self, j: usize) -> bool {
        self.state[j] == VarState::Upper
    }
}

/// Result of a standalone LP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: u64,
}

/// Builds the row-bound form of a model's constraints.
pub fn lp_from_model(model: &crate::formulation::ModelSpec) -> LpProblem {
    use crate::formulation::RowSense;
    let rows: Vec<Vec<(usize, f64)>> = model.constraints.iter().map(|c| c.coeffs.clone()).collect();
    let mut row_lo = Vec::with_capacity(rows.len());
    let mut row_hi = Vec::with_capacity(rows.len());
    for c in &model.constraints {
        let (l, h) = match c.sense {
            RowSense::Le => (f64::NEG_INFINITY, c.rhs),
            RowSense::Ge => (c.rhs, f64::INFINITY),
            RowSense::Eq => (c.rhs, c.rhs),
        };
        row_lo.push(l);
        row_hi.push(h);
    }
    let mut cost = vec![0.0; model.num_vars()];
    for &(j, c) in &model.objective.coeffs {
        cost[j] += c;
    }
    LpProblem {
        matrix: SparseMatrix::from_rows(model.num_vars(), &rows),
        cost,
        col_lo: model.variables.iter().map(|v| v.lower).collect(),
        col_hi: model.variables.iter().map(|v| v.upper).collect(),
        row_lo,
        row_hi,
    }
}

/// Solves the LP relaxation of `model` (integrality dropped).
pub fn solve_lp(model: &crate::formulation::ModelSpec) -> Result<LpSolution, MipError> {
    let p = lp_from_model(model);
    if let Some(j) = (0..p.ncols()).find(|&j| p.col_lo[j] > p.col_hi[j]) {
        log::debug!("column {j} has empty bounds");
        return Ok(LpSolution { status: LpStatus::Infeasible, objective: f64::NAN, values: Vec::new(), iterations: 0 });
    }
    if let Some(i) = (0..p.nrows()).find(|&i| p.row_lo[i] > p.row_hi[i]) {
        log::debug!("row {i} has empty bounds");
        return Ok(LpSolution { status: LpStatus::Infeasible, objective: f64::NAN, values: Vec::new(), iterations: 0 });
    }
    let mut s = DualSimplex::new(&p);
    let status = s.solve(f64::INFINITY, None)?;
    let (objective, values) = match status {
        LpStatus::Optimal => (s.objective(), s.primal().to_vec()),
        _ => (f64::NAN, Vec::new()),
    };
    Ok(LpSolution { status, objective, values, iterations: s.iterations })
}
