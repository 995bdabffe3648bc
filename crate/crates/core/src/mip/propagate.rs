//! Activity-based bound propagation with integer rounding.

use super::lp::SparseMatrix;

const FEAS_TOL: f64 = 1e-6;
const INT_ROUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Propagator {
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
    integer: Vec<bool>,
    queued: Vec<bool>,
    queue: std::collections::VecDeque<usize>,
}

/// Outcome of propagation: the changed columns, or infeasibility.
pub type PropResult = Result<Vec<usize>, ()>;

impl Propagator {
    pub fn new(row_lo: Vec<f64>, row_hi: Vec<f64>, integer: Vec<bool>) -> Self {
        let m = row_lo.len();
        Propagator { row_lo, row_hi, integer, queued: vec![false; m], queue: Default::default() }
    }

    fn clear_queue(&mut self) {
        while let Some(i) = self.queue.pop_front() {
            self.queued[i] = false;
        }
    }

    fn push(&mut self, i: usize) {
        if !self.queued[i] {
            self.queued[i] = true;
            self.queue.push_back(i);
        }
    }

    /// Propagates every row.
    pub fn propagate_all(&mut self, a: &SparseMatrix, lo: &mut [f64], hi: &mut [f64]) -> PropResult {
        for i in 0..a.nrows {
            self.push(i);
        }
        self.run(a, lo, hi)
    }

    /// Propagates the rows touching `cols`.
    pub fn propagate_from(&mut self, a: &SparseMatrix, lo: &mut [f64], hi: &mut [f64], cols: &[usize]) -> PropResult {
        for &j in cols {
            for (i, _) in a.col(j) {
                self.push(i);
            }
        }
        self.run(a, lo, hi)
    }

    fn run(&mut self, a: &SparseMatrix, lo: &mut [f64], hi: &mut [f64]) -> PropResult {
        let mut changed = Vec::new();
        let mut is_changed = vec![false; lo.len()];
        let mut work = 0usize;
        let budget = 200 * (a.nnz() + a.nrows + 1);
        while let Some(i) = self.queue.pop_front() {
            self.queued[i] = false;
            work += a.row(i).count();
            if work > budget {
                break;
            }
            let (rl, rh) = (self.row_lo[i], self.row_hi[i]);
            let (mut minact, mut maxact) = (0.0, 0.0);
            let (mut min_inf, mut max_inf) = (0usize, 0usize);
            for (j, v) in a.row(i) {
                let (cmin, cmax) = if v > 0.0 { (v * lo[j], v * hi[j]) } else { (v * hi[j], v * lo[j]) };
                if cmin == f64::NEG_INFINITY {
                    min_inf += 1;
                } else {
                    minact += cmin;
                }
                if cmax == f64::INFINITY {
                    max_inf += 1;
                } else {
                    maxact += cmax;
                }
            }
            let scale = 1.0 + rl.abs().max(rh.abs()).min(1e6);
            if (min_inf == 0 && minact > rh + FEAS_TOL * scale) || (max_inf == 0 && maxact < rl - FEAS_TOL * scale) {
                self.clear_queue();
                return Err(());
            }
            let can_hi = rh.is_finite() && min_inf <= 1;
            let can_lo = rl.is_finite() && max_inf <= 1;
            if !can_hi && !can_lo {
                continue;
            }
            for (j, v) in a.row(i) {
                let (cmin, cmax) = if v > 0.0 { (v * lo[j], v * hi[j]) } else { (v * hi[j], v * lo[j]) };
                let mut new_lo = lo[j];
                let mut new_hi = hi[j];
                if can_hi {
                    // Residual minimum activity of the other terms.
                    let res = if cmin == f64::NEG_INFINITY {
                        Some(minact)
                    } else if min_inf == 0 {
                        Some(minact - cmin)
                    } else {
                        None
                    };
                    if let Some(res) = res {
                        let bound = (rh - res) / v;
                        if v > 0.0 {
                            new_hi = new_hi.min(bound);
                        } else {
                            new_lo = new_lo.max(bound);
                        }
                    }
                }
                if can_lo {
                    let res = if cmax == f64::INFINITY {
                        Some(maxact)
                    } else if max_inf == 0 {
                        Some(maxact - cmax)
                    } else {
                        None
                    };
                    if let Some(res) = res {
                        let bound = (rl - res) / v;
                        if v > 0.0 {
                            new_lo = new_lo.max(bound);
                        } else {
                            new_hi = new_hi.min(bound);
                        }
                    }
                }
                if self.integer[j] {
                    new_lo = (new_lo - INT_ROUND_TOL).ceil();
                    new_hi = (new_hi + INT_ROUND_TOL).floor();
                }
                let min_gain = if self.integer[j] { 0.5 } else { 1e-3 };
                let mut tightened = false;
                if new_lo > lo[j] + min_gain || (new_lo > lo[j] && lo[j] == f64::NEG_INFINITY) {
                    lo[j] = new_lo;
                    tightened = true;
                }
                if new_hi < hi[j] - min_gain || (new_hi < hi[j] && hi[j] == f64::INFINITY) {
                    hi[j] = new_hi;
                    tightened = true;
                }
                if lo[j] > hi[j] {
                    let tol = FEAS_TOL * (1.0 + lo[j].abs().min(1e6));
                    if lo[j] > hi[j] + tol {
                        self.clear_queue();
                        return Err(());
                    }
                    let mid = if self.integer[j] { hi[j] } else { 0.5 * (lo[j] + hi[j]) };
                    lo[j] = mid;
                    hi[j] = mid;
                }
                if tightened {
                    if !is_changed[j] {
                        is_changed[j] = true;
                        changed.push(j);
                    }
                    for (k, _) in a.col(j) {
                        if k != i {
                            self.push(k);
                        }
                    }
                }
            }
        }
        self.clear_queue();
        Ok(changed)
    }
}
