//! LP-based branch-and-bound over binary variables.

use super::lp::{lp_from_model, DualSimplex, LpProblem, LpStatus, SparseMatrix};
use super::propagate::Propagator;
use super::{BranchingRule, MipError, NodeSelection, Progress, SolveStatus, SolverConfig};
use crate::formulation::{ModelSpec, VarId};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

/// Outcome of a MIP solve on a bare model.
#[derive(Debug, Clone, PartialEq)]
pub struct MipOutcome {
    pub status: SolveStatus,
    /// `NaN` when no feasible point was found.
    pub objective: f64,
    pub best_bound: f64,
    /// Values of every model variable; empty without an incumbent.
    pub values: Vec<f64>,
    pub node_count: u64,
    pub lp_iterations: u64,
    pub wall_time: f64,
}

/// Optional extras for a solve.
#[derive(Default)]
pub struct SolveHints<'a> {
    /// Groups of interchangeable variable blocks: `groups[g][member][position]`.
    /// Every member of a group must be mapped onto every other by a
    /// permutation that leaves the model unchanged.
    pub symmetry: Vec<Vec<Vec<VarId>>>,
    pub progress: Option<&'a mut dyn FnMut(&Progress)>,
    /// A starting solution over every model variable; ignored unless feasible.
    pub incumbent: Option<Vec<f64>>,
}

pub fn solve_mip(model: &ModelSpec, config: &SolverConfig) -> Result<MipOutcome, MipError> {
    solve_mip_with(model, config, SolveHints::default())
}

struct Presolved {
    /// Reduced column → model column.
    cols: Vec<usize>,
    to_reduced: Vec<Option<usize>>,
    /// Model-space values of removed (fixed) columns.
    fixed: Vec<f64>,
    lp: LpProblem,
    integer: Vec<bool>,
    offset: f64,
}

fn presolve(model: &ModelSpec) -> Result<Option<Presolved>, MipError> {
    let full = lp_from_model(model);
    let n = full.ncols();
    let integer: Vec<bool> = (0..n).map(|j| model.is_integer(j)).collect();
    let mut lo = full.col_lo.clone();
    let mut hi = full.col_hi.clone();
    for j in 0..n {
        if integer[j] {
            lo[j] = lo[j].ceil();
            hi[j] = hi[j].floor();
        }
        if lo[j] > hi[j] {
            return Ok(None);
        }
    }
    if (0..full.nrows()).any(|i| full.row_lo[i] > full.row_hi[i]) {
        return Ok(None);
    }
    let mut prop = Propagator::new(full.row_lo.clone(), full.row_hi.clone(), integer.clone());
    if prop.propagate_all(&full.matrix, &mut lo, &mut hi).is_err() {
        return Ok(None);
    }
    let mut fixed = vec![f64::NAN; n];
    let mut cols = Vec::new();
    let mut to_reduced = vec![None; n];
    for j in 0..n {
        if hi[j] - lo[j] <= 1e-9 {
            fixed[j] = if integer[j] { lo[j].round() } else { lo[j] };
        } else {
            to_reduced[j] = Some(cols.len());
            cols.push(j);
        }
    }
    let offset: f64 = (0..n).filter(|&j| to_reduced[j].is_none()).map(|j| full.cost[j] * fixed[j]).sum();
    let mut rows = Vec::new();
    let mut row_lo = Vec::new();
    let mut row_hi = Vec::new();
    for i in 0..full.nrows() {
        let (mut minact, mut maxact, mut shift) = (0.0, 0.0, 0.0);
        let mut terms = Vec::new();
        for (j, v) in full.matrix.row(i) {
            match to_reduced[j] {
                Some(rj) => {
                    terms.push((rj, v));
                    if v > 0.0 {
                        minact += v * lo[j];
                        maxact += v * hi[j];
                    } else {
                        minact += v * hi[j];
                        maxact += v * lo[j];
                    }
                }
                None => shift += v * fixed[j],
            }
        }
        let (rl, rh) = (full.row_lo[i] - shift, full.row_hi[i] - shift);
        let tol = 1e-9 * (1.0 + rl.abs().max(rh.abs()).min(1e6));
        if terms.is_empty() {
            if rl > tol || rh < -tol {
                return Ok(None);
            }
            continue;
        }
        if minact >= rl - tol && maxact <= rh + tol {
            continue;
        }
        rows.push(terms);
        row_lo.push(rl);
        row_hi.push(rh);
    }
    let lp = LpProblem {
        matrix: SparseMatrix::from_rows(cols.len(), &rows),
        cost: cols.iter().map(|&j| full.cost[j]).collect(),
        col_lo: cols.iter().map(|&j| lo[j]).collect(),
        col_hi: cols.iter().map(|&j| hi[j]).collect(),
        row_lo,
        row_hi,
    };
    let integer = cols.iter().map(|&j| integer[j]).collect();
    Ok(Some(Presolved { cols, to_reduced, fixed, lp, integer, offset }))
}

impl Presolved {
    fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut v = self.fixed.clone();
        for (rj, &j) in self.cols.iter().enumerate() {
            v[j] = if self.integer[rj] { reduced[rj].round() } else { reduced[rj] };
        }
        v
    }
}

#[derive(Debug, Clone)]
struct Node {
    /// Bound changes relative to the global domain: `(column, lo, hi)`.
    changes: Vec<(usize, f64, f64)>,
    bound: f64,
    depth: u32,
    seq: u64,
    /// `(column, up branch, distance moved)` for pseudocost updates.
    branched: Option<(usize, bool, f64)>,
}

struct HeapEntry(Node);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Max-heap: the "greatest" entry is the lowest bound, then the deepest,
    // then the oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.bound.total_cmp(&self.0.bound).then(self.0.depth.cmp(&other.0.depth)).then(other.0.seq.cmp(&self.0.seq))
    }
}

enum Open {
    Heap(BinaryHeap<HeapEntry>),
    Stack(Vec<Node>),
}

impl Open {
    fn push(&mut self, n: Node) {
        match self {
            Open::Heap(h) => h.push(HeapEntry(n)),
            Open::Stack(s) => s.push(n),
        }
    }
    fn pop(&mut self) -> Option<Node> {
        match self {
            Open::Heap(h) => h.pop().map(|e| e.0),
            Open::Stack(s) => s.pop(),
        }
    }
    fn min_bound(&self) -> f64 {
        match self {
            Open::Heap(h) => h.peek().map_or(f64::INFINITY, |e| e.0.bound),
            Open::Stack(s) => s.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min),
        }
    }
    fn len(&self) -> usize {
        match self {
            Open::Heap(h) => h.len(),
            Open::Stack(s) => s.len(),
        }
    }
    /// Drops nodes that can no longer beat `limit`; returns the smallest dropped bound.
    fn prune(&mut self, limit: f64) -> f64 {
        let mut dropped = f64::INFINITY;
        match self {
            Open::Heap(h) => {
                let mut kept = BinaryHeap::with_capacity(h.len());
                for e in h.drain() {
                    if e.0.bound >= limit {
                        dropped = dropped.min(e.0.bound);
                    } else {
                        kept.push(e);
                    }
                }
                *h = kept;
            }
            Open::Stack(s) => s.retain(|n| {
                if n.bound >= limit {
                    dropped = dropped.min(n.bound);
                    false
                } else {
                    true
                }
            }),
        }
        dropped
    }
}

/// Interchangeable blocks in reduced-column space.
struct Symmetry {
    /// `groups[g][member][pos]`: reduced column or the fixed model value.
    groups: Vec<Vec<Vec<Result<usize, f64>>>>,
    /// Reduced column → `(group, member, position)`.
    place: Vec<Option<(usize, usize, usize)>>,
}

impl Symmetry {
    fn new(blocks: &[Vec<Vec<VarId>>], pre: &Presolved) -> Self {
        let mut place = vec![None; pre.cols.len()];
        let mut groups = Vec::new();
        for g in blocks {
            if g.len() < 2 || g.iter().any(|b| b.len() != g[0].len()) {
                continue;
            }
            let gi = groups.len();
            let members: Vec<Vec<Result<usize, f64>>> = g
                .iter()
                .enumerate()
                .map(|(mi, block)| {
                    block
                        .iter()
                        .enumerate()
                        .map(|(pi, &j)| match pre.to_reduced[j] {
                            Some(rj) => {
                                place[rj] = Some((gi, mi, pi));
                                Ok(rj)
                            }
                            None => Err(pre.fixed[j]),
                        })
                        .collect()
                })
                .collect();
            groups.push(members);
        }
        Symmetry { groups, place }
    }

    /// Members of `j`'s group whose blocks have bounds identical to `j`'s block.
    fn orbit(&self, j: usize, lo: &[f64], hi: &[f64]) -> Vec<usize> {
        let Some((g, m, p)) = self.place[j] else { return Vec::new() };
        let group = &self.groups[g];
        let same = |a: &Result<usize, f64>, b: &Result<usize, f64>| match (a, b) {
            (Ok(x), Ok(y)) => lo[*x] == lo[*y] && hi[*x] == hi[*y],
            (Err(x), Err(y)) => x == y,
            _ => false,
        };
        let mut out = Vec::new();
        for (mi, block) in group.iter().enumerate() {
            if mi == m || block.iter().zip(&group[m]).all(|(a, b)| same(a, b)) {
                if let Ok(c) = block[p] {
                    out.push(c);
                }
            }
        }
        out
    }
}

struct PseudoCosts {
    sum: Vec<[f64; 2]>,
    count: Vec<[u32; 2]>,
}

impl PseudoCosts {
    fn new(n: usize) -> Self {
        PseudoCosts { sum: vec![[0.0; 2]; n], count: vec![[0; 2]; n] }
    }
    fn record(&mut self, j: usize, up: bool, dist: f64, gain: f64) {
        if dist > 1e-9 && gain.is_finite() {
            let d = up as usize;
            self.sum[j][d] += gain.max(0.0) / dist;
            self.count[j][d] += 1;
        }
    }
    fn estimate(&self, j: usize, up: bool, fallback: f64) -> f64 {
        let d = up as usize;
        if self.count[j][d] == 0 {
            fallback
        } else {
            self.sum[j][d] / self.count[j][d] as f64
        }
    }
    fn mean(&self, up: bool) -> f64 {
        let d = up as usize;
        let (s, c) = self.sum.iter().zip(&self.count).fold((0.0, 0u32), |(s, c), (a, b)| (s + a[d], c + b[d]));
        if c == 0 {
            1.0
        } else {
            s / c as f64
        }
    }
}

pub fn solve_mip_with(model: &ModelSpec, config: &SolverConfig, hints: SolveHints<'_>) -> Result<MipOutcome, MipError> {
    config.validate()?;
    model.validate().map_err(MipError::InvalidModel)?;
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(config.time_limit.min(1e9));
    let SolveHints { symmetry, mut progress, incumbent: start_point } = hints;

    let finish = |status, objective, bound, values, nodes, iters| MipOutcome {
        status,
        objective,
        best_bound: bound,
        values,
        node_count: nodes,
        lp_iterations: iters,
        wall_time: start.elapsed().as_secs_f64(),
    };

    let Some(pre) = presolve(model)? else {
        return Ok(finish(SolveStatus::Infeasible, f64::NAN, f64::INFINITY, Vec::new(), 0, 0));
    };
    let nred = pre.cols.len();
    if nred == 0 {
        let values = pre.expand(&[]);
        let obj = model.objective_value(&values);
        return Ok(finish(SolveStatus::Optimal, obj, obj, values, 1, 0));
    }
    let sym = Symmetry::new(&symmetry, &pre);
    let mut lp = DualSimplex::new(&pre.lp);
    let mut prop = Propagator::new(pre.lp.row_lo.clone(), pre.lp.row_hi.clone(), pre.integer.clone());
    let a = &pre.lp.matrix;
    let int_cols: Vec<usize> = (0..nred).filter(|&j| pre.integer[j]).collect();

    let mut global_lo = pre.lp.col_lo.clone();
    let mut global_hi = pre.lp.col_hi.clone();
    let mut lp_lo = global_lo.clone();
    let mut lp_hi = global_hi.clone();

    let mut incumbent: Option<(f64, Vec<f64>)> =
        start_point.filter(|v| v.len() == model.num_vars() && accept(model, v)).map(|v| (model.objective_value(&v), v));
    let mut open = match config.node_selection {
        NodeSelection::BestBound => Open::Heap(BinaryHeap::new()),
        NodeSelection::DepthFirst => Open::Stack(Vec::new()),
    };
    let mut pseudo = PseudoCosts::new(nred);
    let mut seq = 0u64;
    let mut nodes = 0u64;
    let mut reported_bound = f64::NEG_INFINITY;
    let mut pruned_bound = f64::INFINITY;
    let mut root_info: Option<(f64, Vec<f64>, Vec<i8>)> = None;
    let mut last_progress = Instant::now();
    let mut next: Option<Node> =
        Some(Node { changes: Vec::new(), bound: f64::NEG_INFINITY, depth: 0, seq: 0, branched: None });
    let mut timed_out = false;
    let mut unbounded = false;

    let abs_tol = |u: f64| config.gap_tolerance * u.abs().max(1.0);

    loop {
        let node = match next.take() {
            Some(n) => n,
            None => match open.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if let Some((u, _)) = &incumbent {
            if node.bound >= u - abs_tol(*u) {
                pruned_bound = pruned_bound.min(node.bound);
                continue;
            }
        }
        if Instant::now() >= deadline || config.node_limit.is_some_and(|l| nodes >= l) {
            open.push(node);
            timed_out = true;
            break;
        }
        nodes += 1;

        // Local domain.
        let mut lo = global_lo.clone();
        let mut hi = global_hi.clone();
        let mut infeasible = false;
        let mut touched = Vec::with_capacity(node.changes.len());
        for &(j, l, h) in &node.changes {
            lo[j] = lo[j].max(l);
            hi[j] = hi[j].min(h);
            if lo[j] > hi[j] + 1e-9 {
                infeasible = true;
            }
            touched.push(j);
        }
        if !infeasible && !touched.is_empty() {
            infeasible = prop.propagate_from(a, &mut lo, &mut hi, &touched).is_err();
        }
        if infeasible {
            continue;
        }
        for j in 0..nred {
            if lo[j] != lp_lo[j] || hi[j] != lp_hi[j] {
                lp.set_col_bounds(j, lo[j], hi[j]);
                lp_lo[j] = lo[j];
                lp_hi[j] = hi[j];
            }
        }
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |(u, _)| u - abs_tol(*u) - pre.offset);
        let status = lp.solve(cutoff, Some(deadline))?;
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Cutoff => {
                pruned_bound = pruned_bound.min(cutoff + pre.offset);
                continue;
            }
            LpStatus::TimeLimit => {
                open.push(node);
                timed_out = true;
                break;
            }
            LpStatus::Unbounded => {
                unbounded = true;
                break;
            }
            LpStatus::Optimal => {}
        }
        let obj = lp.objective() + pre.offset;
        if let Some((j, up, dist)) = node.branched {
            pseudo.record(j, up, dist, obj - node.bound);
        }
        if let Some((u, _)) = &incumbent {
            if obj >= u - abs_tol(*u) {
                pruned_bound = pruned_bound.min(obj);
                continue;
            }
        }
        let bound = obj.max(node.bound);
        let x = lp.primal().to_vec();

        let fractional: Vec<(usize, f64)> = int_cols
            .iter()
            .map(|&j| (j, x[j] - x[j].floor()))
            .filter(|&(_, f)| f > config.integrality_tolerance && f < 1.0 - config.integrality_tolerance)
            .collect();

        if node.depth == 0 && root_info.is_none() {
            let d = lp.reduced_costs().to_vec();
            let st: Vec<i8> = (0..nred)
                .map(|j| {
                    if lp.is_basic(j) {
                        0
                    } else if lp.at_lower(j) {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            if let Some((u, _)) = &incumbent {
                root_fixing(&mut global_lo, &mut global_hi, &int_cols, obj, &d, &st, u - abs_tol(*u));
            }
            root_info = Some((obj, d, st));
        }

        if fractional.is_empty() {
            let values = pre.expand(&x);
            if accept(model, &values) {
                let val = model.objective_value(&values);
                if incumbent.as_ref().is_none_or(|(u, _)| val < *u) {
                    log::debug!("incumbent {val} at node {nodes}");
                    incumbent = Some((val, values));
                    let u = val;
                    pruned_bound = pruned_bound.min(open.prune(u - abs_tol(u)));
                    if let Some((robj, d, st)) = &root_info {
                        root_fixing(&mut global_lo, &mut global_hi, &int_cols, *robj, d, st, u - abs_tol(u));
                    }
                }
            } else {
                log::warn!("rejected an LP-integral point that violates the model beyond tolerance");
            }
            continue;
        }

        // Local reduced-cost fixing.
        let mut child_changes = node.changes.clone();
        if let Some((u, _)) = &incumbent {
            let gap = u - abs_tol(*u) - obj;
            let d = lp.reduced_costs();
            for &j in &int_cols {
                if lo[j] == hi[j] {
                    continue;
                }
                if lp.at_lower(j) && d[j] > gap {
                    child_changes.push((j, lo[j], lo[j]));
                } else if lp.at_upper(j) && -d[j] > gap {
                    child_changes.push((j, hi[j], hi[j]));
                }
            }
        }

        let j = select_branch(config.branching_rule, &fractional, &pseudo);
        let f = x[j] - x[j].floor();
        let orbit = sym.orbit(j, &lo, &hi);
        let mut down = child_changes.clone();
        if orbit.len() > 1 {
            for &c in &orbit {
                down.push((c, lo[c], x[j].floor().max(lo[c])));
            }
        } else {
            down.push((j, lo[j], x[j].floor()));
        }
        let mut up = child_changes;
        up.push((j, x[j].ceil(), hi[j]));
        let mk = |changes, up: bool, s: u64| Node {
            changes,
            bound,
            depth: node.depth + 1,
            seq: s,
            branched: Some((j, up, if up { 1.0 - f } else { f })),
        };
        let up_node = mk(up, true, seq + 1);
        let down_node = mk(down, false, seq + 2);
        seq += 2;
        open.push(down_node);
        next = Some(up_node);

        if let Some(cb) = progress.as_mut() {
            if last_progress.elapsed().as_secs_f64() >= config.progress_interval {
                last_progress = Instant::now();
                let gb = global_bound(&open, next.as_ref(), pruned_bound, incumbent.as_ref().map(|v| v.0));
                reported_bound = reported_bound.max(gb);
                cb(&Progress::new(nodes, incumbent.as_ref().map(|v| v.0), reported_bound, start.elapsed()));
            }
        }
        if open.len() > 2_000_000 {
            return Err(MipError::NumericalFailure("open node limit exceeded".into()));
        }
    }

    let iters = lp.iterations;
    if unbounded {
        return Ok(finish(SolveStatus::Unbounded, f64::NEG_INFINITY, f64::NEG_INFINITY, Vec::new(), nodes, iters));
    }
    let remaining = if timed_out { open.min_bound() } else { f64::INFINITY };
    let mut bound = remaining.min(pruned_bound);
    if let Some((u, _)) = &incumbent {
        bound = bound.min(*u);
    }
    bound = bound.max(reported_bound);
    let result = match incumbent {
        Some((u, values)) => {
            let gap = (u - bound) / u.abs().max(1.0);
            let status =
                if !timed_out || gap <= config.gap_tolerance { SolveStatus::Optimal } else { SolveStatus::Feasible };
            finish(status, u, if bound.is_finite() { bound.min(u) } else { u }, values, nodes, iters)
        }
        None if timed_out => finish(SolveStatus::TimeLimitNoSolution, f64::NAN, bound, Vec::new(), nodes, iters),
        None => finish(SolveStatus::Infeasible, f64::NAN, f64::INFINITY, Vec::new(), nodes, iters),
    };
    if let Some(cb) = progress.as_mut() {
        let inc = if result.objective.is_nan() { None } else { Some(result.objective) };
        cb(&Progress::new(nodes, inc, result.best_bound, start.elapsed()));
    }
    Ok(result)
}

fn global_bound(open: &Open, next: Option<&Node>, pruned: f64, inc: Option<f64>) -> f64 {
    let mut b = open.min_bound().min(pruned);
    if let Some(n) = next {
        b = b.min(n.bound);
    }
    if let Some(u) = inc {
        b = b.min(u);
    }
    b
}

fn accept(model: &ModelSpec, values: &[f64]) -> bool {
    model.violated_bounds(values, 1e-6).is_empty() && model.violated_rows(values, 1e-6).is_empty()
}

fn root_fixing(lo: &mut [f64], hi: &mut [f64], ints: &[usize], robj: f64, d: &[f64], st: &[i8], limit: f64) {
    let gap = limit - robj;
    for &j in ints {
        if lo[j] == hi[j] {
            continue;
        }
        if st[j] < 0 && d[j] > gap {
            hi[j] = lo[j];
        } else if st[j] > 0 && -d[j] > gap {
            lo[j] = hi[j];
        }
    }
}

fn select_branch(rule: BranchingRule, fractional: &[(usize, f64)], pc: &PseudoCosts) -> usize {
    match rule {
        BranchingRule::MostFractional => {
            let mut best = fractional[0];
            for &(j, f) in fractional {
                let s = f.min(1.0 - f);
                if s > best.1.min(1.0 - best.1) + 1e-12 {
                    best = (j, f);
                }
            }
            best.0
        }
        BranchingRule::PseudoCost => {
            let (mu_d, mu_u) = (pc.mean(false), pc.mean(true));
            let mut best = (fractional[0].0, f64::NEG_INFINITY);
            for &(j, f) in fractional {
                let down = (pc.estimate(j, false, mu_d) * f).max(1e-6);
                let up = (pc.estimate(j, true, mu_u) * (1.0 - f)).max(1e-6);
                let s = down * up;
                if s > best.1 + 1e-12 {
                    best = (j, s);
                }
            }
            best.0
        }
    }
}
