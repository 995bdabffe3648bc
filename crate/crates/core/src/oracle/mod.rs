//! Exhaustive reference solver for small instances.
//!
//! Every assignment of requests to vehicles and every pickup-before-dropoff
//! visiting order is tried. Along a fixed order the timing constraints form
//! a difference system on a DAG, so earliest and latest schedules are exact
//! longest-path computations. Nothing here touches the MIP model.

use crate::instance::{Instance, ModelKind};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub const MAX_REQUESTS: usize = 4;
pub const MAX_VEHICLES: usize = 3;

const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for enumeration: n = {n}, p = {p} (limits n <= {MAX_REQUESTS}, p <= {MAX_VEHICLES})")]
    TooLarge { n: usize, p: usize },
    #[error("no feasible solution")]
    Infeasible,
}

/// A fully specified solution found by enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumeratedSolution {
    pub model_kind: ModelKind,
    pub objective: f64,
    /// Vehicle (0-based) serving each request (0-based).
    pub assignment: Vec<usize>,
    /// Per vehicle, `0 → … → 2n+1`.
    pub routes: Vec<Vec<usize>>,
    /// `B_i` per node; depots are `None`.
    pub arrival_times: Vec<Option<f64>>,
    /// `(B_0k, B_{2n+1,k})` per vehicle.
    pub depot_times: Vec<(f64, f64)>,
    /// `(i, late)` for each node of `H`, late meaning `B_i − s_i > T`.
    pub lateness: Vec<(usize, bool)>,
}

impl EnumeratedSolution {
    /// `Σ_k B_{2n+1,k} − B_{0k}`.
    pub fn operating_time(&self) -> f64 {
        self.depot_times.iter().map(|(s, e)| e - s).sum()
    }
}

fn guard(inst: &Instance) -> Result<(), OracleError> {
    if inst.n > MAX_REQUESTS || inst.vehicles() > MAX_VEHICLES {
        return Err(OracleError::TooLarge { n: inst.n, p: inst.vehicles() });
    }
    Ok(())
}

/// Earliest and latest schedules of one visiting order.
#[derive(Debug, Clone)]
struct Timing {
    /// Full sequence including both depots.
    seq: Vec<usize>,
    earliest: Vec<f64>,
    latest: Vec<f64>,
}

struct Ctx<'a> {
    inst: &'a Instance,
    end: usize,
}

impl Ctx<'_> {
    fn t(&self, i: usize, j: usize) -> f64 {
        self.inst.travel(i, j).expect("arc on an enumerated route").minutes()
    }

    fn d(&self, i: usize) -> f64 {
        self.inst.nodes[i].service as f64
    }

    /// All pickup-before-dropoff orders of the given requests (1-based pickups).
    fn orders(&self, reqs: &[usize]) -> Vec<Vec<usize>> {
        fn rec(n: usize, reqs: &[usize], state: &mut Vec<u8>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == 2 * reqs.len() {
                out.push(cur.clone());
                return;
            }
            // Candidates in ascending node order for a lexicographic enumeration.
            let mut cands: Vec<(usize, usize)> = Vec::new();
            for (k, &r) in reqs.iter().enumerate() {
                match state[k] {
                    0 => cands.push((r, k)),
                    1 => cands.push((r + n, k)),
                    _ => {}
                }
            }
            cands.sort();
            for (node, k) in cands {
                state[k] += 1;
                cur.push(node);
                rec(n, reqs, state, cur, out);
                cur.pop();
                state[k] -= 1;
            }
        }
        let mut out = Vec::new();
        rec(self.inst.n, reqs, &mut vec![0; reqs.len()], &mut Vec::new(), &mut out);
        out
    }

    fn capacity_ok(&self, order: &[usize], cap: u32) -> bool {
        let mut load = 0i64;
        for &v in order {
            load += self.inst.nodes[v].load as i64;
            if load > cap as i64 {
                return false;
            }
        }
        true
    }

    /// Schedules `0 → order → 2n+1` under windows, with `upper` overriding latest times.
    fn timing(&self, order: &[usize], upper: &dyn Fn(usize) -> f64) -> Option<Timing> {
        let n = self.inst.n;
        let mut seq = Vec::with_capacity(order.len() + 2);
        seq.push(0);
        seq.extend_from_slice(order);
        seq.push(self.end);
        let m = seq.len();
        let mut pos = HashMap::new();
        for (a, &v) in seq.iter().enumerate() {
            pos.insert(v, a);
        }
        // Edges (from position, to position, weight), all pointing forward.
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for a in 0..m - 1 {
            let (u, v) = (seq[a], seq[a + 1]);
            edges.push((a, a + 1, self.t(u, v) + self.d(u)));
        }
        for &v in order {
            if (1..=n).contains(&v) {
                let (a, b) = (pos[&v], pos[&(v + n)]);
                edges.push((a, b, self.t(v, v + n) + self.d(v)));
            }
        }
        let lo: Vec<f64> = seq.iter().map(|&v| self.inst.nodes[v].earliest as f64).collect();
        let hi: Vec<f64> = seq.iter().map(|&v| upper(v).min(self.inst.nodes[v].latest as f64)).collect();
        let mut earliest = lo.clone();
        for b in 0..m {
            for &(a, bb, w) in &edges {
                if bb == b {
                    earliest[b] = earliest[b].max(earliest[a] + w);
                }
            }
            if earliest[b] > hi[b] + EPS {
                return None;
            }
        }
        let mut latest = hi.clone();
        for a in (0..m).rev() {
            for &(aa, b, w) in &edges {
                if aa == a {
                    latest[a] = latest[a].min(latest[b] - w);
                }
            }
        }
        Some(Timing { seq, earliest, latest })
    }

    /// Minimum duration and its schedule: latest feasible departure, then earliest times.
    fn shortest_duration(&self, tm: &Timing) -> (f64, Vec<f64>) {
        let mut sched = tm.earliest.clone();
        sched[0] = tm.latest[0];
        let n = self.inst.n;
        let m = tm.seq.len();
        for b in 1..m {
            let v = tm.seq[b];
            let u = tm.seq[b - 1];
            let mut x = (self.inst.nodes[v].earliest as f64).max(sched[b - 1] + self.t(u, v) + self.d(u));
            if (n + 1..=2 * n).contains(&v) {
                let a = tm.seq.iter().position(|&w| w == v - n).unwrap();
                x = x.max(sched[a] + self.t(v - n, v) + self.d(v - n));
            }
            sched[b] = x;
        }
        (sched[m - 1] - sched[0], sched)
    }
}

/// Requests assigned to each vehicle.
fn groups(assignment: &[usize], p: usize) -> Vec<Vec<usize>> {
    let mut g = vec![Vec::new(); p];
    for (r, &k) in assignment.iter().enumerate() {
        g[k].push(r + 1);
    }
    g
}

fn assignments(n: usize, p: usize) -> Vec<Vec<usize>> {
    let total = p.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut a = vec![0; n];
            for slot in a.iter_mut().rev() {
                *slot = code % p;
                code /= p;
            }
            a
        })
        .collect()
}

fn build_solution(
    inst: &Instance,
    assignment: Vec<usize>,
    per_vehicle: Vec<(Vec<usize>, Vec<f64>)>,
    objective: f64,
) -> EnumeratedSolution {
    let nn = inst.node_count();
    let thr = inst.lateness_threshold as f64;
    let mut arrival_times = vec![None; nn];
    let mut depot_times = Vec::new();
    let mut routes = Vec::new();
    for (seq, sched) in per_vehicle {
        for (a, &v) in seq.iter().enumerate() {
            if v != 0 && v != nn - 1 {
                arrival_times[v] = Some(sched[a]);
            }
        }
        depot_times.push((sched[0], *sched.last().unwrap()));
        routes.push(seq);
    }
    let lateness = inst
        .h_nodes()
        .into_iter()
        .map(|i| {
            let late = match (arrival_times[i], inst.nodes[i].scheduled) {
                (Some(b), Some(s)) => b - s as f64 > thr + EPS,
                _ => false,
            };
            (i, late)
        })
        .collect();
    EnumeratedSolution {
        model_kind: inst.model_kind,
        objective,
        assignment,
        routes,
        arrival_times,
        depot_times,
        lateness,
    }
}

/// The optimum of the instance's model kind, by exhaustive enumeration.
pub fn enumerate_optimal(inst: &Instance) -> Result<EnumeratedSolution, OracleError> {
    guard(inst)?;
    match inst.model_kind {
        ModelKind::Operator => optimal_operator(inst),
        ModelKind::User => optimal_user(inst),
    }
}

fn optimal_operator(inst: &Instance) -> Result<EnumeratedSolution, OracleError> {
    let ctx = Ctx { inst, end: inst.destination_depot() };
    let p = inst.vehicles();
    let mut memo: HashMap<(usize, Vec<usize>), Option<(f64, Vec<usize>, Vec<f64>)>> = HashMap::new();
    let mut best: Option<(f64, Vec<usize>, Vec<(Vec<usize>, Vec<f64>)>)> = None;
    for asg in assignments(inst.n, p) {
        let g = groups(&asg, p);
        let mut total = 0.0;
        let mut parts = Vec::with_capacity(p);
        let mut ok = true;
        for (k, reqs) in g.iter().enumerate() {
            let cap = inst.fleet.capacities[k];
            let entry = memo.entry((cap as usize, reqs.clone())).or_insert_with(|| {
                let mut b: Option<(f64, Vec<usize>, Vec<f64>)> = None;
                for order in ctx.orders(reqs) {
                    if !ctx.capacity_ok(&order, cap) {
                        continue;
                    }
                    if let Some(tm) = ctx.timing(&order, &|_| f64::INFINITY) {
                        let (dur, sched) = ctx.shortest_duration(&tm);
                        if b.as_ref().is_none_or(|(bd, _, _)| dur < bd - EPS) {
                            b = Some((dur, tm.seq, sched));
                        }
                    }
                }
                b
            });
            match entry {
                Some((dur, seq, sched)) => {
                    total += *dur;
                    parts.push((seq.clone(), sched.clone()));
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.as_ref().is_none_or(|(b, _, _)| total < b - EPS) {
            best = Some((total, asg, parts));
        }
    }
    let (obj, asg, parts) = best.ok_or(OracleError::Infeasible)?;
    Ok(build_solution(inst, asg, parts, obj))
}

/// One admissible timing option of a vehicle in the user model.
#[derive(Debug, Clone)]
struct UserOption {
    late: usize,
    dmin: f64,
    dmax: f64,
    timing: Timing,
}

fn user_options(ctx: &Ctx<'_>, reqs: &[usize], cap: u32) -> Vec<UserOption> {
    let inst = ctx.inst;
    let thr = inst.lateness_threshold as f64;
    let mut out: Vec<UserOption> = Vec::new();
    for order in ctx.orders(reqs) {
        if !ctx.capacity_ok(&order, cap) {
            continue;
        }
        let h: Vec<usize> = order.iter().copied().filter(|&v| inst.nodes[v].in_h).collect();
        for mask in 0u32..(1u32 << h.len()) {
            let late_set: Vec<usize> = (0..h.len()).filter(|b| mask >> b & 1 == 1).map(|b| h[b]).collect();
            let upper = |v: usize| -> f64 {
                if inst.nodes[v].in_h && !late_set.contains(&v) {
                    inst.nodes[v].scheduled.unwrap() as f64 + thr
                } else {
                    f64::INFINITY
                }
            };
            let Some(tm) = ctx.timing(&order, &upper) else { continue };
            let dev = |sched: &[f64]| -> f64 {
                tm.seq
                    .iter()
                    .zip(sched)
                    .filter(|(v, _)| inst.nodes[**v].in_h)
                    .map(|(v, b)| b - inst.nodes[*v].scheduled.unwrap() as f64)
                    .sum()
            };
            let opt = UserOption { late: late_set.len(), dmin: dev(&tm.earliest), dmax: dev(&tm.latest), timing: tm };
            if !out.iter().any(|o| o.late == opt.late && o.dmin <= opt.dmin + EPS && o.dmax >= opt.dmax - EPS) {
                out.push(opt);
            }
        }
    }
    out
}

fn optimal_user(inst: &Instance) -> Result<EnumeratedSolution, OracleError> {
    let ctx = Ctx { inst, end: inst.destination_depot() };
    let p = inst.vehicles();
    let beta = inst.beta;
    let mut memo: HashMap<(usize, Vec<usize>), Vec<UserOption>> = HashMap::new();
    let mut best: Option<(f64, Vec<usize>, Vec<UserOption>)> = None;
    for asg in assignments(inst.n, p) {
        let g = groups(&asg, p);
        let mut lists: Vec<Vec<UserOption>> = Vec::with_capacity(p);
        for (k, reqs) in g.iter().enumerate() {
            let cap = inst.fleet.capacities[k];
            let opts = memo.entry((cap as usize, reqs.clone())).or_insert_with(|| user_options(&ctx, reqs, cap));
            lists.push(opts.clone());
        }
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        // Product over vehicles.
        let mut idx = vec![0usize; p];
        loop {
            let (mut late, mut lo, mut hi) = (0usize, 0.0, 0.0);
            for k in 0..p {
                let o = &lists[k][idx[k]];
                late += o.late;
                lo += o.dmin;
                hi += o.dmax;
            }
            let dist = if lo > 0.0 {
                lo
            } else if hi < 0.0 {
                -hi
            } else {
                0.0
            };
            let z = (beta * late as f64).max(dist);
            if best.as_ref().is_none_or(|(b, _, _)| z < b - EPS) {
                best = Some((z, asg.clone(), (0..p).map(|k| lists[k][idx[k]].clone()).collect()));
            }
            let mut k = p;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < lists[k].len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
    }
    let (z, asg, opts) = best.ok_or(OracleError::Infeasible)?;
    // Pick per-vehicle deviations that bring the total as close to 0 as possible.
    let lo: f64 = opts.iter().map(|o| o.dmin).sum();
    let target_total = lo.max(0.0).min(opts.iter().map(|o| o.dmax).sum());
    let mut remaining = target_total - lo;
    let mut parts = Vec::with_capacity(p);
    for o in &opts {
        let span = o.dmax - o.dmin;
        let take = remaining.clamp(0.0, span);
        remaining -= take;
        let lambda = if span > EPS { take / span } else { 0.0 };
        let sched: Vec<f64> =
            o.timing.earliest.iter().zip(&o.timing.latest).map(|(e, l)| e + lambda * (l - e)).collect();
        parts.push((o.timing.seq.clone(), sched));
    }
    Ok(build_solution(inst, asg, parts, z))
}

/// Feasible points: for every assignment and every combination of feasible
/// visiting orders, the earliest and the latest schedule. At most `limit`
/// points are returned.
pub fn enumerate_feasible(inst: &Instance, limit: usize) -> Result<Vec<EnumeratedSolution>, OracleError> {
    guard(inst)?;
    let ctx = Ctx { inst, end: inst.destination_depot() };
    let p = inst.vehicles();
    let thr = inst.lateness_threshold as f64;
    let mut out = Vec::new();
    let mut memo: HashMap<(usize, Vec<usize>), Vec<Timing>> = HashMap::new();
    for asg in assignments(inst.n, p) {
        let g = groups(&asg, p);
        let mut lists = Vec::with_capacity(p);
        for (k, reqs) in g.iter().enumerate() {
            let cap = inst.fleet.capacities[k];
            let l = memo.entry((cap as usize, reqs.clone())).or_insert_with(|| {
                ctx.orders(reqs)
                    .into_iter()
                    .filter(|o| ctx.capacity_ok(o, cap))
                    .filter_map(|o| ctx.timing(&o, &|_| f64::INFINITY))
                    .collect()
            });
            lists.push(l.clone());
        }
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; p];
        'combos: loop {
            for late_side in [false, true] {
                let parts: Vec<(Vec<usize>, Vec<f64>)> = (0..p)
                    .map(|k| {
                        let tm = &lists[k][idx[k]];
                        (tm.seq.clone(), if late_side { tm.latest.clone() } else { tm.earliest.clone() })
                    })
                    .collect();
                let mut sol = build_solution(inst, asg.clone(), parts, 0.0);
                sol.objective = match inst.model_kind {
                    ModelKind::Operator => sol.operating_time(),
                    ModelKind::User => {
                        let late = sol.lateness.iter().filter(|(_, y)| *y).count() as f64;
                        let dev: f64 = sol
                            .lateness
                            .iter()
                            .map(|&(i, _)| sol.arrival_times[i].unwrap() - inst.nodes[i].scheduled.unwrap() as f64)
                            .sum();
                        (inst.beta * late).max(dev.abs())
                    }
                };
                debug_assert!(sol.lateness.iter().all(|&(i, y)| y
                    == (sol.arrival_times[i].unwrap() - inst.nodes[i].scheduled.unwrap() as f64 > thr + EPS)));
                out.push(sol);
                if out.len() >= limit {
                    return Ok(out);
                }
            }
            let mut k = p;
            loop {
                if k == 0 {
                    break 'combos;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < lists[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
