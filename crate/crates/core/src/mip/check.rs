//! Feasibility checking of candidate schedules directly against the
//! instance, without going through the model.

use super::result::SolveResult;
use crate::instance::{Instance, ModelKind};
use serde::{Deserialize, Serialize};

const TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    /// A route does not start at 0 and end at 2n+1, or the route count is wrong.
    RouteShape,
    /// Consecutive nodes that are not an arc of `A`.
    InvalidArc,
    /// A customer node visited zero or several times.
    VisitOnce,
    /// Pickup and dropoff on different routes, or the dropoff first.
    Pairing,
    /// `B_{n+i} < B_i + t_{i,n+i} + d_i`.
    Precedence,
    Window,
    /// `B_j < B_i + t_ij + d_i` on a traversed arc, or a missing time.
    Timing,
    Capacity,
    /// `B_i − s_i > T` without the lateness flag set.
    Lateness,
    /// The visiting order admits no schedule at all.
    Unschedulable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub vehicle: Option<usize>,
    pub node: Option<usize>,
    pub detail: String,
}

/// Checks `candidate` against `inst`; an empty list means feasible.
pub fn check_solution(inst: &Instance, candidate: &SolveResult) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.n;
    let end = 2 * n + 1;
    let mut push = |kind, vehicle: Option<usize>, node: Option<usize>, detail: String| {
        out.push(Violation { kind, vehicle, node, detail });
    };
    let p = inst.vehicles();
    if candidate.routes.len() != p {
        push(ViolationKind::RouteShape, None, None, format!("{} routes for {p} vehicles", candidate.routes.len()));
    }

    let mut seen = vec![0usize; end + 1];
    let mut route_of = vec![None; end + 1];
    let mut position = vec![0usize; end + 1];
    for (k, route) in candidate.routes.iter().enumerate() {
        if route.first() != Some(&0) || route.last() != Some(&end) || route.len() < 2 {
            push(ViolationKind::RouteShape, Some(k), None, format!("route {route:?}"));
        }
        for (pos, &v) in route.iter().enumerate() {
            if v > end {
                push(ViolationKind::RouteShape, Some(k), Some(v), "node out of range".into());
                continue;
            }
            if (1..end).contains(&v) {
                seen[v] += 1;
                route_of[v] = Some(k);
                position[v] = pos;
            } else if pos != 0 && pos + 1 != route.len() {
                push(ViolationKind::RouteShape, Some(k), Some(v), "depot inside a route".into());
            }
        }
        for w in route.windows(2) {
            if w[0] <= end && w[1] <= end && !inst.has_arc(w[0], w[1]) {
                push(ViolationKind::InvalidArc, Some(k), Some(w[0]), format!("({}, {}) is not an arc", w[0], w[1]));
            }
        }
    }
    for i in 1..end {
        if seen[i] != 1 {
            push(ViolationKind::VisitOnce, None, Some(i), format!("visited {} times", seen[i]));
        }
    }
    for i in inst.pickups() {
        let di = inst.pair_of(i);
        match (route_of[i], route_of[di]) {
            (Some(a), Some(b)) if a == b && position[i] < position[di] => {}
            (Some(a), Some(b)) if a == b => {
                push(ViolationKind::Pairing, Some(a), Some(i), format!("dropoff {di} precedes pickup {i}"))
            }
            _ => {
                push(ViolationKind::Pairing, None, Some(i), format!("pickup {i} and dropoff {di} on different routes"))
            }
        }
    }

    let t = |i: usize, j: usize| inst.travel(i, j).map(|x| x.minutes());
    let d = |i: usize| inst.nodes[i].service as f64;

    // Capacity and schedulability, recomputed along each route.
    for (k, route) in candidate.routes.iter().enumerate() {
        let cap = inst.fleet.capacities.get(k).copied().unwrap_or(0) as i64;
        let mut load = 0i64;
        for &v in route.iter().filter(|&&v| v <= end) {
            load += inst.nodes[v].load as i64;
            if load > cap || load < 0 {
                push(ViolationKind::Capacity, Some(k), Some(v), format!("load {load} with capacity {cap}"));
            }
        }
        let mut earliest = vec![f64::NEG_INFINITY; end + 1];
        let mut prev: Option<usize> = None;
        for &v in route.iter().filter(|&&v| v <= end) {
            let node = &inst.nodes[v];
            let mut b = node.earliest as f64;
            if let Some(u) = prev {
                if let Some(tt) = t(u, v) {
                    b = b.max(earliest[u] + tt + d(u));
                }
            }
            if (n + 1..=2 * n).contains(&v) {
                let pk = v - n;
                if route_of[pk] == Some(k) && earliest[pk].is_finite() {
                    if let Some(tt) = t(pk, v) {
                        b = b.max(earliest[pk] + tt + d(pk));
                    }
                }
            }
            if b > node.latest as f64 + TOL {
                push(
                    ViolationKind::Unschedulable,
                    Some(k),
                    Some(v),
                    format!("earliest arrival {b} after {}", node.latest),
                );
            }
            earliest[v] = b;
            prev = Some(v);
        }
    }

    // The candidate's own times.
    let time_at = |k: usize, v: usize| -> Option<f64> {
        match v {
            0 => candidate.depot_times.get(k).map(|&(s, _)| s),
            v if v == end => candidate.depot_times.get(k).map(|&(_, e)| e),
            v => candidate.arrival_times.get(v).copied().flatten(),
        }
    };
    for (k, route) in candidate.routes.iter().enumerate() {
        for &v in route {
            if v > end {
                continue;
            }
            let Some(b) = time_at(k, v) else {
                push(ViolationKind::Timing, Some(k), Some(v), "missing arrival time".into());
                continue;
            };
            let node = &inst.nodes[v];
            if b < node.earliest as f64 - TOL || b > node.latest as f64 + TOL {
                push(
                    ViolationKind::Window,
                    Some(k),
                    Some(v),
                    format!("B = {b} outside [{}, {}]", node.earliest, node.latest),
                );
            }
        }
        for w in route.windows(2) {
            let (u, v) = (w[0], w[1]);
            if u > end || v > end {
                continue;
            }
            let (Some(bu), Some(bv), Some(tt)) = (time_at(k, u), time_at(k, v), t(u, v)) else {
                continue;
            };
            if bv < bu + tt + d(u) - TOL {
                push(
                    ViolationKind::Timing,
                    Some(k),
                    Some(v),
                    format!("B_{v} = {bv} < B_{u} + t + d = {}", bu + tt + d(u)),
                );
            }
        }
    }
    for i in inst.pickups() {
        let di = inst.pair_of(i);
        let (Some(bi), Some(bd)) =
            (candidate.arrival_times.get(i).copied().flatten(), candidate.arrival_times.get(di).copied().flatten())
        else {
            continue;
        };
        let need = bi + t(i, di).unwrap_or(0.0) + d(i);
        if bd < need - TOL {
            push(ViolationKind::Precedence, None, Some(i), format!("B_{di} = {bd} < {need}"));
        }
    }

    if inst.model_kind == ModelKind::User || !candidate.lateness.is_empty() {
        let thr = inst.lateness_threshold as f64;
        for i in inst.h_nodes() {
            let (Some(b), Some(s)) = (candidate.arrival_times.get(i).copied().flatten(), inst.nodes[i].scheduled)
            else {
                continue;
            };
            let flagged = candidate.lateness.iter().any(|&(j, y)| j == i && y);
            if b - s as f64 > thr + TOL && !flagged {
                push(
                    ViolationKind::Lateness,
                    None,
                    Some(i),
                    format!("{} min late without the lateness flag", b - s as f64),
                );
            }
        }
    }
    out
}
