//! The operator and user models on the three-index arc formulation.

use super::bigm::{compute_big_m, BigMSet};
use super::spec::{ModelSpec, RowSense, VarId, VarKind};
use super::FormulationError;
use crate::instance::{Instance, ModelKind};
use crate::time::Tenths;

fn minutes(t: Tenths) -> f64 {
    t.minutes()
}

/// Where each DARP quantity lives in the [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct VarLayout {
    pub n: usize,
    pub vehicles: usize,
    /// `(from, to)` of every arc, in instance order.
    pub arcs: Vec<(usize, usize)>,
    /// `x[a * vehicles + k]` for arc index `a` and 0-based vehicle `k`.
    pub x: Vec<VarId>,
    /// `B_i` for interior nodes (index by node; depots are `None`).
    pub time: Vec<Option<VarId>>,
    pub depart: Vec<VarId>,
    pub arrive: Vec<VarId>,
    /// `Q_i` for interior nodes.
    pub load: Vec<Option<VarId>>,
    pub end_load: Vec<VarId>,
    /// `(node, y_i)` for each node of `H` (user model only).
    pub late: Vec<(usize, VarId)>,
    pub z: Option<VarId>,
    arc_lookup: Vec<Option<usize>>,
}

impl VarLayout {
    pub fn arc_index(&self, i: usize, j: usize) -> Option<usize> {
        let nn = 2 * self.n + 2;
        if i >= nn || j >= nn {
            return None;
        }
        self.arc_lookup[i * nn + j]
    }

    /// `x_{ijk}` with 0-based vehicle `k`.
    pub fn x_var(&self, i: usize, j: usize, k: usize) -> Option<VarId> {
        self.arc_index(i, j).map(|a| self.x[a * self.vehicles + k])
    }

    /// The variables indexed by vehicle `k`, in a fixed order shared by all
    /// vehicles: every `x_{ijk}` by arc, then `B_{0k}`, `B_{2n+1,k}`, `Q_{2n+1,k}`.
    pub fn vehicle_block(&self, k: usize) -> Vec<VarId> {
        let mut v: Vec<VarId> = (0..self.arcs.len()).map(|a| self.x[a * self.vehicles + k]).collect();
        v.extend([self.depart[k], self.arrive[k], self.end_load[k]]);
        v
    }
}

/// A DARP model together with its variable layout and constants.
#[derive(Debug, Clone, PartialEq)]
pub struct DarpModel {
    pub kind: ModelKind,
    pub spec: ModelSpec,
    pub layout: VarLayout,
    pub big_m: BigMSet,
    /// Groups of interchangeable vehicles (equal capacity), each ascending.
    pub symmetric_vehicles: Vec<Vec<usize>>,
}

impl DarpModel {
    /// The model's variable assignment for a schedule given as routes and
    /// times. Loads follow the routes; `y_i` flags `B_i − s_i > T` and `z`
    /// takes the largest of its three lower bounds.
    pub fn point(
        &self,
        inst: &Instance,
        routes: &[Vec<usize>],
        arrival_times: &[Option<f64>],
        depot_times: &[(f64, f64)],
    ) -> Vec<f64> {
        let lay = &self.layout;
        let mut v = vec![0.0; self.spec.num_vars()];
        for (k, route) in routes.iter().enumerate() {
            let mut onboard = 0.0;
            for w in route.windows(2) {
                if let Some(x) = lay.x_var(w[0], w[1], k) {
                    v[x] = 1.0;
                }
                if let Some(q) = lay.load.get(w[1]).copied().flatten() {
                    onboard += inst.nodes[w[1]].load as f64;
                    v[q] = onboard;
                }
            }
            v[lay.depart[k]] = depot_times[k].0;
            v[lay.arrive[k]] = depot_times[k].1;
            v[lay.end_load[k]] = 0.0;
        }
        for (i, b) in lay.time.iter().enumerate() {
            if let (Some(b), Some(t)) = (b, arrival_times.get(i).copied().flatten()) {
                v[*b] = t;
            }
        }
        if let Some(z) = lay.z {
            let (mut late, mut signed) = (0.0, 0.0);
            for &(i, y) in &lay.late {
                let dev = v[lay.time[i].expect("H node is interior")] - inst.nodes[i].scheduled.unwrap_or(0) as f64;
                if dev > inst.lateness_threshold as f64 + 1e-9 {
                    v[y] = 1.0;
                    late += 1.0;
                }
                signed += dev;
            }
            v[z] = (inst.beta * late).max(signed.abs());
        }
        v
    }

    /// Variable blocks of interchangeable vehicles, for symmetry handling.
    pub fn symmetry_blocks(&self) -> Vec<Vec<Vec<VarId>>> {
        self.symmetric_vehicles
            .iter()
            .filter(|g| g.len() > 1)
            .map(|g| g.iter().map(|&k| self.layout.vehicle_block(k)).collect())
            .collect()
    }
}

pub fn build_operator_model(inst: &Instance) -> Result<DarpModel, FormulationError> {
    if inst.model_kind != ModelKind::Operator {
        return Err(FormulationError::InvalidInstance("operator model requested for a user-model instance".into()));
    }
    Ok(build_skeleton(inst, ModelKind::Operator))
}

pub fn build_user_model(inst: &Instance) -> Result<DarpModel, FormulationError> {
    if inst.model_kind != ModelKind::User {
        return Err(FormulationError::InvalidInstance("user model requested for an operator-model instance".into()));
    }
    Ok(build_skeleton(inst, ModelKind::User))
}

/// Builds whichever model the instance is configured for.
pub fn build_model(inst: &Instance) -> Result<DarpModel, FormulationError> {
    match inst.model_kind {
        ModelKind::Operator => build_operator_model(inst),
        ModelKind::User => build_user_model(inst),
    }
}

fn build_skeleton(inst: &Instance, kind: ModelKind) -> DarpModel {
    let n = inst.n;
    let p = inst.vehicles();
    let nn = inst.node_count();
    let end = inst.destination_depot();
    let big_m = compute_big_m(inst);
    let (m1, m2) = (big_m.m1, big_m.m2);
    let name = match kind {
        ModelKind::Operator => "darp_om",
        ModelKind::User => "darp_um",
    };
    let mut spec = ModelSpec::new(name);

    // Arc variables x_{ijk}.
    let arcs: Vec<(usize, usize)> = inst.arcs.iter().map(|a| (a.from, a.to)).collect();
    let mut arc_lookup = vec![None; nn * nn];
    let mut x = Vec::with_capacity(arcs.len() * p);
    for (a, &(i, j)) in arcs.iter().enumerate() {
        arc_lookup[i * nn + j] = Some(a);
        for k in 1..=p {
            x.push(spec.add_binary(format!("x_{i}_{j}_{k}")));
        }
    }

    // Times: node-indexed B_i inside, vehicle-indexed at the depots.
    let mut time = vec![None; nn];
    for i in inst.interior() {
        let v = &inst.nodes[i];
        time[i] = Some(spec.add_var(format!("B_{i}"), VarKind::Continuous, v.earliest as f64, v.latest as f64));
    }
    let (o, d) = (&inst.nodes[0], &inst.nodes[end]);
    let depart: Vec<VarId> = (1..=p)
        .map(|k| spec.add_var(format!("B_0_{k}"), VarKind::Continuous, o.earliest as f64, o.latest as f64))
        .collect();
    let arrive: Vec<VarId> = (1..=p)
        .map(|k| spec.add_var(format!("B_{end}_{k}"), VarKind::Continuous, d.earliest as f64, d.latest as f64))
        .collect();

    // Loads: max{0, q_i} <= Q_i <= min{C_k, C_k + q_i} for all k.
    let min_cap = inst.fleet.capacities.iter().copied().min().unwrap_or(0) as f64;
    let mut load = vec![None; nn];
    for i in inst.interior() {
        let q = inst.nodes[i].load as f64;
        load[i] = Some(spec.add_var(format!("Q_{i}"), VarKind::Continuous, q.max(0.0), min_cap.min(min_cap + q)));
    }
    let end_load: Vec<VarId> = (1..=p)
        .map(|k| {
            let cap = inst.fleet.capacities[k - 1] as f64;
            spec.add_var(format!("Q_{end}_{k}"), VarKind::Continuous, 0.0, cap)
        })
        .collect();

    let xv = |i: usize, j: usize, k: usize| -> Option<VarId> { arc_lookup[i * nn + j].map(|a| x[a * p + k]) };
    let out_arcs = |i: usize| arcs.iter().filter(move |&&(a, _)| a == i).map(|&(_, b)| b);
    let in_arcs = |j: usize| arcs.iter().filter(move |&&(_, b)| b == j).map(|&(a, _)| a);
    let b = |i: usize| time[i].expect("interior time variable");
    let q = |i: usize| load[i].expect("interior load variable");

    // Every pickup is served once ...
    for i in inst.pickups() {
        let terms: Vec<_> =
            (0..p).flat_map(|k| out_arcs(i).map(move |j| (k, j))).map(|(k, j)| (xv(i, j, k).unwrap(), 1.0)).collect();
        spec.add_constraint(format!("visit_{i}"), terms, RowSense::Eq, 1.0);
    }
    // ... by the same vehicle as its dropoff.
    for i in inst.pickups() {
        let di = inst.pair_of(i);
        for k in 0..p {
            let mut terms: Vec<_> = out_arcs(i).map(|j| (xv(i, j, k).unwrap(), 1.0)).collect();
            terms.extend(out_arcs(di).map(|j| (xv(di, j, k).unwrap(), -1.0)));
            spec.add_constraint(format!("pair_{i}_{}", k + 1), terms, RowSense::Eq, 0.0);
        }
    }
    // Each vehicle leaves the origin depot and reaches the destination depot once.
    for k in 0..p {
        let terms: Vec<_> = out_arcs(0).map(|j| (xv(0, j, k).unwrap(), 1.0)).collect();
        spec.add_constraint(format!("depart_{}", k + 1), terms, RowSense::Eq, 1.0);
    }
    for k in 0..p {
        let terms: Vec<_> = in_arcs(end).map(|i| (xv(i, end, k).unwrap(), 1.0)).collect();
        spec.add_constraint(format!("return_{}", k + 1), terms, RowSense::Eq, 1.0);
    }
    // Flow conservation on P ∪ D.
    for i in inst.interior() {
        for k in 0..p {
            let mut terms: Vec<_> = in_arcs(i).map(|j| (xv(j, i, k).unwrap(), 1.0)).collect();
            terms.extend(out_arcs(i).map(|j| (xv(i, j, k).unwrap(), -1.0)));
            spec.add_constraint(format!("flow_{i}_{}", k + 1), terms, RowSense::Eq, 0.0);
        }
    }

    let t = |i: usize, j: usize| minutes(inst.travel(i, j).expect("arc exists"));
    let service = |i: usize| inst.nodes[i].service as f64;

    // B_j >= B_i + t_ij + d_i - M1 (1 - Σ_k x_ijk) on interior arcs.
    for i in inst.interior() {
        for j in inst.interior() {
            if i == j {
                continue;
            }
            let mut terms = vec![(b(j), 1.0), (b(i), -1.0)];
            terms.extend((0..p).map(|k| (xv(i, j, k).unwrap(), -m1)));
            spec.add_constraint(format!("timeprop_{i}_{j}"), terms, RowSense::Ge, t(i, j) + service(i) - m1);
        }
    }
    // Arrival at the destination depot.
    for i in inst.dropoffs() {
        for k in 0..p {
            let terms = vec![(arrive[k], 1.0), (b(i), -1.0), (xv(i, end, k).unwrap(), -m1)];
            spec.add_constraint(format!("timeend_{i}_{}", k + 1), terms, RowSense::Ge, t(i, end) + service(i) - m1);
        }
    }
    // Departure from the origin depot (d_0 = 0).
    for j in inst.pickups() {
        for k in 0..p {
            let terms = vec![(b(j), 1.0), (depart[k], -1.0), (xv(0, j, k).unwrap(), -m1)];
            spec.add_constraint(format!("timestart_{j}_{}", k + 1), terms, RowSense::Ge, t(0, j) + service(0) - m1);
        }
    }
    // Q_j >= Q_i + q_j - M2 (1 - Σ_k x_ijk) on interior arcs.
    for i in inst.interior() {
        for j in inst.interior() {
            if i == j {
                continue;
            }
            let qj = inst.nodes[j].load as f64;
            let mut terms = vec![(q(j), 1.0), (q(i), -1.0)];
            terms.extend((0..p).map(|k| (xv(i, j, k).unwrap(), -m2)));
            spec.add_constraint(format!("loadprop_{i}_{j}"), terms, RowSense::Ge, qj - m2);
        }
    }
    for i in inst.dropoffs() {
        for k in 0..p {
            let terms = vec![(end_load[k], 1.0), (q(i), -1.0), (xv(i, end, k).unwrap(), -m2)];
            spec.add_constraint(format!("loadend_{i}_{}", k + 1), terms, RowSense::Ge, -m2);
        }
    }
    // Q_j >= q_j - M2 (1 - x_0jk).
    for j in inst.pickups() {
        let qj = inst.nodes[j].load as f64;
        for k in 0..p {
            let terms = vec![(q(j), 1.0), (xv(0, j, k).unwrap(), -m2)];
            spec.add_constraint(format!("loadstart_{j}_{}", k + 1), terms, RowSense::Ge, qj - m2);
        }
    }
    // Pickup precedes its dropoff.
    for i in inst.pickups() {
        let di = inst.pair_of(i);
        spec.add_constraint(format!("prec_{i}"), [(b(di), 1.0), (b(i), -1.0)], RowSense::Ge, t(i, di) + service(i));
    }
    // Tightening: B_{2n+1,k} >= B_{0k}.
    for k in 0..p {
        spec.add_constraint(format!("tighten_{}", k + 1), [(arrive[k], 1.0), (depart[k], -1.0)], RowSense::Ge, 0.0);
    }

    let mut late = Vec::new();
    let mut z = None;
    match kind {
        ModelKind::Operator => {
            spec.set_objective((0..p).flat_map(|k| [(arrive[k], 1.0), (depart[k], -1.0)]));
        }
        ModelKind::User => {
            let h = inst.h_nodes();
            let tt = inst.lateness_threshold as f64;
            for &i in &h {
                late.push((i, spec.add_binary(format!("y_{i}"))));
            }
            let zv = spec.add_var("z", VarKind::Continuous, 0.0, f64::INFINITY);
            z = Some(zv);
            // B_i - s_i <= T (1 - y_i) + M3 y_i.
            for &(i, y) in &late {
                let s = inst.nodes[i].scheduled.expect("H node has a schedule") as f64;
                spec.add_constraint(format!("late_{i}"), [(b(i), 1.0), (y, tt - big_m.m3)], RowSense::Le, s + tt);
            }
            let s_sum: f64 = h.iter().map(|&i| inst.nodes[i].scheduled.unwrap() as f64).sum();
            let beta = inst.beta;
            spec.add_constraint(
                "zpen",
                std::iter::once((zv, 1.0)).chain(late.iter().map(|&(_, y)| (y, -beta))),
                RowSense::Ge,
                0.0,
            );
            spec.add_constraint(
                "zlate",
                std::iter::once((zv, 1.0)).chain(h.iter().map(|&i| (b(i), -1.0))),
                RowSense::Ge,
                -s_sum,
            );
            spec.add_constraint(
                "zearly",
                std::iter::once((zv, 1.0)).chain(h.iter().map(|&i| (b(i), 1.0))),
                RowSense::Ge,
                s_sum,
            );
            spec.set_objective([(zv, 1.0)]);
        }
    }

    // Vehicles with equal capacity are interchangeable.
    let mut symmetric_vehicles: Vec<Vec<usize>> = Vec::new();
    for k in 0..p {
        let cap = inst.fleet.capacities[k];
        match symmetric_vehicles.iter_mut().find(|g| inst.fleet.capacities[g[0]] == cap) {
            Some(g) => g.push(k),
            None => symmetric_vehicles.push(vec![k]),
        }
    }

    DarpModel {
        kind,
        spec,
        layout: VarLayout { n, vehicles: p, arcs, x, time, depart, arrive, load, end_load, late, z, arc_lookup },
        big_m,
        symmetric_vehicles,
    }
}
