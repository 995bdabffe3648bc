//! Re-timing a solved schedule. Routes are kept; arrival times are chosen
//! lexicographically among the schedules that keep the solution's own
//! objective: the operator model's slack is spent on schedule deviation, the
//! user model's on operating time.

use super::{user_objective, ReportError};
use crate::formulation::{ModelSpec, RowSense, VarId, VarKind};
use crate::instance::{Instance, ModelKind};
use crate::mip::{check_solution, solve_lp, LpStatus, SolveResult};

/// Ordered objectives, each kept within tolerance of its optimum before the next.
struct Stages {
    op_time: Vec<(VarId, f64)>,
    deviation: Vec<(VarId, f64)>,
}

fn keep_within(spec: &mut ModelSpec, name: &str, terms: &[(VarId, f64)], value: f64) {
    let slack = 1e-9 * (1.0 + value.abs());
    spec.add_constraint(name, terms.iter().copied(), RowSense::Le, value + slack);
}

/// The re-timed copy of `res`; `res` unchanged when it has no schedule. Falls
/// back to `res` itself if the re-timed schedule does not verify.
pub fn polish_schedule(inst: &Instance, res: &SolveResult) -> Result<SolveResult, ReportError> {
    if res.routes.is_empty() || res.depot_times.is_empty() {
        return Ok(res.clone());
    }
    let n = inst.n;
    let end = 2 * n + 1;
    let p = res.routes.len();
    let mut spec = ModelSpec::new("polish");
    let mut time: Vec<Option<VarId>> = vec![None; end + 1];
    let late: Vec<usize> = res.lateness.iter().filter(|&&(_, y)| y).map(|&(i, _)| i).collect();
    for i in inst.interior() {
        let v = &inst.nodes[i];
        let mut hi = v.latest as f64;
        if inst.model_kind == ModelKind::User && v.in_h && !late.contains(&i) {
            hi = hi.min((v.scheduled.expect("H node has a schedule") + inst.lateness_threshold) as f64);
        }
        time[i] = Some(spec.add_var(format!("B_{i}"), VarKind::Continuous, v.earliest as f64, hi));
    }
    let (o, d) = (&inst.nodes[0], &inst.nodes[end]);
    let depart: Vec<VarId> = (0..p)
        .map(|k| spec.add_var(format!("B_0_{k}"), VarKind::Continuous, o.earliest as f64, o.latest as f64))
        .collect();
    let arrive: Vec<VarId> = (0..p)
        .map(|k| spec.add_var(format!("B_end_{k}"), VarKind::Continuous, d.earliest as f64, d.latest as f64))
        .collect();
    let at = |k: usize, v: usize| -> VarId {
        match v {
            0 => depart[k],
            v if v == end => arrive[k],
            v => time[v].expect("interior node"),
        }
    };
    for (k, route) in res.routes.iter().enumerate() {
        for w in route.windows(2) {
            let t = inst
                .travel(w[0], w[1])
                .ok_or_else(|| ReportError::Polish(format!("({}, {}) is not an arc", w[0], w[1])))?
                .minutes();
            let need = t + inst.nodes[w[0]].service as f64;
            spec.add_constraint(
                format!("arc_{}_{}_{k}", w[0], w[1]),
                [(at(k, w[1]), 1.0), (at(k, w[0]), -1.0)],
                RowSense::Ge,
                need,
            );
        }
        spec.add_constraint(format!("span_{k}"), [(arrive[k], 1.0), (depart[k], -1.0)], RowSense::Ge, 0.0);
    }
    for i in inst.pickups() {
        let di = inst.pair_of(i);
        let need = inst.travel(i, di).map_or(0.0, |t| t.minutes()) + inst.nodes[i].service as f64;
        spec.add_constraint(format!("prec_{i}"), [(at(0, di), 1.0), (at(0, i), -1.0)], RowSense::Ge, need);
    }

    let mut deviation = Vec::new();
    let mut signed = Vec::new();
    let mut s_sum = 0.0;
    for i in inst.h_nodes() {
        let s = inst.nodes[i].scheduled.expect("H node has a schedule") as f64;
        let u = spec.add_var(format!("u_{i}"), VarKind::Continuous, 0.0, f64::INFINITY);
        let b = at(0, i);
        spec.add_constraint(format!("dev_hi_{i}"), [(u, 1.0), (b, -1.0)], RowSense::Ge, -s);
        spec.add_constraint(format!("dev_lo_{i}"), [(u, 1.0), (b, 1.0)], RowSense::Ge, s);
        deviation.push((u, 1.0));
        signed.push((b, 1.0));
        s_sum += s;
    }
    let stages = Stages { op_time: (0..p).flat_map(|k| [(arrive[k], 1.0), (depart[k], -1.0)]).collect(), deviation };
    let order = match inst.model_kind {
        ModelKind::Operator => [&stages.op_time, &stages.deviation],
        ModelKind::User => {
            // |Σ (B_i − s_i)| may not grow beyond the solution's own objective.
            let z = user_objective(inst, res).ok_or(ReportError::ScheduleMissing("user-model"))?;
            let slack = 1e-7 * (1.0 + z);
            spec.add_constraint("sum_hi", signed.iter().copied(), RowSense::Le, s_sum + z + slack);
            spec.add_constraint("sum_lo", signed.iter().copied(), RowSense::Ge, s_sum - z - slack);
            [&stages.deviation, &stages.op_time]
        }
    };

    let mut values = Vec::new();
    for (stage, terms) in order.into_iter().enumerate() {
        spec.set_objective(terms.iter().copied());
        let lp = solve_lp(&spec).map_err(|e| ReportError::Polish(e.to_string()))?;
        if lp.status != LpStatus::Optimal {
            return Err(ReportError::Polish(format!("stage {stage} ended {:?}", lp.status)));
        }
        keep_within(&mut spec, &format!("stage_{stage}"), terms, lp.objective);
        values = lp.values;
    }

    let snap = |v: f64| {
        let r = (v * 10.0).round() / 10.0;
        if (r - v).abs() < 1e-4 {
            r
        } else {
            v
        }
    };
    let mut out = res.clone();
    for i in inst.interior() {
        out.arrival_times[i] = time[i].map(|b| snap(values[b]));
    }
    out.depot_times = (0..p).map(|k| (snap(values[depart[k]]), snap(values[arrive[k]]))).collect();
    if inst.model_kind == ModelKind::User {
        let late_now = super::late_nodes(inst, &out);
        for (i, y) in out.lateness.iter_mut() {
            *y = late_now.contains(i);
        }
    }
    let violations = check_solution(inst, &out);
    if !violations.is_empty() {
        log::warn!("re-timed schedule rejected: {:?}", violations[0]);
        return Ok(res.clone());
    }
    Ok(out)
}
