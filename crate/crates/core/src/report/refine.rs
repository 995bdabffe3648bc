//! Choosing among a model's optima the one with least schedule deviation.
//! Unlike [`super::polish_schedule`] the routes may change.

use super::ReportError;
use crate::formulation::{DarpModel, RowSense, VarKind};
use crate::instance::Instance;
use crate::mip::{solve_mip_with, SolveHints, SolveResult, SolverConfig};

/// Re-solves `model` with its objective held at `res`'s value and
/// `Σ_{i∈H} |B_i − s_i|` minimized. `start` seeds the search; it should be a
/// schedule of `res`'s objective value. Returns `res` unchanged when it has
/// no schedule or the re-solve finds nothing better.
pub fn least_deviation_optimum(
    inst: &Instance,
    model: &DarpModel,
    res: &SolveResult,
    start: &SolveResult,
    solver: &SolverConfig,
) -> Result<SolveResult, ReportError> {
    let Some(objective) = res.objective.filter(|_| res.status.has_solution() && !res.routes.is_empty()) else {
        return Ok(res.clone());
    };
    let lay = &model.layout;
    let mut refined = model.clone();
    let spec = &mut refined.spec;
    let own = spec.objective.coeffs.clone();
    spec.add_constraint("keep_objective", own, RowSense::Le, objective + 1e-6 * (1.0 + objective.abs()));
    let mut deviation = Vec::new();
    let mut s_of = Vec::new();
    for i in inst.h_nodes() {
        let s = inst.nodes[i].scheduled.expect("H node has a schedule") as f64;
        let b = lay.time[i].expect("H node is interior");
        let u = spec.add_var(format!("u_{i}"), VarKind::Continuous, 0.0, f64::INFINITY);
        spec.add_constraint(format!("dev_hi_{i}"), [(u, 1.0), (b, -1.0)], RowSense::Ge, -s);
        spec.add_constraint(format!("dev_lo_{i}"), [(u, 1.0), (b, 1.0)], RowSense::Ge, s);
        deviation.push((u, 1.0));
        s_of.push((b, s));
    }
    spec.set_objective(deviation);

    let seed = |r: &SolveResult| {
        let mut v = model.point(inst, &r.routes, &r.arrival_times, &r.depot_times);
        let u: Vec<f64> = s_of.iter().map(|&(b, s)| (v[b] - s).abs()).collect();
        v.extend(u);
        v
    };
    let feasible = |v: &Vec<f64>| {
        refined.spec.violated_bounds(v, 1e-6).is_empty() && refined.spec.violated_rows(v, 1e-6).is_empty()
    };
    let incumbent = [start, res].into_iter().map(seed).find(feasible);
    let hints = SolveHints {
        symmetry: if solver.use_symmetry { refined.symmetry_blocks() } else { Vec::new() },
        progress: None,
        incumbent,
    };
    let out = solve_mip_with(&refined.spec, solver, hints).map_err(|e| ReportError::Polish(e.to_string()))?;
    if !out.status.has_solution() {
        log::warn!("least-deviation re-solve ended {}", out.status);
        return Ok(res.clone());
    }
    let mut better = SolveResult::from_outcome(&refined, &out);
    better.objective = Some(model.spec.objective_value(&out.values[..model.spec.num_vars()]));
    better.status = res.status;
    better.best_bound = res.best_bound;
    better.node_count += res.node_count;
    better.lp_iterations += res.lp_iterations;
    better.wall_time += res.wall_time;
    Ok(better)
}
