use super::bnb::{solve_mip_with, MipOutcome, SolveHints};
use super::{MipError, Progress, SolveStatus, SolverConfig};
use crate::formulation::DarpModel;
use crate::instance::ModelKind;
use serde::{Deserialize, Serialize};

/// Decoded solution of a DARP model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub model_kind: ModelKind,
    pub status: SolveStatus,
    /// `None` without an incumbent.
    pub objective: Option<f64>,
    pub best_bound: f64,
    /// Per vehicle, `0 → … → 2n+1`; empty without an incumbent.
    pub routes: Vec<Vec<usize>>,
    /// `B_i` per node; depots are `None` (see `depot_times`).
    pub arrival_times: Vec<Option<f64>>,
    /// `(B_0k, B_{2n+1,k})` per vehicle.
    pub depot_times: Vec<(f64, f64)>,
    /// `Q_i` per node; depots are `None` (see `end_loads`).
    pub loads: Vec<Option<f64>>,
    pub end_loads: Vec<f64>,
    /// `(i, y_i)` for each node of `H` (user model only).
    pub lateness: Vec<(usize, bool)>,
    pub node_count: u64,
    pub lp_iterations: u64,
    pub wall_time: f64,
}

impl SolveResult {
    pub fn from_outcome(model: &DarpModel, out: &MipOutcome) -> SolveResult {
        let lay = &model.layout;
        let nn = 2 * lay.n + 2;
        let end = nn - 1;
        let mut res = SolveResult {
            model_kind: model.kind,
            status: out.status,
            objective: None,
            best_bound: out.best_bound,
            routes: Vec::new(),
            arrival_times: vec![None; nn],
            depot_times: Vec::new(),
            loads: vec![None; nn],
            end_loads: Vec::new(),
            lateness: Vec::new(),
            node_count: out.node_count,
            lp_iterations: out.lp_iterations,
            wall_time: out.wall_time,
        };
        if out.values.is_empty() {
            return res;
        }
        let v = &out.values;
        res.objective = Some(out.objective);
        for k in 0..lay.vehicles {
            let mut route = vec![0];
            let mut cur = 0;
            while cur != end && route.len() <= nn {
                let next = (0..nn).find(|&j| lay.x_var(cur, j, k).is_some_and(|x| v[x] > 0.5));
                match next {
                    Some(j) => {
                        route.push(j);
                        cur = j;
                    }
                    None => break,
                }
            }
            res.routes.push(route);
            res.depot_times.push((v[lay.depart[k]], v[lay.arrive[k]]));
            res.end_loads.push(v[lay.end_load[k]]);
        }
        for i in 1..end {
            res.arrival_times[i] = lay.time[i].map(|b| v[b]);
            res.loads[i] = lay.load[i].map(|q| v[q]);
        }
        res.lateness = lay.late.iter().map(|&(i, y)| (i, v[y] > 0.5)).collect();
        res
    }

    /// Vehicles whose route visits at least one customer node.
    pub fn vehicles_used(&self) -> usize {
        self.routes.iter().filter(|r| r.len() > 2).count()
    }

    /// Total operating time `Σ_k B_{2n+1,k} − B_{0k}`.
    pub fn operating_time(&self) -> Option<f64> {
        if self.depot_times.is_empty() {
            return None;
        }
        Some(self.depot_times.iter().map(|(s, e)| e - s).sum())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Solves a DARP model, using its vehicle symmetry when enabled.
pub fn solve_darp(
    model: &DarpModel,
    config: &SolverConfig,
    progress: Option<&mut dyn FnMut(&Progress)>,
) -> Result<SolveResult, MipError> {
    let symmetry = if config.use_symmetry { model.symmetry_blocks() } else { Vec::new() };
    let out = solve_mip_with(&model.spec, config, SolveHints { symmetry, progress, incumbent: None })?;
    Ok(SolveResult::from_outcome(model, &out))
}
