use super::*;
use crate::formulation::{build_model, ModelSpec, RowSense, VarKind};
use crate::geo::GeoPoint;
use crate::instance::{
    build_instance_with_matrix, Direction, Fleet, Instance, InstanceConfig, ModelKind, Period, TripRequest,
};

fn one_var_lp(lo_row: f64, hi_row: f64) -> ModelSpec {
    let mut m = ModelSpec::new("t");
    let x = m.add_var("x", VarKind::Continuous, 0.0, f64::INFINITY);
    m.add_constraint("lo", [(x, 1.0)], RowSense::Ge, lo_row);
    m.add_constraint("hi", [(x, 1.0)], RowSense::Le, hi_row);
    m.set_objective([(x, 1.0)]);
    m
}

#[test]
fn lp_single_variable() {
    let s = solve_lp(&one_var_lp(3.0, 10.0)).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 3.0).abs() < 1e-9);
}

#[test]
fn lp_contradictory_bounds() {
    let s = solve_lp(&one_var_lp(2.0, 1.0)).unwrap();
    assert_eq!(s.status, LpStatus::Infeasible);
}

#[test]
fn lp_unbounded() {
    let mut m = ModelSpec::new("u");
    let x = m.add_var("x", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY);
    m.add_constraint("c", [(x, 1.0)], RowSense::Le, 4.0);
    m.set_objective([(x, 1.0)]);
    assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn lp_small_dense() {
    // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3  → (3, 1), value 11.
    let mut m = ModelSpec::new("d");
    let x = m.add_var("x", VarKind::Continuous, 0.0, 3.0);
    let y = m.add_var("y", VarKind::Continuous, 0.0, f64::INFINITY);
    m.add_constraint("a", [(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
    m.add_constraint("b", [(x, 1.0), (y, 3.0)], RowSense::Le, 6.0);
    m.set_objective([(x, -3.0), (y, -2.0)]);
    let s = solve_lp(&m).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 11.0).abs() < 1e-9, "{}", s.objective);
    assert!((s.values[0] - 3.0).abs() < 1e-9 && (s.values[1] - 1.0).abs() < 1e-9);
}

#[test]
fn lp_equality_and_free() {
    // min x - y, x + y = 2, x - y >= -4, free vars → x = -1, y = 3, value -4.
    let mut m = ModelSpec::new("e");
    let x = m.add_var("x", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY);
    let y = m.add_var("y", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY);
    m.add_constraint("sum", [(x, 1.0), (y, 1.0)], RowSense::Eq, 2.0);
    m.add_constraint("diff", [(x, 1.0), (y, -1.0)], RowSense::Ge, -4.0);
    m.set_objective([(x, 1.0), (y, -1.0)]);
    let s = solve_lp(&m).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 4.0).abs() < 1e-9);
}

#[test]
fn mip_knapsack() {
    // max 5a + 4b + 3c, 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8 → a = b = 1, value 9.
    let mut m = ModelSpec::new("k");
    let v: Vec<_> = ["a", "b", "c"].iter().map(|n| m.add_binary(*n)).collect();
    m.add_constraint("r1", [(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], RowSense::Le, 5.0);
    m.add_constraint("r2", [(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], RowSense::Le, 11.0);
    m.add_constraint("r3", [(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], RowSense::Le, 8.0);
    m.set_objective([(v[0], -5.0), (v[1], -4.0), (v[2], -3.0)]);
    let out = solve_mip(&m, &SolverConfig::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.objective + 9.0).abs() < 1e-9, "{}", out.objective);
}

#[test]
fn mip_infeasible() {
    let mut m = ModelSpec::new("i");
    let a = m.add_binary("a");
    let b = m.add_binary("b");
    m.add_constraint("c", [(a, 1.0), (b, 1.0)], RowSense::Eq, 1.5);
    m.set_objective([(a, 1.0)]);
    let out = solve_mip(&m, &SolverConfig::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Infeasible);
}

pub(crate) fn one_request(kind: ModelKind, p: usize) -> Instance {
    let req = TripRequest {
        id: "r1".into(),
        direction: Direction::Inbound,
        pickup_location: GeoPoint::new(35.0, -80.0),
        dropoff_location: GeoPoint::new(35.1, -80.0),
        scheduled_pickup: 480,
        scheduled_dropoff: 500,
        period: Period { start: 480, end: 540 },
    };
    let fleet = Fleet::uniform(p, 7, GeoPoint::new(35.05, -80.05));
    let cfg = InstanceConfig { model_kind: kind, ..Default::default() };
    let minutes = vec![
        vec![0.0, 10.0, 12.0, 0.0],
        vec![10.0, 0.0, 5.0, 10.0],
        vec![12.0, 5.0, 0.0, 10.0],
        vec![0.0, 10.0, 10.0, 0.0],
    ];
    build_instance_with_matrix(&[req], &fleet, &cfg, &minutes).unwrap()
}

#[test]
fn single_request_operating_time() {
    for p in [1, 2] {
        let inst = one_request(ModelKind::Operator, p);
        let model = build_model(&inst).unwrap();
        let res = solve_darp(&model, &SolverConfig::default(), None).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective.unwrap() - 37.0).abs() < 1e-6, "{:?}", res.objective);
        assert!(res.routes.contains(&vec![0, 1, 2, 3]));
        assert_eq!(res.vehicles_used(), 1);
        assert!(check_solution(&inst, &res).is_empty(), "{:?}", check_solution(&inst, &res));
    }
}

#[test]
fn single_request_relaxation_bounds_optimum() {
    let inst = one_request(ModelKind::Operator, 1);
    let model = build_model(&inst).unwrap();
    let lp = solve_lp(&model.spec).unwrap();
    assert_eq!(lp.status, LpStatus::Optimal);
    assert!(lp.objective >= -1e-9 && lp.objective <= 37.0 + 1e-9);
}

#[test]
fn check_flags_swapped_route() {
    let inst = one_request(ModelKind::Operator, 1);
    let model = build_model(&inst).unwrap();
    let mut res = solve_darp(&model, &SolverConfig::default(), None).unwrap();
    res.routes[0] = vec![0, 2, 1, 3];
    let kinds: Vec<_> = check_solution(&inst, &res).into_iter().map(|v| v.kind).collect();
    assert!(kinds.contains(&ViolationKind::Pairing));
    assert!(kinds.contains(&ViolationKind::Precedence) || kinds.contains(&ViolationKind::InvalidArc));
}

#[test]
fn check_flags_late_arrival_at_deadline_node() {
    let inst = one_request(ModelKind::Operator, 1);
    let model = build_model(&inst).unwrap();
    let mut res = solve_darp(&model, &SolverConfig::default(), None).unwrap();
    let s = inst.nodes[2].scheduled.unwrap() as f64;
    res.arrival_times[2] = Some(s + 1.0);
    let kinds: Vec<_> = check_solution(&inst, &res).into_iter().map(|v| v.kind).collect();
    assert!(kinds.contains(&ViolationKind::Window), "{kinds:?}");
}

#[test]
fn progress_line_format() {
    let p = Progress::new(12, Some(40.0), 30.0, std::time::Duration::from_millis(1500));
    assert_eq!(p.to_string(), "node=12 incumbent=40 bound=30 gap=0.25 time=1.500");
}
