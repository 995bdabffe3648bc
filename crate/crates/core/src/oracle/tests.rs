use super::*;
use crate::geo::GeoPoint;
use crate::instance::{build_instance_with_matrix, Direction, Fleet, InstanceConfig, Period, TripRequest};

fn request(id: &str, direction: Direction, pickup: i64, dropoff: i64) -> TripRequest {
    TripRequest {
        id: id.into(),
        direction,
        pickup_location: GeoPoint::new(35.0, -80.0),
        dropoff_location: GeoPoint::new(35.1, -80.0),
        scheduled_pickup: pickup,
        scheduled_dropoff: dropoff,
        period: Period { start: 480, end: 540 },
    }
}

fn instance(reqs: &[TripRequest], p: usize, kind: ModelKind, minutes: Vec<Vec<f64>>) -> Instance {
    let fleet = Fleet::uniform(p, 7, GeoPoint::new(35.05, -80.05));
    let cfg = InstanceConfig { model_kind: kind, ..Default::default() };
    build_instance_with_matrix(reqs, &fleet, &cfg, &minutes).unwrap()
}

fn one_request() -> Instance {
    let minutes = vec![
        vec![0.0, 10.0, 12.0, 0.0],
        vec![10.0, 0.0, 5.0, 10.0],
        vec![12.0, 5.0, 0.0, 10.0],
        vec![0.0, 10.0, 10.0, 0.0],
    ];
    instance(&[request("r1", Direction::Inbound, 480, 500)], 1, ModelKind::Operator, minutes)
}

#[test]
fn single_request_by_hand() {
    // 10 to the pickup, 7 boarding, 5 riding, 5 alighting, 10 back: 37.
    let sol = enumerate_optimal(&one_request()).unwrap();
    assert!((sol.objective - 37.0).abs() < 1e-9);
    assert_eq!(sol.routes, vec![vec![0, 1, 2, 3]]);
    assert!((sol.operating_time() - 37.0).abs() < 1e-9);
}

#[test]
fn sharing_versus_dedicated() {
    // Two requests with identical origins and destinations.
    let minutes = vec![
        vec![0.0, 10.0, 10.0, 20.0, 20.0, 0.0],
        vec![10.0, 0.0, 0.0, 8.0, 8.0, 10.0],
        vec![10.0, 0.0, 0.0, 8.0, 8.0, 10.0],
        vec![20.0, 8.0, 8.0, 0.0, 0.0, 20.0],
        vec![20.0, 8.0, 8.0, 0.0, 0.0, 20.0],
        vec![0.0, 10.0, 10.0, 20.0, 20.0, 0.0],
    ];
    let reqs = [request("a", Direction::Inbound, 480, 510), request("b", Direction::Inbound, 485, 515)];
    let shared = enumerate_optimal(&instance(&reqs, 1, ModelKind::Operator, minutes.clone())).unwrap();
    let two = enumerate_optimal(&instance(&reqs, 2, ModelKind::Operator, minutes.clone())).unwrap();
    let dedicated: f64 = (0..2)
        .map(|r| {
            enumerate_optimal(&instance(
                &reqs[r..=r],
                1,
                ModelKind::Operator,
                vec![
                    vec![0.0, 10.0, 20.0, 0.0],
                    vec![10.0, 0.0, 8.0, 10.0],
                    vec![20.0, 8.0, 0.0, 20.0],
                    vec![0.0, 10.0, 20.0, 0.0],
                ],
            ))
            .unwrap()
            .objective
        })
        .sum();
    assert!((two.objective - shared.objective.min(dedicated)).abs() < 1e-9);
}

#[test]
fn unreachable_deadline_is_infeasible() {
    // The dropoff is due before the vehicle can even reach the pickup.
    let minutes = vec![
        vec![0.0, 10.0, 12.0, 0.0],
        vec![10.0, 0.0, 50.0, 10.0],
        vec![12.0, 50.0, 0.0, 10.0],
        vec![0.0, 10.0, 10.0, 0.0],
    ];
    let inst = instance(&[request("r1", Direction::Inbound, 480, 500)], 1, ModelKind::Operator, minutes);
    assert_eq!(enumerate_optimal(&inst), Err(OracleError::Infeasible));
}

#[test]
fn guard_rejects_large_instances() {
    let reqs: Vec<_> = (0..5).map(|r| request(&format!("r{r}"), Direction::Inbound, 480, 520)).collect();
    let minutes = vec![vec![5.0; 12]; 12];
    let inst = instance(&reqs, 1, ModelKind::Operator, minutes);
    assert_eq!(enumerate_optimal(&inst), Err(OracleError::TooLarge { n: 5, p: 1 }));
}

#[test]
fn user_model_on_time_when_possible() {
    let inst = one_request().with_model_kind(ModelKind::User).unwrap();
    let sol = enumerate_optimal(&inst).unwrap();
    assert!(sol.objective.abs() < 1e-9);
    assert_eq!(sol.arrival_times[2], Some(500.0));
    assert_eq!(sol.lateness, vec![(2, false)]);
}

#[test]
fn feasible_points_include_the_optimum() {
    let inst = one_request();
    let pts = enumerate_feasible(&inst, 100).unwrap();
    assert_eq!(pts.len(), 2);
    let best = enumerate_optimal(&inst).unwrap();
    assert!(pts.iter().all(|p| p.objective >= best.objective - 1e-9));
}
