use super::*;
use crate::ingestion::HaversineProvider;
use proptest::prelude::*;

const DEPOT: GeoPoint = GeoPoint::new(35.0, -80.0);

fn request(k: usize, direction: Direction, pickup: i64, dropoff: i64) -> TripRequest {
    let d = 0.01 * (k + 1) as f64;
    TripRequest {
        id: format!("r{k}"),
        direction,
        pickup_location: GeoPoint::new(35.0 + d, -80.0),
        dropoff_location: GeoPoint::new(35.0, -80.0 + d),
        scheduled_pickup: pickup,
        scheduled_dropoff: dropoff,
        period: Period::containing(pickup, 60),
    }
}

fn build(requests: &[TripRequest], kind: ModelKind) -> Result<Instance, InstanceError> {
    let config = InstanceConfig { model_kind: kind, ..Default::default() };
    build_instance(requests, &Fleet::uniform(2, 7, DEPOT), &config, &mut HaversineProvider { speed_kmh: 40.0 })
}

#[test]
fn single_inbound_request_node_layout() {
    let inst = build(&[request(0, Direction::Inbound, 480, 510)], ModelKind::Operator).unwrap();
    assert_eq!(inst.node_count(), 4);
    assert_eq!(inst.pickups(), 1..=1);
    assert_eq!(inst.dropoffs(), 2..=2);
    let q: Vec<i32> = inst.nodes.iter().map(|v| v.load).collect();
    assert_eq!(q, vec![0, 1, -1, 0]);
    assert_eq!(inst.h_nodes(), vec![2]);
}

#[test]
fn service_times() {
    let inst = build(&[request(0, Direction::Outbound, 480, 510)], ModelKind::Operator).unwrap();
    let d: Vec<i64> = inst.nodes.iter().map(|v| v.service).collect();
    assert_eq!(d, vec![0, 7, 5, 0]);
}

#[test]
fn three_requests_have_37_arcs() {
    let reqs: Vec<_> = (0..3).map(|k| request(k, Direction::Inbound, 480 + 5 * k as i64, 520)).collect();
    let inst = build(&reqs, ModelKind::Operator).unwrap();
    assert_eq!(inst.node_count(), 8);
    assert_eq!(inst.arcs.len(), 37);
    assert_eq!(inst.travel(0, 7), Some(Tenths::ZERO));
    assert!(!inst.has_arc(7, 0));
    assert!(!inst.has_arc(0, 4));
    assert!(!inst.has_arc(1, 7));
    assert!(!inst.has_arc(3, 3));
}

#[test]
fn operator_windows() {
    let reqs = [request(0, Direction::Outbound, 480, 510), request(1, Direction::Inbound, 490, 540)];
    let inst = build(&reqs, ModelKind::Operator).unwrap();
    let w = |i: usize| (inst.nodes[i].earliest, inst.nodes[i].latest);
    // Outbound pickup is in H, its dropoff is not.
    assert_eq!(w(1), (450, 480));
    assert_eq!(w(3), (495, 525));
    // Inbound pickup is not in H, its dropoff is.
    assert_eq!(w(2), (475, 505));
    assert_eq!(w(4), (510, 540));
    assert_eq!(w(0), (0, 1440));
    assert_eq!(w(5), (0, 1440));
}

#[test]
fn non_h_pickup_window_at_eight() {
    let inst = build(&[request(0, Direction::Inbound, 480, 530)], ModelKind::Operator).unwrap();
    assert_eq!((inst.nodes[1].earliest, inst.nodes[1].latest), (465, 495));
}

#[test]
fn user_windows_free_h_nodes() {
    let reqs = [request(0, Direction::Outbound, 480, 510), request(1, Direction::Inbound, 490, 540)];
    let inst = build(&reqs, ModelKind::User).unwrap();
    for i in inst.h_nodes() {
        assert_eq!((inst.nodes[i].earliest, inst.nodes[i].latest), (0, 1440));
    }
    assert_eq!((inst.nodes[2].earliest, inst.nodes[2].latest), (475, 505));
}

#[test]
fn odd_window_rounds_the_upper_half_up() {
    let mut inst = build(&[request(0, Direction::Inbound, 480, 530)], ModelKind::Operator).unwrap();
    inst.window_length[1] = 7;
    let inst = set_time_windows(inst).unwrap();
    assert_eq!((inst.nodes[1].earliest, inst.nodes[1].latest), (477, 484));
}

#[test]
fn windows_are_clipped_to_the_day() {
    let inst = build(&[request(0, Direction::Inbound, 5, 30)], ModelKind::Operator).unwrap();
    assert_eq!((inst.nodes[1].earliest, inst.nodes[1].latest), (0, 20));
    assert_eq!((inst.nodes[2].earliest, inst.nodes[2].latest), (0, 30));
}

#[test]
fn with_model_kind_switches_windows() {
    let reqs = [request(0, Direction::Outbound, 480, 510)];
    let om = build(&reqs, ModelKind::Operator).unwrap();
    assert_eq!(om.with_model_kind(ModelKind::User).unwrap(), build(&reqs, ModelKind::User).unwrap());
}

#[test]
fn build_errors() {
    assert!(matches!(build(&[], ModelKind::Operator), Err(InstanceError::EmptyPeriod)));
    let mixed = [request(0, Direction::Inbound, 480, 510), request(1, Direction::Inbound, 560, 600)];
    assert!(matches!(build(&mixed, ModelKind::Operator), Err(InstanceError::MixedPeriods(..))));
    let backwards = [request(0, Direction::Inbound, 480, 470)];
    assert!(matches!(build(&backwards, ModelKind::Operator), Err(InstanceError::InvalidRequest { .. })));
    let mut same = request(0, Direction::Inbound, 480, 510);
    same.dropoff_location = same.pickup_location;
    assert!(matches!(build(&[same], ModelKind::Operator), Err(InstanceError::InvalidRequest { .. })));
    let config = InstanceConfig { window: -1, ..Default::default() };
    let err = build_instance(
        &[request(0, Direction::Inbound, 480, 510)],
        &Fleet::uniform(1, 7, DEPOT),
        &config,
        &mut HaversineProvider { speed_kmh: 40.0 },
    );
    assert!(matches!(err, Err(InstanceError::InvalidConfig(_))));
    let err = build_instance(
        &[request(0, Direction::Inbound, 480, 510)],
        &Fleet::uniform(0, 7, DEPOT),
        &InstanceConfig::default(),
        &mut HaversineProvider { speed_kmh: 40.0 },
    );
    assert!(matches!(err, Err(InstanceError::InvalidFleet(_))));
}

#[test]
fn matrix_shape_is_checked() {
    let reqs = [request(0, Direction::Inbound, 480, 510)];
    let err = build_instance_with_matrix(
        &reqs,
        &Fleet::uniform(1, 7, DEPOT),
        &InstanceConfig::default(),
        &vec![vec![0.0; 3]; 3],
    );
    assert!(matches!(err, Err(InstanceError::MatrixShape { got: 3, expected: 4 })));
    let mut m = vec![vec![1.0; 4]; 4];
    m[1][2] = -1.0;
    let err = build_instance_with_matrix(&reqs, &Fleet::uniform(1, 7, DEPOT), &InstanceConfig::default(), &m);
    assert!(matches!(err, Err(InstanceError::NegativeTravel { from: 1, to: 2, .. })));
}

#[test]
fn travel_times_round_half_up_to_tenths() {
    let reqs = [request(0, Direction::Inbound, 480, 510)];
    let mut m = vec![vec![0.0; 4]; 4];
    m[1][2] = 12.25;
    m[2][1] = 12.24;
    let inst = build_instance_with_matrix(&reqs, &Fleet::uniform(1, 7, DEPOT), &InstanceConfig::default(), &m).unwrap();
    assert_eq!(inst.travel(1, 2), Some(Tenths(123)));
    assert_eq!(inst.travel(2, 1), Some(Tenths(122)));
}

#[test]
fn json_round_trip_is_byte_stable() {
    let reqs: Vec<_> = (0..3)
        .map(|k| request(k, if k % 2 == 0 { Direction::Inbound } else { Direction::Outbound }, 480 + k as i64, 530))
        .collect();
    for kind in [ModelKind::Operator, ModelKind::User] {
        let inst = build(&reqs, kind).unwrap();
        let json = inst.to_json();
        let back = Instance::from_json(&json).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json(), json);
        assert_eq!(build(&reqs, kind).unwrap().to_json(), json);
    }
}

#[test]
fn from_json_rejects_broken_instances() {
    let inst = build(&[request(0, Direction::Inbound, 480, 510)], ModelKind::Operator).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&inst.to_json()).unwrap();
    v["arcs"].as_array_mut().unwrap().pop();
    assert!(matches!(Instance::from_json(&v.to_string()), Err(InstanceError::Malformed(_))));
    assert!(matches!(Instance::from_json("{"), Err(InstanceError::Malformed(_))));
}

#[test]
fn period_labels_and_membership() {
    let p = Period::containing(480, 60);
    assert_eq!(p, Period { start: 480, end: 540 });
    assert!(p.contains(480) && !p.contains(540));
    assert_eq!(p.label(), "8 am - 9 am");
    assert_eq!(Period::containing(725, 60).label(), "12 pm - 1 pm");
    assert_eq!(Period { start: 450, end: 480 }.label(), "7:30 am - 8 am");
    assert_eq!(p.to_string(), "08:00-09:00");
}

#[test]
fn model_kind_parses() {
    assert_eq!("om".parse::<ModelKind>(), Ok(ModelKind::Operator));
    assert_eq!("UM".parse::<ModelKind>(), Ok(ModelKind::User));
    assert!("xm".parse::<ModelKind>().is_err());
}

fn arb_requests() -> impl Strategy<Value = Vec<TripRequest>> {
    prop::collection::vec((any::<bool>(), 0i64..60, 10i64..90), 1..5).prop_map(|legs| {
        legs.into_iter()
            .enumerate()
            .map(|(k, (inbound, off, ride))| {
                let dir = if inbound { Direction::Inbound } else { Direction::Outbound };
                let mut r = request(k, dir, 600 + off, 600 + off + ride);
                r.period = Period { start: 600, end: 660 };
                r
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn built_instances_satisfy_invariants(reqs in arb_requests()) {
        let om = build(&reqs, ModelKind::Operator).unwrap();
        let um = om.with_model_kind(ModelKind::User).unwrap();
        let n = reqs.len();
        prop_assert_eq!(om.nodes.iter().map(|v| v.load).sum::<i32>(), 0);
        prop_assert_eq!(om.pickups().count(), n);
        prop_assert_eq!(om.dropoffs().count(), n);
        for (k, r) in reqs.iter().enumerate() {
            let (p, d) = (&om.nodes[1 + k], &om.nodes[1 + n + k]);
            prop_assert_eq!(om.pair_of(1 + k), 1 + n + k);
            prop_assert_eq!(p.scheduled, Some(r.scheduled_pickup));
            prop_assert_eq!(d.scheduled, Some(r.scheduled_dropoff));
            prop_assert_eq!(p.in_h, r.direction == Direction::Outbound);
            prop_assert_eq!(d.in_h, r.direction == Direction::Inbound);
        }
        for i in om.h_nodes() {
            prop_assert_eq!(om.nodes[i].latest, om.nodes[i].scheduled.unwrap());
            prop_assert_eq!((um.nodes[i].earliest, um.nodes[i].latest), (0, 1440));
        }
        for (a, b) in om.nodes.iter().zip(&um.nodes) {
            prop_assert!(a.earliest <= a.latest);
            prop_assert!(b.earliest <= a.earliest && a.latest <= b.latest);
        }
        for a in &om.arcs {
            prop_assert!(a.time.0 >= 0);
        }
    }
}
