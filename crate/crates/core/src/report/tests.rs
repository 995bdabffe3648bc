use super::*;
use crate::formulation::build_model;
use crate::instance::Direction;
use crate::mip::{check_solution, solve_darp, SolverConfig};
use crate::synthetic::{random_instance, RandomSpec};

fn record(id: &str, direction: Direction, sched: (i64, i64), actual: (Option<i64>, Option<i64>)) -> RawTripRecord {
    RawTripRecord {
        id: Some(id.into()),
        direction: Some(direction),
        scheduled_pickup: Some(sched.0),
        scheduled_dropoff: Some(sched.1),
        actual_pickup: actual.0,
        actual_dropoff: actual.1,
        ..Default::default()
    }
}

#[test]
fn raw_deviation_is_zero_when_on_schedule() {
    let trips = [
        record("a", Direction::Inbound, (480, 510), (Some(480), Some(510))),
        record("b", Direction::Outbound, (600, 630), (Some(600), Some(630))),
    ];
    assert_eq!(evaluate_um_raw(&trips).unwrap(), 0.0);
}

#[test]
fn raw_deviation_of_one_late_inbound_dropoff() {
    let trips = [record("a", Direction::Inbound, (480, 510), (Some(490), Some(525)))];
    assert_eq!(evaluate_um_raw(&trips).unwrap(), 15.0);
}

#[test]
fn raw_deviation_sums_absolute_values() {
    let trips = [
        record("a", Direction::Inbound, (480, 510), (Some(480), Some(520))),
        record("b", Direction::Outbound, (600, 630), (Some(595), Some(640))),
    ];
    assert_eq!(evaluate_um_raw(&trips).unwrap(), 15.0);
}

#[test]
fn raw_deviation_needs_the_h_actual() {
    let trips = [record("a", Direction::Outbound, (600, 630), (None, Some(640)))];
    assert_eq!(evaluate_um_raw(&trips), Err(ReportError::MissingActuals("a".into())));
    // The non-H actual is not needed.
    let trips = [record("b", Direction::Outbound, (600, 630), (Some(600), None))];
    assert_eq!(evaluate_um_raw(&trips).unwrap(), 0.0);
}

#[test]
fn reduction_format() {
    assert_eq!(format_with_reduction(0.0, 15.0), "0 (15)");
    assert_eq!(format_with_reduction(116.0, 96.0), "116 (-20)");
    assert_eq!(format_with_reduction(8.5, 68.0), "8.5 (59.5)");
}

fn solved_pair(seed: u64, n: usize, p: usize) -> Option<(Instance, SolveResult, Instance, SolveResult)> {
    let om = random_instance(seed, &RandomSpec::new(n, p, ModelKind::Operator)).ok()?;
    let um = random_instance(seed, &RandomSpec::new(n, p, ModelKind::User)).ok()?;
    let cfg = SolverConfig::default();
    let r_om = solve_darp(&build_model(&om).ok()?, &cfg, None).ok()?;
    let r_um = solve_darp(&build_model(&um).ok()?, &cfg, None).ok()?;
    (r_om.status == SolveStatus::Optimal && r_um.status == SolveStatus::Optimal).then_some((om, r_om, um, r_um))
}

#[test]
fn cross_evaluation_of_solved_pairs() {
    let mut seen = 0;
    for seed in 0..20 {
        let Some((om, r_om, um, r_um)) = solved_pair(seed, 2, 2) else { continue };
        seen += 1;
        let p_om = polish_schedule(&om, &r_om).unwrap();
        let p_um = polish_schedule(&um, &r_um).unwrap();
        assert!(check_solution(&om, &p_om).is_empty());
        assert!(check_solution(&um, &p_um).is_empty());
        // Polishing keeps each model's own objective.
        assert!((p_om.operating_time().unwrap() - r_om.objective.unwrap()).abs() < 1e-6);
        assert!(user_objective(&um, &p_um).unwrap() <= r_um.objective.unwrap() + 1e-6);
        assert!(schedule_deviation(&um, &p_um).unwrap() <= schedule_deviation(&um, &r_um).unwrap() + 1e-6);

        let row = cross_evaluate(&om, &p_om, &um, &p_um).unwrap();
        assert_eq!(row.orders, 2);
        assert!(row.um_um.unwrap() >= 0.0 && row.um_om.unwrap() >= 0.0);
        assert!(row.v_om.unwrap() <= 2 && row.v_um.unwrap() <= 2);
        // The user optimum is no worse than the operator solution under the user objective.
        assert!(r_um.objective.unwrap() <= row.um_om_objective.unwrap() + 1e-6);
    }
    assert!(seen >= 5, "only {seen} solvable seeds");
}

#[test]
fn on_time_operator_schedule_has_zero_deviation() {
    let (om, mut r_om, um, r_um) = (0..20).find_map(|s| solved_pair(s, 1, 1)).expect("a solvable seed");
    for i in om.h_nodes() {
        r_om.arrival_times[i] = om.nodes[i].scheduled.map(|s| s as f64);
    }
    let row = cross_evaluate(&om, &r_om, &um, &r_um).unwrap();
    assert_eq!(row.um_om, Some(0.0));
}

#[test]
fn missing_schedule_is_an_error() {
    let (om, r_om, um, mut r_um) = (0..20).find_map(|s| solved_pair(s, 1, 1)).expect("a solvable seed");
    r_um.routes.clear();
    assert_eq!(cross_evaluate(&om, &r_om, &um, &r_um), Err(ReportError::ScheduleMissing("user-model")));
}

#[test]
fn totals_sum_rows_and_emitters_agree() {
    let mut rows = Vec::new();
    for seed in 0..30 {
        if let Some((om, r_om, um, r_um)) = solved_pair(seed, 2, 2) {
            let period = crate::instance::Period { start: 60 * seed as i64, end: 60 * seed as i64 + 60 };
            rows.push(cross_evaluate(&om, &r_om, &um, &r_um).unwrap().in_period(period, Some(10.0 + seed as f64)));
        }
        if rows.len() == 3 {
            break;
        }
    }
    let ev = CrossEvaluation::new(rows);
    let sum = |f: fn(&CrossRow) -> Option<f64>| ev.rows.iter().filter_map(f).sum::<f64>();
    assert!((ev.totals.um_raw - sum(|r| r.um_raw)).abs() < 1e-9);
    assert!((ev.totals.om_om - sum(|r| r.om_om)).abs() < 1e-9);
    assert!((ev.totals.om_um - sum(|r| r.om_um)).abs() < 1e-9);
    assert_eq!(ev.totals.v_um, ev.rows.iter().map(|r| r.v_um.unwrap()).sum::<usize>());

    let json: serde_json::Value = serde_json::from_str(&ev.to_json()).unwrap();
    let csv_text = ev.to_csv().unwrap();
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), ev.rows.len() + 1);
    for (k, rec) in records.iter().take(ev.rows.len()).enumerate() {
        for (col, key) in [(2, "um_raw"), (3, "um_um"), (4, "um_om"), (6, "om_um"), (7, "om_om")] {
            let from_csv: f64 = rec[col].parse().unwrap();
            assert_eq!(from_csv, json["rows"][k][key].as_f64().unwrap(), "{key}");
        }
    }
    let total = records.last().unwrap();
    assert_eq!(total[7].parse::<f64>().unwrap(), json["totals"]["om_om"].as_f64().unwrap());
    let table = render_cross_table(&ev);
    assert!(table.lines().any(|l| l.starts_with("Total")));
}

#[test]
fn model_stats_count_the_user_additions() {
    let om = random_instance(3, &RandomSpec::new(2, 2, ModelKind::Operator)).unwrap();
    let um = random_instance(3, &RandomSpec::new(2, 2, ModelKind::User)).unwrap();
    let (m_om, m_um) = (build_model(&om).unwrap(), build_model(&um).unwrap());
    let cfg = SolverConfig { node_limit: Some(1), ..Default::default() };
    let s_om = report_model_stats(&m_om.spec, &solve_darp(&m_om, &cfg, None).unwrap());
    let s_um = report_model_stats(&m_um.spec, &solve_darp(&m_um, &cfg, None).unwrap());
    assert!(s_om.vars >= s_om.int_vars);
    let h = um.h_nodes().len();
    assert_eq!(s_um.int_vars, s_om.int_vars + h);
    assert_eq!(s_um.vars, s_om.vars + h + 1);
    assert_eq!(s_um.constrs, s_om.constrs + h + 3);
}
