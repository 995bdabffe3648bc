//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line to stdout
//! (uncaptured) and the test fails if any criterion fails.

use paradarp::formulation::mps::export_mps;
use paradarp::ingestion::{read_records, write_records_to, ColumnMapping, HaversineProvider};
use paradarp::instance::Period;
use paradarp::mip::{check_solution, solve_darp, SolveResult, SolveStatus, SolverConfig};
use paradarp::oracle::{enumerate_feasible, enumerate_optimal, OracleError};
use paradarp::pipeline::{run_pipeline, PipelineConfig};
use paradarp::report::user_objective;
use paradarp::synthetic::{random_instance, synthetic_day, RandomSpec, FIXTURE_SEED, SYNTHETIC_SPEED_KMH};
use paradarp::time::parse_clock;
use paradarp::{build_model, Instance, ModelKind};
use std::ffi::CString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

const OBJ_TOL: f64 = 1e-6;
const Q_TOL: f64 = 1e-6;

struct Verdicts {
    failed: Vec<String>,
}

impl Verdicts {
    fn record(&mut self, id: &str, title: &str, ok: bool, detail: String) {
        let line = format!("[{}] criterion {id}: {title}: {detail}", if ok { "PASS" } else { "FAIL" });
        let mut out = std::io::stdout();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
        if !ok {
            self.failed.push(line);
        }
    }
}

/// One instance of the randomized family, with both models solved and the
/// oracle's answer for each.
struct RandomCase {
    seed: u64,
    om: Instance,
    um: Instance,
    res_om: SolveResult,
    res_um: SolveResult,
    oracle_om: Result<f64, OracleError>,
    oracle_um: Result<f64, OracleError>,
}

fn random_cases(count: u64) -> Vec<RandomCase> {
    let solver = SolverConfig::default();
    (0..count)
        .map(|seed| {
            let n = 1 + (seed % 3) as usize;
            let p = 1 + (seed / 3 % 2) as usize;
            let om = random_instance(seed, &RandomSpec::new(n, p, ModelKind::Operator)).unwrap();
            let um = om.with_model_kind(ModelKind::User).unwrap();
            let solve = |inst: &Instance| solve_darp(&build_model(inst).unwrap(), &solver, None).unwrap();
            let oracle = |inst: &Instance| enumerate_optimal(inst).map(|s| s.objective);
            RandomCase {
                seed,
                res_om: solve(&om),
                res_um: solve(&um),
                oracle_om: oracle(&om),
                oracle_um: oracle(&um),
                om,
                um,
            }
        })
        .collect()
}

fn oracle_equivalence(cases: &[RandomCase], v: &mut Verdicts) {
    let mut bad = Vec::new();
    let mut feasible = 0;
    for c in cases {
        for (inst, res, oracle) in [(&c.om, &c.res_om, &c.oracle_om), (&c.um, &c.res_um, &c.oracle_um)] {
            let kind = inst.model_kind;
            match (oracle, res.status) {
                (Ok(o), SolveStatus::Optimal) => {
                    feasible += 1;
                    let obj = res.objective.unwrap();
                    if (o - obj).abs() > OBJ_TOL {
                        bad.push(format!("seed {} {kind:?}: oracle {o} solver {obj}", c.seed));
                    }
                    let violations = check_solution(inst, res);
                    if !violations.is_empty() {
                        bad.push(format!("seed {} {kind:?}: {} violations", c.seed, violations.len()));
                    }
                }
                (Err(OracleError::Infeasible), SolveStatus::Infeasible) => {}
                (o, s) => bad.push(format!("seed {} {kind:?}: oracle {o:?} solver {s}", c.seed)),
            }
        }
    }
    let models = 2 * cases.len();
    v.record(
        "1",
        "oracle equivalence",
        bad.is_empty() && cases.len() >= 200,
        format!(
            "{} instances, {models} models, {feasible} feasible, {} disagreements {:?}",
            cases.len(),
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

fn big_m_validity(cases: &[RandomCase], v: &mut Verdicts) {
    const FAMILIES: [&str; 7] = ["timeprop_", "timeend_", "timestart_", "loadprop_", "loadend_", "loadstart_", "late_"];
    let mut points = 0usize;
    let mut checked_rows = 0usize;
    let mut violations = Vec::new();
    for c in cases {
        let sols = enumerate_feasible(&c.om, usize::MAX).unwrap();
        for inst in [&c.om, &c.um] {
            let model = build_model(inst).unwrap();
            for sol in &sols {
                let x = model.point(inst, &sol.routes, &sol.arrival_times, &sol.depot_times);
                points += 1;
                for row in model.spec.constraints.iter().filter(|r| FAMILIES.iter().any(|f| r.name.starts_with(f))) {
                    checked_rows += 1;
                    if row.violation(&x) > 1e-9 {
                        violations.push(format!("seed {} {:?} {}", c.seed, inst.model_kind, row.name));
                    }
                }
            }
        }
    }
    v.record(
        "2",
        "big-M validity",
        violations.is_empty() && points > 0,
        format!(
            "{points} feasible points, {checked_rows} big-M row checks, {} violations {:?}",
            violations.len(),
            violations.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

fn dedicated_fleet_zero_wait(v: &mut Verdicts) {
    let solver = SolverConfig::default();
    let mut bad = Vec::new();
    let mut count = 0;
    for seed in 0..30u64 {
        let n = 1 + (seed % 5) as usize;
        let mut spec = RandomSpec::new(n, n, ModelKind::User);
        spec.period = Period { start: 120, end: 1260 };
        let inst = random_instance(1000 + seed, &spec).unwrap();
        let res = solve_darp(&build_model(&inst).unwrap(), &solver, None).unwrap();
        count += 1;
        if res.status != SolveStatus::Optimal || res.objective != Some(0.0) {
            bad.push(format!("seed {seed} n={n}: {} {:?}", res.status, res.objective));
        }
    }
    v.record(
        "3",
        "dedicated-fleet zero wait",
        bad.is_empty(),
        format!("{count} instances with p = n, {} nonzero {:?}", bad.len(), bad),
    );
}

/// The operator schedule read as a user-model candidate.
fn as_user_candidate(um: &Instance, om_res: &SolveResult) -> SolveResult {
    let mut c = om_res.clone();
    c.model_kind = ModelKind::User;
    let thr = um.lateness_threshold as f64;
    c.lateness = um
        .h_nodes()
        .into_iter()
        .map(|i| (i, om_res.arrival_times[i].unwrap() - um.nodes[i].scheduled.unwrap() as f64 > thr + 1e-9))
        .collect();
    c
}

fn om_within_um(cases: &[RandomCase], v: &mut Verdicts) {
    let mut transported = 0;
    let mut pairs = 0;
    let mut bad = Vec::new();
    for c in cases {
        if !c.res_om.status.has_solution() {
            continue;
        }
        transported += 1;
        let candidate = as_user_candidate(&c.um, &c.res_om);
        let violations = check_solution(&c.um, &candidate);
        if !violations.is_empty() {
            bad.push(format!("seed {}: {:?}", c.seed, violations[0].kind));
        }
        if c.res_om.status == SolveStatus::Optimal && c.res_um.status == SolveStatus::Optimal {
            pairs += 1;
            let at_um = user_objective(&c.um, &c.res_um).unwrap();
            let at_om = user_objective(&c.um, &candidate).unwrap();
            if at_um > at_om + OBJ_TOL {
                bad.push(format!("seed {}: UM optimum {at_um} above UM at OM optimum {at_om}", c.seed));
            }
        }
    }
    v.record(
        "4",
        "OM feasible points are UM feasible",
        bad.is_empty() && transported > 0,
        format!(
            "{transported} OM solutions checked, {pairs} optimal pairs, {} failures {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

/// Reads an MPS file into HiGHS and returns the optimal objective.
fn highs_objective(path: &Path) -> Result<f64, String> {
    use highs_sys::*;
    let file = CString::new(path.to_str().unwrap()).unwrap();
    let flag = CString::new("output_flag").unwrap();
    let gap = CString::new("mip_rel_gap").unwrap();
    unsafe {
        let h = Highs_create();
        Highs_setBoolOptionValue(h, flag.as_ptr(), 0);
        Highs_setDoubleOptionValue(h, gap.as_ptr(), 1e-9);
        let out = if Highs_readModel(h, file.as_ptr()) == STATUS_ERROR {
            Err("read failed".to_string())
        } else if Highs_run(h) == STATUS_ERROR {
            Err("run failed".to_string())
        } else if Highs_getModelStatus(h) != MODEL_STATUS_OPTIMAL {
            Err(format!("model status {}", Highs_getModelStatus(h)))
        } else {
            Ok(Highs_getObjectiveValue(h))
        };
        Highs_destroy(h);
        out
    }
}

fn cross_solver(cases: &[RandomCase], v: &mut Verdicts) {
    let dir = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut bad = Vec::new();
    for c in cases {
        for (inst, res) in [(&c.om, &c.res_om), (&c.um, &c.res_um)] {
            if res.status != SolveStatus::Optimal {
                continue;
            }
            let path: PathBuf = dir.path().join(format!("s{}_{:?}.mps", c.seed, inst.model_kind));
            export_mps(&build_model(inst).unwrap().spec, &path).unwrap();
            let ours = res.objective.unwrap();
            match highs_objective(&path) {
                Ok(theirs) if (theirs - ours).abs() <= OBJ_TOL => {}
                other => bad.push(format!("seed {} {:?}: built-in {ours}, HiGHS {other:?}", c.seed, inst.model_kind)),
            }
            compared += 1;
        }
        if compared >= 40 {
            break;
        }
    }
    v.record(
        "5",
        "cross-solver check via MPS",
        bad.is_empty() && compared >= 20,
        format!(
            "{compared} models solved by HiGHS, {} mismatches {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_day.csv")
}

fn fixture_day(v: &mut Verdicts) -> Vec<SolveResult> {
    let records = read_records(&fixture_path(), &ColumnMapping::default()).unwrap();
    let mut generated = Vec::new();
    write_records_to(&mut generated, &synthetic_day(FIXTURE_SEED), &ColumnMapping::default()).unwrap();
    let same = std::fs::read(fixture_path()).unwrap() == generated;
    let midday = records
        .iter()
        .filter(|r| {
            r.scheduled_pickup
                .is_some_and(|m| (parse_clock("09:00").unwrap()..parse_clock("13:00").unwrap()).contains(&m))
        })
        .count();
    let short = records.iter().filter(|r| r.distance_km.is_some_and(|d| d < 20.0)).count();
    let total = records.len();

    let cfg = PipelineConfig::default();
    let mut provider = HaversineProvider { speed_kmh: SYNTHETIC_SPEED_KMH };
    let start = Instant::now();
    let out = run_pipeline(records, &cfg, &mut provider).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let stats: Vec<_> =
        out.periods.iter().flat_map(|p| [(&p.instances.operator, &p.operator), (&p.instances.user, &p.user)]).collect();
    let models = stats.len();
    let optimal = stats.iter().filter(|(_, m)| m.result.status == SolveStatus::Optimal).count();
    let within_limit =
        stats.iter().all(|(_, m)| m.result.status.has_solution() && m.stats.cpu <= cfg.solver.time_limit);
    let largest = stats.iter().map(|(i, _)| i.n).max().unwrap_or(0);
    let slow_small = stats
        .iter()
        .filter(|(i, m)| i.n < largest && (m.result.status != SolveStatus::Optimal || m.stats.cpu > 600.0))
        .count();
    let slowest = stats.iter().map(|(_, m)| m.stats.cpu).fold(0.0, f64::max);
    v.record(
        "6a",
        "fixture day solves within limits",
        same && total == 58 && out.periods.len() == 11 && models == 22 && within_limit && slow_small == 0,
        format!(
            "fixture {} generator, {total} trips ({midday} = {:.1}% in 9 am - 1 pm, {:.1}% under 20 km), {models} models, {optimal} optimal, slowest {slowest:.1}s, {elapsed:.0}s total",
            if same { "matches" } else { "differs from" },
            100.0 * midday as f64 / total as f64,
            100.0 * short as f64 / total as f64,
        ),
    );

    let ev = &out.evaluation;
    let over: Vec<String> = ev
        .rows
        .iter()
        .filter(|r| !matches!((r.um_um, r.um_raw), (Some(a), Some(b)) if a <= b))
        .map(|r| r.label.clone())
        .collect();
    let t = &ev.totals;
    let more_vehicles = t.v_om <= t.v_um;
    v.record(
        "6b",
        "fixture day report shape",
        over.is_empty() && more_vehicles && ev.rows.len() == 11,
        format!(
            "UM_Raw {} UM_UM {} UM_OM {} OM_UM {} OM_OM {} V_UM {} V_OM {}; periods with UM_UM > UM_Raw: {over:?}",
            t.um_raw, t.um_um, t.um_om, t.om_um, t.om_om, t.v_um, t.v_om
        ),
    );
    let mut table = std::io::stdout();
    let _ = writeln!(table, "{}", paradarp::report::render_cross_table(ev));
    let _ = writeln!(table, "{}", paradarp::report::render_stats_table(&out.stats_rows()));
    out.periods.iter().flat_map(|p| [p.operator.result.clone(), p.user.result.clone()]).collect()
}

fn integral_loads(cases: &[RandomCase], day: &[SolveResult], v: &mut Verdicts) {
    let results = cases.iter().flat_map(|c| [&c.res_om, &c.res_um]).chain(day);
    let mut optima = 0;
    let mut worst: f64 = 0.0;
    for r in results.filter(|r| r.status == SolveStatus::Optimal) {
        optima += 1;
        for q in r.loads.iter().flatten().chain(&r.end_loads) {
            worst = worst.max((q - q.round()).abs());
        }
    }
    v.record(
        "7",
        "Q integrality at optima",
        worst <= Q_TOL && optima > 0,
        format!("{optima} optimal solutions, largest |Q - round(Q)| = {worst:.2e}"),
    );
}

fn determinism(v: &mut Verdicts) {
    let solver = SolverConfig::default();
    let mut same = true;
    for seed in [3u64, 11, 29] {
        for kind in [ModelKind::Operator, ModelKind::User] {
            let inst = random_instance(seed, &RandomSpec::new(3, 2, kind)).unwrap();
            let model = build_model(&inst).unwrap();
            let a = solve_darp(&model, &solver, None).unwrap();
            let b = solve_darp(&model, &solver, None).unwrap();
            same &= a.objective == b.objective && a.node_count == b.node_count && a.routes == b.routes;
        }
    }
    let small: Vec<_> =
        synthetic_day(FIXTURE_SEED).into_iter().filter(|r| r.scheduled_pickup.is_some_and(|m| m < 9 * 60)).collect();
    let cfg = PipelineConfig::default();
    let mut provider = HaversineProvider { speed_kmh: SYNTHETIC_SPEED_KMH };
    let run = |p: &mut HaversineProvider| {
        let out = run_pipeline(small.clone(), &cfg, p).unwrap();
        let nodes: Vec<u64> =
            out.periods.iter().flat_map(|p| [p.operator.result.node_count, p.user.result.node_count]).collect();
        (out.evaluation.to_json(), out.evaluation.to_csv().unwrap(), nodes)
    };
    let first = run(&mut provider);
    let second = run(&mut provider);
    let report_same = first == second;
    v.record(
        "8",
        "determinism",
        same && report_same,
        format!(
            "6 repeated solves {}, 4-period report bytes and node counts {}",
            if same { "identical" } else { "differ" },
            if report_same { "identical" } else { "differ" }
        ),
    );
}

#[test]
fn acceptance() {
    let mut v = Verdicts { failed: Vec::new() };
    let start = Instant::now();
    let cases = random_cases(200);
    let random_secs = start.elapsed().as_secs_f64();
    oracle_equivalence(&cases, &mut v);
    big_m_validity(&cases, &mut v);
    dedicated_fleet_zero_wait(&mut v);
    om_within_um(&cases, &mut v);
    cross_solver(&cases, &mut v);
    let day = fixture_day(&mut v);
    integral_loads(&cases, &day, &mut v);
    determinism(&mut v);
    let _ = writeln!(
        std::io::stdout(),
        "random family solved and enumerated in {random_secs:.1}s; suite {:.1}s",
        start.elapsed().as_secs_f64()
    );
    assert!(v.failed.is_empty(), "{}", v.failed.join("\n"));
}
