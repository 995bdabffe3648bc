use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use paradarp::formulation::mps::{read_mps, to_mps_string};
use paradarp::ingestion::HaversineProvider;
use paradarp::mip::{solve_lp, SolverConfig};
use paradarp::oracle::enumerate_optimal;
use paradarp::pipeline::{build_period_instances, split_periods, PipelineConfig};
use paradarp::synthetic::{random_instance, synthetic_day, RandomSpec, FIXTURE_SEED, SYNTHETIC_SPEED_KMH};
use paradarp::{build_model, solve_darp, Instance, ModelKind};
use std::hint::black_box;

/// The synthetic day's instance for the period starting at `hour`.
fn day_instance(hour: i64, kind: ModelKind) -> Instance {
    let cfg = PipelineConfig { period: Some(hour * 60), ..Default::default() };
    let (_, mut periods) = split_periods(synthetic_day(FIXTURE_SEED), &cfg).expect("period has trips");
    let mut tt = HaversineProvider { speed_kmh: SYNTHETIC_SPEED_KMH };
    let built = build_period_instances(periods.remove(0), &cfg, &mut tt).expect("instance builds");
    match kind {
        ModelKind::Operator => built.operator,
        ModelKind::User => built.user,
    }
}

fn bench_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_model");
    for (hour, n) in [(6, 4), (7, 6), (9, 8)] {
        let inst = day_instance(hour, ModelKind::User);
        g.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| build_model(black_box(inst)).unwrap())
        });
    }
    g.finish();
}

fn bench_mps(c: &mut Criterion) {
    let spec = build_model(&day_instance(9, ModelKind::Operator)).unwrap().spec;
    let text = to_mps_string(&spec);
    c.bench_function("mps_write_n8", |b| b.iter(|| to_mps_string(black_box(&spec))));
    c.bench_function("mps_read_n8", |b| b.iter(|| read_mps(black_box(&text)).unwrap()));
}

fn bench_root_lp(c: &mut Criterion) {
    let spec = build_model(&day_instance(9, ModelKind::Operator)).unwrap().spec;
    c.bench_function("root_lp_n8", |b| b.iter(|| solve_lp(black_box(&spec)).unwrap()));
}

fn bench_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_darp");
    g.sample_size(10);
    let cfg = SolverConfig::default();
    for (hour, n) in [(6, 4), (8, 5), (7, 6)] {
        for kind in [ModelKind::Operator, ModelKind::User] {
            let model = build_model(&day_instance(hour, kind)).unwrap();
            g.bench_with_input(BenchmarkId::new(format!("{kind:?}"), n), &model, |b, m| {
                b.iter(|| solve_darp(black_box(m), &cfg, None).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_optimal");
    for n in 1..=3 {
        let inst = random_instance(7, &RandomSpec::new(n, 2, ModelKind::User)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| enumerate_optimal(black_box(inst)))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_build, bench_mps, bench_root_lp, bench_solve, bench_oracle);
criterion_main!(benches);
