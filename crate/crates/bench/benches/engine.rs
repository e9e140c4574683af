use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use agesim_bench::relay_scenario;
use agesim_core::{
    age_process, coupled_run, is_nbu, run_simulation, time_average_age, CouplingMode,
    CouplingStream, DistributionSpec, PolicyKind, PolicySpec, RunOptions, ServiceTimeSource,
};

fn bench_policies(c: &mut Criterion) {
    let scenario = relay_scenario(1000.0, 7);
    let mut group = c.benchmark_group("run_simulation_t1000");
    for kind in [
        PolicyKind::PrmpLgfs,
        PolicyKind::NonPrmpLgfs,
        PolicyKind::Fcfs,
        PolicyKind::RandomWorkConserving { seed: 1 },
    ] {
        let policy = PolicySpec::new(kind);
        group.bench_function(policy.to_string(), |b| {
            b.iter(|| {
                let trace = run_simulation(
                    black_box(&scenario),
                    &policy,
                    &ServiceTimeSource::IndependentStreams { seed: 3 },
                    &RunOptions::default(),
                )
                .unwrap();
                black_box(trace.deliveries.len())
            })
        });
    }
    group.finish();
}

fn bench_coupled_pair(c: &mut Criterion) {
    let scenario = relay_scenario(1000.0, 7);
    let policies = [
        PolicySpec::new(PolicyKind::PrmpLgfs),
        PolicySpec::new(PolicyKind::Fcfs),
    ];
    c.bench_function("coupled_pair_epochs_t1000", |b| {
        b.iter(|| {
            let traces = coupled_run(
                black_box(&scenario),
                &policies,
                CouplingStream {
                    mode: CouplingMode::PoissonEpochs,
                    seed: 11,
                },
                &RunOptions::default(),
            )
            .unwrap();
            black_box(traces.len())
        })
    });
}

fn bench_age_metrics(c: &mut Criterion) {
    let scenario = relay_scenario(20_000.0, 9);
    let trace = run_simulation(
        &scenario,
        &PolicySpec::new(PolicyKind::PrmpLgfs),
        &ServiceTimeSource::IndependentStreams { seed: 4 },
        &RunOptions::default(),
    )
    .unwrap();
    c.bench_function("age_metrics_t20000", |b| {
        b.iter(|| {
            let p = age_process(black_box(&trace), 2, 20_000.0).unwrap();
            black_box(time_average_age(&p))
        })
    });
}

fn bench_nbu_grid(c: &mut Criterion) {
    let gamma = DistributionSpec::Gamma {
        shape: 2.0,
        scale: 0.5,
    };
    c.bench_function("nbu_grid_1000x1000", |b| {
        b.iter(|| black_box(is_nbu(black_box(&gamma), 10.0, 0.01, 1e-9)))
    });
}

criterion_group!(
    benches,
    bench_policies,
    bench_coupled_pair,
    bench_age_metrics,
    bench_nbu_grid
);
criterion_main!(benches);
