//! Bootstrap throughput: rayon replicate loop vs. the single-threaded path.
//!
//! Compile-time comparison of the sequential fallback is available by
//! rerunning with `--no-default-features`, in which case both benchmark
//! entries exercise the same sequential code.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion as Bench};

use domtest_core::validation::{generate, ScenarioSpec};
use domtest_core::{run_suite, run_suite_seq, Criterion, RunConfig};

fn bench_bootstrap(c: &mut Bench) {
    let spec = ScenarioSpec::figure1_replica(2000);
    let (a, b) = generate(&spec, 42).unwrap();
    let cfg = RunConfig {
        criteria: vec![Criterion::Lasbd, Criterion::Liasd2],
        replicates: 60,
        grid_x: 60,
        grid_z: 30,
        ..RunConfig::default()
    };

    let mut group = c.benchmark_group("bootstrap");
    group.sample_size(10);
    let label = if cfg!(feature = "parallel") {
        "rayon"
    } else {
        "sequential-fallback"
    };
    group.bench_function(label, |bencher| {
        bencher.iter_batched(
            || cfg.clone(),
            |cfg| run_suite(&a, &b, &cfg).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("sequential", |bencher| {
        bencher.iter_batched(
            || cfg.clone(),
            |cfg| run_suite_seq(&a, &b, &cfg).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn bench_evaluate_g(c: &mut Bench) {
    use domtest_core::{build_grid, evaluate_g, pooled_support, EdfSummary};
    let spec = ScenarioSpec::figure1_replica(2400);
    let (a, b) = generate(&spec, 7).unwrap();
    let support = pooled_support(&a, &b);
    let grid = build_grid(&support, 100, 50).unwrap();
    let ea = EdfSummary::new(&a, &support).unwrap();
    let eb = EdfSummary::new(&b, &support).unwrap();

    let mut group = c.benchmark_group("evaluate_g");
    for kind in [Criterion::Lasbd, Criterion::Iasd2] {
        group.bench_function(kind.as_str(), |bencher| {
            bencher.iter(|| evaluate_g(kind, &ea, &eb, &grid).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_bootstrap, bench_evaluate_g);
criterion_main!(benches);
