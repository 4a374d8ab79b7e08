use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dtr_bench::months;
use dtr_core::{run_grid, train, train_and_reconcile, AdjustmentUnit, AgentConfig, Tolerance};
use std::hint::black_box;

fn config(test_forecasts: &[f64]) -> AgentConfig {
    AgentConfig {
        tolerance: Tolerance::Percent(0.2).resolve(test_forecasts).unwrap(),
        adjustment_unit: AdjustmentUnit::SpreadOverCycle,
        ..AgentConfig::default()
    }
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train");
    for count in [14, 60] {
        let (history, test) = months(count);
        let cfg = config(test.forecasts());
        group.bench_with_input(BenchmarkId::from_parameter(count), &history, |b, h| {
            b.iter(|| train(black_box(h), &cfg).unwrap())
        });
    }
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let (history, test) = months(14);
    let cfg = config(test.forecasts());
    c.bench_function("train_and_reconcile/14", |b| {
        b.iter(|| train_and_reconcile(black_box(&history), &test, &cfg).unwrap())
    });

    let tolerances = [
        Tolerance::Percent(0.1),
        Tolerance::Percent(0.2),
        Tolerance::Percent(0.3),
    ];
    let explorations = [0.05, 0.1, 0.2];
    c.bench_function("grid/3x3", |b| {
        b.iter(|| run_grid(black_box(&history), &test, &tolerances, &explorations, &cfg).unwrap())
    });
}

criterion_group!(benches, training, end_to_end);
criterion_main!(benches);
