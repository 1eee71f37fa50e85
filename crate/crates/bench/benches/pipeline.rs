use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use halfsearch::spectrum::fwht;
use halfsearch::stats::{reduction_probabilities, sweep, SweepConfig};
use halfsearch::{run_instance, Scheme, SchemeConfig, ThetaKind, ThetaVector};
use halfsearch_bench::{instance, rng, BENCH_BITS};

fn transform(c: &mut Criterion) {
    let mut group = c.benchmark_group("fwht");
    for m in [8usize, 12, 16] {
        let data: Vec<i64> = (0..1u64 << m)
            .map(|k| if k % 3 == 0 { -1 } else { 1 })
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(m), &data, |b, data| {
            b.iter(|| {
                let mut d = data.clone();
                fwht(&mut d);
                black_box(d)
            })
        });
    }
    group.finish();
}

fn distribution(c: &mut Criterion) {
    let mut group = c.benchmark_group("costs_and_distribution");
    for n in [9usize, 13, 17] {
        let inst = instance(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| {
                let costs = inst.all_costs().unwrap();
                let eps = 0.29 * inst.total() as f64;
                black_box(ThetaVector::epsilon(&costs, eps).unwrap().distribution())
            })
        });
    }
    group.finish();
}

fn probabilities(c: &mut Criterion) {
    let cfg = SchemeConfig::new(Scheme::L2, ThetaKind::Epsilon);
    let inst = instance(14);
    c.bench_function("reduction_probabilities_n14", |b| {
        b.iter(|| black_box(reduction_probabilities(&inst, &cfg).unwrap()))
    });
}

fn full_run(c: &mut Criterion) {
    let cfg = SchemeConfig::default();
    let inst = instance(12);
    c.bench_function("run_instance_n12", |b| {
        let mut r = rng(1);
        b.iter(|| black_box(run_instance(&inst, &cfg, &mut r).ok()))
    });
}

fn small_sweep(c: &mut Criterion) {
    let cfg = SweepConfig {
        n_min: 5,
        n_max: 10,
        instances: 20,
        bits: BENCH_BITS,
        base_seed: 7,
        search: SchemeConfig::new(Scheme::L2, ThetaKind::Ideal),
    };
    c.bench_function("sweep_5_10_x20", |b| {
        b.iter(|| black_box(sweep(&cfg).unwrap()))
    });
}

criterion_group!(
    benches,
    transform,
    distribution,
    probabilities,
    full_run,
    small_sweep
);
criterion_main!(benches);
