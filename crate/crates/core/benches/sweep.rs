use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sdn_lbm::baselines::PolicyKind;
use sdn_lbm::scenario::Scenario;
use sdn_lbm::sweep::{jobs, run_sequential};

fn sweep(c: &mut Criterion) {
    let scenario = Scenario::fig4();
    let mut group = c.benchmark_group("fig4_sweep");
    for n_seeds in [4u64, 20, 80] {
        let seeds: Vec<u64> = (1..=n_seeds).collect();
        let work = jobs(&PolicyKind::ALL, &seeds);
        group.bench_with_input(BenchmarkId::new("sequential", n_seeds), &work, |b, w| {
            b.iter(|| run_sequential(black_box(&scenario), black_box(w)).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n_seeds), &work, |b, w| {
            b.iter(|| sdn_lbm::sweep::run_parallel(black_box(&scenario), black_box(w)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
