//! Data-parallel core against a single worker. The `sequential` rows run the
//! same code inside a one-thread rayon pool; build with
//! `--no-default-features` to time the plain-iterator fallback instead.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use einsel::decoherence::{DephasingChannel, PointerBasis};
use einsel::experiment::{simulate_observers, ObserverParams};
use einsel::redundancy::{branch_records, error_robustness, min_flip_sequence, JointState, RecordBasis};
use einsel::sieve::{bloch_grid, sieve_bloch, DynamicsSpec};
use rayon::ThreadPoolBuilder;

fn compare<F: Fn() + Sync>(c: &mut Criterion, name: &str, work: F) {
    let single = ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("rayon", rayon::current_num_threads()), |b| {
        b.iter(&work)
    });
    group.bench_function(BenchmarkId::new("sequential", 1), |b| b.iter(|| single.install(&work)));
    group.finish();
}

fn sieve(c: &mut Criterion) {
    let grid = bloch_grid(PI / 18.0, PI / 18.0).unwrap();
    let ch = DephasingChannel::new(PointerBasis::computational(1), 1.0).unwrap();
    let dynamics = DynamicsSpec::pure_dephasing(ch).unwrap();
    compare(c, "sieve_bloch_grid", || {
        black_box(sieve_bloch(&grid, &dynamics).unwrap());
    });
}

fn flip_search(c: &mut Criterion) {
    let (_, conjugate) = branch_records(&JointState::ghz_branches(8).unwrap()).unwrap();
    compare(c, "flip_search_n8", || {
        black_box(min_flip_sequence(&conjugate[0], &conjugate[1]).unwrap());
    });
}

fn robustness(c: &mut Criterion) {
    let j = JointState::ghz_branches(7).unwrap();
    compare(c, "robustness_n7_k3", || {
        black_box(error_robustness(&j, RecordBasis::Pointer, 3).unwrap());
    });
}

fn observers(c: &mut Criterion) {
    let p = ObserverParams::default();
    compare(c, "observer_ensemble", || {
        black_box(simulate_observers(&p, 1).unwrap());
    });
}

criterion_group!(benches, sieve, flip_search, robustness, observers);
criterion_main!(benches);
