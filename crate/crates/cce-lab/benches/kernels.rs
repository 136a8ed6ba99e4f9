//! Sequential vs parallel kernel throughput.
//!
//! The `seq` rows force the sequential path through the bench-only
//! switch; the `par` rows leave auto dispatch on, which engages the
//! thread pool above the work threshold. Outputs are bit-identical
//! either way, so these benches compare time only. Small sizes stay
//! below the threshold by design and should show parity.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::time::Duration;

use cce_lab::losses::{complement_cross_entropy, LossConfig};
use cce_lab::rng::Xoshiro256pp;
use cce_lab::tensor::{kernels, softmax, Matrix, OneHotBatch};

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = Xoshiro256pp::from_seed(seed);
    let data = (0..rows * cols).map(|_| rng.next_range(-2.0, 2.0)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

fn random_labels(n: usize, k: usize, seed: u64) -> OneHotBatch {
    let mut rng = Xoshiro256pp::from_seed(seed);
    let labels = (0..n).map(|_| rng.next_below(k as u64) as usize).collect();
    OneHotBatch::new(labels, k).unwrap()
}

fn modes() -> [(&'static str, bool); 2] {
    [("seq", true), ("par", false)]
}

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    group.sample_size(20).measurement_time(Duration::from_secs(3));
    for &n in &[128usize, 384] {
        let a = random_matrix(n, n, 1);
        let b = random_matrix(n, n, 2);
        for (label, force_seq) in modes() {
            kernels::force_sequential(force_seq);
            group.bench_with_input(BenchmarkId::new(label, n), &n, |bench, _| {
                bench.iter(|| a.matmul(&b).unwrap());
            });
            kernels::force_sequential(false);
        }
    }
    group.finish();
}

fn bench_softmax(c: &mut Criterion) {
    let mut group = c.benchmark_group("softmax");
    group.sample_size(20).measurement_time(Duration::from_secs(3));
    for &(rows, cols) in &[(128usize, 10usize), (20_000, 100)] {
        let logits = random_matrix(rows, cols, 3);
        let id = format!("{rows}x{cols}");
        for (label, force_seq) in modes() {
            kernels::force_sequential(force_seq);
            group.bench_with_input(BenchmarkId::new(label, &id), &rows, |bench, _| {
                bench.iter(|| softmax(&logits).unwrap());
            });
            kernels::force_sequential(false);
        }
    }
    group.finish();
}

fn bench_combined_loss(c: &mut Criterion) {
    let mut group = c.benchmark_group("combined_loss");
    group.sample_size(20).measurement_time(Duration::from_secs(3));
    let cfg = LossConfig::default();
    for &(rows, cols) in &[(128usize, 10usize), (20_000, 100)] {
        let logits = random_matrix(rows, cols, 4);
        let labels = random_labels(rows, cols, 5);
        let id = format!("{rows}x{cols}");
        for (label, force_seq) in modes() {
            kernels::force_sequential(force_seq);
            group.bench_with_input(BenchmarkId::new(label, &id), &rows, |bench, _| {
                bench.iter(|| complement_cross_entropy(&logits, &labels, &cfg).unwrap());
            });
            kernels::force_sequential(false);
        }
    }
    group.finish();
}

criterion_group!(benches, bench_matmul, bench_softmax, bench_combined_loss);
criterion_main!(benches);
