use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geb_core::{
    bayes_risk, dwt, hybrid_fit, idwt, KdeMode, KernelDensityEstimate, MixingDistribution, TuningConfig, WaveletBasis,
    WaveletName,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::hint::black_box;

fn sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("dwt");
    for name in [WaveletName::Haar, WaveletName::S8] {
        let basis = WaveletBasis::new(name);
        for n in [1024usize, 16384] {
            let x = sample(n, 1);
            group.bench_with_input(BenchmarkId::new(format!("{name}/round-trip"), n), &x, |b, x| {
                b.iter(|| idwt(&dwt(black_box(x), &basis).unwrap(), &basis).unwrap())
            });
        }
    }
    group.finish();
}

fn kde(c: &mut Criterion) {
    let mut group = c.benchmark_group("kde-eval-all");
    for n in [256usize, 1024, 4096] {
        let xs = sample(n, 2);
        for (label, mode) in [("direct", KdeMode::Direct), ("fourier", KdeMode::Fourier)] {
            if mode == KdeMode::Direct && n > 1024 {
                continue;
            }
            let k = KernelDensityEstimate::fit(&xs, mode).unwrap();
            group.bench_with_input(BenchmarkId::new(label, n), &xs, |b, xs| {
                b.iter(|| xs.iter().map(|&x| k.eval(black_box(x)).0).sum::<f64>())
            });
        }
    }
    group.finish();
}

fn block_fit(c: &mut Criterion) {
    // b0 small enough that the GEB branch is taken
    let cfg = TuningConfig { b0: 0.1, kde_mode: KdeMode::Fourier, ..TuningConfig::default() };
    let mut group = c.benchmark_group("hybrid-fit");
    for n in [256usize, 2048] {
        let xs: Vec<f64> = sample(n, 3).iter().enumerate().map(|(i, z)| z + if i % 2 == 0 { 3.0 } else { -3.0 }).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &xs, |b, xs| {
            b.iter(|| hybrid_fit(black_box(xs), &cfg).unwrap().apply(xs))
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let two_point = MixingDistribution::new([(-2.0, 0.5), (2.0, 0.5)]).unwrap();
    let grid = MixingDistribution::normal_grid(0.0, 1.0, 10.0, 401).unwrap();
    c.bench_function("bayes-risk/two-point", |b| b.iter(|| bayes_risk(black_box(&two_point)).unwrap()));
    c.bench_function("bayes-risk/normal-grid-401", |b| b.iter(|| bayes_risk(black_box(&grid)).unwrap()));
}

criterion_group!(benches, transforms, kde, block_fit, oracle);
criterion_main!(benches);
