use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use cqbound::herm::cvec;
use cqbound::*;

fn bsc(eps: f64) -> CQChannel {
    classical_embed(&[vec![1.0 - eps, eps], vec![eps, 1.0 - eps]]).unwrap()
}

fn binary_pure(c: f64) -> PureStateChannel {
    let a = ((1.0 + c) / 2.0).sqrt();
    let b = ((1.0 - c) / 2.0).sqrt();
    PureStateChannel::new(vec![cvec::from_reals(&[a, b]), cvec::from_reals(&[a, -b])]).unwrap()
}

fn bench_eig(c: &mut Criterion) {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for dim in [4usize, 16] {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..dim {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                data[i * dim + j] = z;
                data[j * dim + i] = z.conj();
            }
        }
        let h = HermitianOperator::new(dim, data).unwrap();
        c.bench_function(&format!("eig_hermitian/dim{dim}"), |b| {
            b.iter(|| eig_hermitian(black_box(&h)).unwrap())
        });
    }
}

fn bench_e0cc(c: &mut Criterion) {
    let ch = bsc(0.1);
    let p = Composition::uniform(2);
    let cfg = SolverConfig {
        restarts: 1,
        ..Default::default()
    };
    c.bench_function("e0cc/bsc01_rho1", |b| {
        b.iter(|| e0cc(black_box(&ch), 1.0, &p, &cfg).unwrap())
    });
}

fn bench_espcc(c: &mut Criterion) {
    let ch = binary_pure(0.5).to_cq();
    let p = Composition::uniform(2);
    let cfg = SolverConfig {
        restarts: 1,
        ..Default::default()
    };
    let mut group = c.benchmark_group("espcc");
    group.sample_size(10);
    group.bench_function("binary_pure_05", |b| {
        b.iter(|| espcc(black_box(&ch), 0.5, &p, &cfg, RHO_MAX_DEFAULT).unwrap())
    });
    group.finish();
}

fn bench_theta(c: &mut Criterion) {
    let g = ConfusabilityGraph::cycle(5);
    let p = Composition::uniform(5);
    let cfg = ThetaConfig {
        restarts: 4,
        ..Default::default()
    };
    let mut group = c.benchmark_group("theta");
    group.sample_size(10);
    group.bench_function("marton_c5", |b| {
        b.iter(|| theta_marton(black_box(&g), &p, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_eig, bench_e0cc, bench_espcc, bench_theta);
criterion_main!(benches);
