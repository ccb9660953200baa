use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use picard_bench::{heat_inputs, small_swirl, spatial_pair};
use picard_core::constants::{theorem41_constants, DataConstants, WholeSpacePhysics};
use picard_core::picard::{apply_t, IterationState};
use picard_core::propagators::heat_propagate;
use picard_core::spectral::convolve;
use std::hint::black_box;

fn bench_convolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("convolve");
    for (n, k) in [(2usize, 4u32), (3, 2), (3, 3)] {
        let (a, b) = spatial_pair(n, k, 1);
        let out = a.mode_box().sum(b.mode_box());
        g.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_k{k}")), &(a, b), |bch, (a, b)| {
            bch.iter(|| convolve(black_box(a), black_box(b), &out).expect("convolve"))
        });
    }
    g.finish();
}

fn bench_heat(c: &mut Criterion) {
    let (phi, f, grid) = heat_inputs(3, 3, 40, 2);
    c.bench_function("heat_propagate_n3_k3_m40", |b| {
        b.iter(|| heat_propagate(black_box(&phi), Some(&f), 1.0, &grid).expect("heat"))
    });
}

fn bench_apply_t(c: &mut Criterion) {
    let p = small_swirl();
    let s = IterationState::initial(&p).expect("state");
    let s = IterationState { r: apply_t(&p, &s).expect("map").r, ..s };
    c.bench_function("apply_t_small_swirl", |b| b.iter(|| apply_t(&p, black_box(&s)).expect("map")));
}

fn bench_constants(c: &mut Criterion) {
    let k = DataConstants::uniform(0.01);
    let phys = WholeSpacePhysics { nu: 1.0, kappa: 1.0, b: 1.0 };
    c.bench_function("theorem41_constants_n9", |b| {
        b.iter(|| theorem41_constants(black_box(0.1), black_box(0.1), &k, &phys, 9).expect("constants"))
    });
}

criterion_group!(benches, bench_convolve, bench_heat, bench_apply_t, bench_constants);
criterion_main!(benches);
