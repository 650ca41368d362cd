use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mblw_core::dtwa::{
    integrate_trajectory, mean_field_rhs, run_dtwa_ensemble, sample_neel_phase_point,
    EnsembleOptions, Tolerances,
};
use mblw_core::ed::{
    build_hamiltonian, exact_moments, Propagator, QuantumState, SectorBasis, DEFAULT_KRYLOV_TOL,
};
use mblw_core::{make_time_grid, ModelSpec, NeelSpec, PairFilter, Spacing, StreamId};

fn spec(n: usize, h: f64) -> ModelSpec {
    ModelSpec::sample(n, 1.0, h, &StreamId::disorder(1, 0)).unwrap()
}

fn dtwa(c: &mut Criterion) {
    let neel = NeelSpec::new(12).unwrap();
    let start = sample_neel_phase_point(&neel, &mut StreamId::trajectory(1, 0, 0).rng());
    let s = spec(12, 4.0);
    c.bench_function("mean_field_rhs/N12", |b| {
        b.iter(|| mean_field_rhs(black_box(&start), &s).unwrap())
    });

    let mut g = c.benchmark_group("trajectory_to_Jt20/N12");
    let grid = make_time_grid(20.0, 21, Spacing::LogPlusZero).unwrap();
    for h in [1.0, 8.0] {
        let s = spec(12, h);
        g.bench_with_input(BenchmarkId::from_parameter(h), &s, |b, s| {
            b.iter(|| integrate_trajectory(&start, s, &grid, Tolerances::default()).unwrap())
        });
    }
    g.finish();

    let grid = make_time_grid(5.0, 11, Spacing::Linear).unwrap();
    c.bench_function("ensemble_200_to_Jt5/N12", |b| {
        b.iter(|| {
            run_dtwa_ensemble(
                &s,
                &neel,
                &grid,
                200,
                StreamId::trajectory(1, 0, 0),
                &EnsembleOptions::default(),
            )
            .unwrap()
        })
    });
}

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    g.sample_size(10);
    for n in [8, 10, 12] {
        let s = spec(n, 4.0);
        let basis = Arc::new(SectorBasis::neel_sector(&NeelSpec::new(n).unwrap()).unwrap());
        let ham = build_hamiltonian(&s, &basis).unwrap();
        g.bench_with_input(BenchmarkId::new("diagonalize", n), &ham, |b, ham| {
            b.iter(|| Propagator::spectral(ham))
        });
        let psi = QuantumState::neel(basis).unwrap();
        g.bench_with_input(BenchmarkId::new("krylov_step_Jt1", n), &ham, |b, ham| {
            let prop = Propagator::krylov(ham, DEFAULT_KRYLOV_TOL).unwrap();
            b.iter(|| prop.evolve(&psi, 1.0).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("moments", n), &psi, |b, psi| {
            b.iter(|| exact_moments(psi))
        });
    }
    let s = spec(10, 4.0);
    let grid = make_time_grid(120.0, 41, Spacing::LogPlusZero).unwrap();
    g.bench_function("exact_series/N10", |b| {
        b.iter(|| mblw_core::exact_series(&s, &grid, PairFilter::All, DEFAULT_KRYLOV_TOL).unwrap())
    });
    g.finish();
}

criterion_group!(benches, dtwa, exact);
criterion_main!(benches);
