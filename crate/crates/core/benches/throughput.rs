//! Parallel (`par::map`) versus sequential evaluation of the two batch
//! workloads: the dispersion scan and independent RHS evaluations.
//!
//! Build with `--no-default-features` to see `par::map` fall back to the
//! sequential path; the "sequential" rows are always a plain iterator loop.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use filmsolve_core::diagnostics::growth_rate;
use filmsolve_core::{equilibrium_state, eval_rhs, par, Grid, ModelParams, State, Variant};

fn perturbed_states(grid: &Grid, p: &ModelParams, count: usize) -> Vec<State> {
    let eq = equilibrium_state(p).unwrap();
    (0..count)
        .map(|i| {
            let mut st = State::uniform(grid.n(), &eq);
            let k = 2.0 * std::f64::consts::PI * (1 + i % 5) as f64 / grid.length();
            st.h = grid.sample(|x| 1.0 + 0.05 * (k * x).cos());
            st.gamma = grid.sample(|x| eq.gamma_eq * (1.0 + 0.05 * (k * x).sin()));
            st
        })
        .collect()
}

fn rhs_batch(c: &mut Criterion) {
    let p = ModelParams::reference(0.0);
    let mut group = c.benchmark_group("rhs_batch");
    for n in [128, 256, 512] {
        let grid = Grid::new(n, p.domain_length).unwrap();
        let states = perturbed_states(&grid, &p, 16);
        let eval = |s: &State| eval_rhs(s, &p, Variant::Corrected, &grid).unwrap().0;
        group.bench_with_input(BenchmarkId::new("parallel", n), &states, |b, st| {
            b.iter(|| black_box(par::map(st, eval)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &states, |b, st| {
            b.iter(|| black_box(st.iter().map(eval).collect::<Vec<_>>()))
        });
    }
    group.finish();
}

fn dispersion_scan(c: &mut Criterion) {
    let p = ModelParams::reference(0.0);
    let grid = Grid::new(128, p.domain_length).unwrap();
    let modes: Vec<usize> = (1..=32).collect();
    let rate = |&m: &usize| growth_rate(&p, Variant::Legacy, &grid, m).unwrap();
    let mut group = c.benchmark_group("dispersion_scan");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| black_box(par::map(&modes, rate))));
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(modes.iter().map(rate).collect::<Vec<_>>()))
    });
    group.finish();
}

criterion_group!(benches, rhs_batch, dispersion_scan);
criterion_main!(benches);
