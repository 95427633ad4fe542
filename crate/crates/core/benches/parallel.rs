use cellsort::continuum::{init_density, step_fv, Grid, InitKind, KernelCache};
use cellsort::micro::{forces_averaged, init_particles, Placement};
use cellsort::par::Exec;
use cellsort::params::scenario_preset;
use cellsort::quantify::{quantify_particle_batch, QuantSettings};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn averaged_forces(c: &mut Criterion) {
    let mut g = c.benchmark_group("averaged_forces");
    for n in [250usize, 2000] {
        let mut p = scenario_preset("IB").unwrap().params;
        p.n_a = n;
        p.n_b = n;
        let st = init_particles(&p, 1, Placement::Uniform);
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, n), &st, |b, st| b.iter(|| forces_averaged(black_box(st), &p, exec)));
        }
    }
    g.finish();
}

fn convolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel_convolution");
    for n in [50usize, 100] {
        let grid = Grid::new(7.5, n).unwrap();
        let k = KernelCache::new(grid, 1.0).unwrap();
        let f = init_density(grid, InitKind::PerturbedUniform, 0.1, 1).unwrap();
        let mut out = vec![0.0; grid.len()];
        for (name, exec) in POLICIES {
            g.bench_function(BenchmarkId::new(name, n), |b| b.iter(|| k.convolve(exec, black_box(&f.f_a), &mut out)));
        }
    }
    g.finish();
}

fn macro_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("macro_step");
    let p = scenario_preset("IB").unwrap().params;
    let grid = Grid::new(7.5, 50).unwrap();
    let k = KernelCache::new(grid, 1.0).unwrap();
    let f0 = init_density(grid, InitKind::PerturbedUniform, 0.1, 1).unwrap();
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter_batched(
                || f0.clone(),
                |mut f| step_fv(&mut f, &k, &p, 0.02, exec).unwrap(),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn quantify_batch(c: &mut Criterion) {
    let mut g = c.benchmark_group("quantify_batch");
    let p = scenario_preset("IB").unwrap().params;
    let states: Vec<_> = (0..8).map(|s| init_particles(&p, s, Placement::Uniform)).collect();
    let qs = QuantSettings::default();
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| quantify_particle_batch(black_box(&states), p.half_length, &qs, exec).unwrap()));
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = averaged_forces, convolution, macro_step, quantify_batch
}
criterion_main!(benches);
