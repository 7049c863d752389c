use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use loghe::ensemble::{map_replicates, PARALLEL};
use loghe::noise::{derive_seed, NoisePath};
use loghe::nonlinearity::DiffusionModel;
use loghe::sde::{simulate_with, InitialCondition, SimConfig};

fn ensemble(c: &mut Criterion) {
    let mut cfg = SimConfig::new(16, 1e-3, 0.1, DiffusionModel::linear_cut_log());
    cfg.u0 = InitialCondition::Mode {
        mode: 1,
        amplitude: 3.0,
    };
    let basis = cfg.basis().unwrap();
    let replicates = 64;
    let sup = |r: usize| {
        let noise = NoisePath::generate(derive_seed(1, r as u64), cfg.steps(), cfg.dt).unwrap();
        simulate_with(&cfg, &basis, &noise).unwrap().sup_h_norm()
    };

    let mut group = c.benchmark_group("ensemble_sup_norm");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", replicates), |b| {
        b.iter(|| map_replicates(replicates, 1, sup).unwrap())
    });
    // Without the `parallel` feature this is the sequential path again.
    let label = if PARALLEL { "rayon" } else { "rayon_disabled" };
    group.bench_function(BenchmarkId::new(label, replicates), |b| {
        b.iter(|| map_replicates(replicates, 0, sup).unwrap())
    });
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
