use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kerr_metrology::config::{ScenarioConfig, Sweep, SweepAxis};
use kerr_metrology::runner::run_detailed;
use kerr_metrology::{Execution, ModelParams};

fn drive_sweep(points: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(ModelParams::unit_detuning(0.2, 0.05, 0.1).unwrap());
    cfg.set_dim(16);
    cfg.set_time_grid(10.0, 11);
    cfg.sweep = Some(Sweep {
        parameter: SweepAxis::F,
        values: (1..=points).map(|k| 0.03 * k as f64).collect(),
    });
    cfg
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("drive_sweep");
    group.sample_size(10);
    for points in [2, 8] {
        let cfg = drive_sweep(points);
        for exec in [Execution::Sequential, Execution::Parallel] {
            let name = if exec.is_parallel() {
                "parallel"
            } else {
                "sequential"
            };
            group.bench_with_input(BenchmarkId::new(name, points), &cfg, |b, cfg| {
                b.iter(|| run_detailed(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
