//! Parallel against sequential execution of the two embarrassingly parallel
//! workloads: Monte-Carlo runs over channel seeds and brute-force oracle grids.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use starris::checks::element_oracle;
use starris::fp::{run_es, EsOptions};
use starris::oracle::{exhaustive_small_instance, GridSpec, InnerLoop};
use starris::par::{map_indices, Execution};
use starris::scenario::{generate_channels, reference_config};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Auto), ("sequential", Execution::Sequential)];

fn seeds(c: &mut Criterion) {
    let cfg = reference_config(8, 16, 30.0);
    let mut group = c.benchmark_group("es-over-seeds");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 8), &exec, |b, &exec| {
            b.iter(|| {
                map_indices(8, exec, |i| {
                    let seed = i as u64;
                    let ch = generate_channels(&cfg, seed);
                    run_es(&cfg, &ch, &EsOptions { seed, ..EsOptions::default() }).map(|r| r.sum_rate).unwrap_or(0.0)
                })
            })
        });
    }
    group.finish();
}

fn grids(c: &mut Criterion) {
    let cfg = reference_config(2, 1, 30.0).truncate_users(1, 1).expect("reference users");
    let ch = generate_channels(&cfg, 0);
    let spec = GridSpec::new(16, 9, 0.0).expect("valid grid");
    let mut group = c.benchmark_group("oracle-grids");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("exhaustive", name), &exec, |b, &exec| {
            b.iter(|| exhaustive_small_instance(&cfg, black_box(&ch), &spec, InnerLoop::default(), exec).map(|r| r.sum_rate))
        });
        group.bench_with_input(BenchmarkId::new("element", name), &exec, |b, &exec| {
            b.iter(|| element_oracle(black_box(100), GridSpec::default(), exec).map(|o| o.passed))
        });
    }
    group.finish();
}

criterion_group!(benches, seeds, grids);
criterion_main!(benches);
