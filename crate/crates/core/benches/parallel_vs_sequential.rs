use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qjsp::chimera::{embed, ChimeraGraph, EmbedConfig};
use qjsp::sampler::{solve_exhaustive, solve_sa, SaParams};
use qjsp::search::precharacterize;
use qjsp::shaving::{icp_shave, prune_with_windows};
use qjsp::{compile, generate, EnsembleParams, Execution, PenaltyConfig, QuboProblem};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn shaved_qubo(size: usize, seed: u64, timespan: u32) -> QuboProblem {
    let inst = generate(&EnsembleParams::square(size, 1.0, 1, 2, seed)).unwrap();
    let q = compile(&inst, timespan, &PenaltyConfig::default()).unwrap();
    prune_with_windows(&q, &icp_shave(&inst, timespan).windows).unwrap()
}

fn annealing(c: &mut Criterion) {
    let q = shaved_qubo(3, 7, 8);
    let mut g = c.benchmark_group("sa_256_reads");
    g.sample_size(10);
    for (name, exec) in MODES {
        let params = SaParams {
            reads: 256,
            sweeps: 500,
            seed: 1,
            execution: exec,
            ..SaParams::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &params, |b, p| {
            b.iter(|| black_box(solve_sa(&q, p).unwrap()))
        });
    }
    g.finish();
}

fn exhaustive(c: &mut Criterion) {
    let q = shaved_qubo(3, 7, 8);
    let mut g = c.benchmark_group("exhaustive");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, q.num_vars()), &exec, |b, &e| {
            b.iter(|| black_box(solve_exhaustive(&q, 26, e).unwrap()))
        });
    }
    g.finish();
}

fn precharacterization(c: &mut Criterion) {
    let params = EnsembleParams::square(3, 1.0, 1, 2, 0);
    let mut g = c.benchmark_group("precharacterize_64");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| black_box(precharacterize(&params, 64, e).unwrap()))
        });
    }
    g.finish();
}

fn embedding(c: &mut Criterion) {
    let q = shaved_qubo(3, 7, 8);
    let hw = ChimeraGraph::new(4, 4, []);
    let mut g = c.benchmark_group("embed_c4");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = EmbedConfig {
            execution: exec,
            time_limit: std::time::Duration::from_secs(20),
            ..EmbedConfig::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| black_box(embed(q.num_vars(), &q.edges(), &hw, cfg)))
        });
    }
    g.finish();
}

criterion_group!(benches, annealing, exhaustive, precharacterization, embedding);
criterion_main!(benches);
