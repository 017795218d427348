//! Sequential vs rayon execution of the data-parallel entry points:
//! multi-chain mining and exhaustive enumeration.
//!
//! Without the `parallel` feature both variants run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use topk_subgraph::generator::{generate_database, GenParams};
use topk_subgraph::miner::run_chains_with_index;
use topk_subgraph::oracle::{ground_truth, DEFAULT_ENUMERATION_CAP};
use topk_subgraph::{EdgeSupportIndex, Execution, MineConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn chains(c: &mut Criterion) {
    let db = generate_database(&GenParams::default()).unwrap();
    let index = EdgeSupportIndex::build(&db);
    let mut group = c.benchmark_group("run_chains");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = MineConfig {
            p: 4,
            k: 50,
            max_iter: 20_000,
            num_chains: 8,
            jaccard_eps: 0.0, // never stop early: equal work in both modes
            execution: exec,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::new(name, "8x20k"), &config, |b, cfg| {
            b.iter(|| run_chains_with_index(&db, &index, cfg).unwrap())
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let db = generate_database(&GenParams::default()).unwrap();
    let mut group = c.benchmark_group("ground_truth");
    group.sample_size(10);
    for p in [3, 4] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, p), &p, |b, &p| {
                b.iter(|| ground_truth(&db, p, DEFAULT_ENUMERATION_CAP, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, chains, enumeration);
criterion_main!(benches);
