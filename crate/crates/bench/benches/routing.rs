use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dbroute::eval::{constrained_kmeans, KMeansOptions};
use dbroute::reasoner::LexicalReasoner;
use dbroute::retrieval::{build_index, rank_by_similarity, HashingEmbedder, IndexOptions};
use dbroute::scoring::{connectivity_score, coverage_score, CoverageInput, RerankConfig};
use dbroute::{GraphSource, Mode, QuerySample, Router, RouterConfig};
use dbroute_bench::{random_graph, random_mappings, synthetic_repository, synthetic_schema};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scores(c: &mut Criterion) {
    c.bench_function("coverage_score", |b| {
        b.iter(|| {
            coverage_score(black_box(CoverageInput {
                total_mappings: 7,
                na_mappings: 2,
                n: 2.0,
            }))
        })
    });

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let schema = synthetic_schema("s", 12, &mut rng);
    let graph = random_graph(12, 0.15, &mut rng);
    let mappings = random_mappings(&schema, 6, 3, &mut rng);
    let mut group = c.benchmark_group("connectivity");
    for steiner in [true, false] {
        let cfg = RerankConfig {
            allow_steiner_tables: steiner,
            ..RerankConfig::default()
        };
        group.bench_with_input(
            BenchmarkId::from_parameter(if steiner { "steiner" } else { "strict" }),
            &cfg,
            |b, cfg| b.iter(|| connectivity_score(black_box(&mappings), &graph, cfg).unwrap()),
        );
    }
    group.finish();
}

fn retrieval(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let repo = synthetic_repository(200, 6, &mut rng);
    let embedder = HashingEmbedder::new(256);
    c.bench_function("build_index_200", |b| {
        b.iter(|| build_index(black_box(&repo), &embedder, IndexOptions::default()).unwrap())
    });
    let index = build_index(&repo, &embedder, IndexOptions::default()).unwrap();
    c.bench_function("rank_200", |b| {
        b.iter(|| {
            rank_by_similarity(
                "q",
                black_box("average grade of each student per course"),
                &index,
                &embedder,
            )
            .unwrap()
        })
    });

    let vectors = index
        .entries
        .iter()
        .map(|(k, e)| (k.clone(), e.vector.clone()))
        .collect();
    c.bench_function("constrained_kmeans_200", |b| {
        b.iter(|| {
            constrained_kmeans(
                &vectors,
                10,
                18,
                22,
                7,
                KMeansOptions {
                    max_iterations: 30,
                    restarts: 1,
                },
            )
            .unwrap()
        })
    });
}

fn end_to_end(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let repo = synthetic_repository(50, 5, &mut rng);
    let config = RouterConfig {
        mode: Mode::ModularRerank,
        graph_source: GraphSource::Keys,
        ..RouterConfig::default()
    };
    let router = Router::new(
        repo,
        Arc::new(HashingEmbedder::new(256)),
        Some(Arc::new(LexicalReasoner::new())),
        config,
    )
    .unwrap();
    let q = QuerySample::new(
        "1",
        "Which teacher grades the exam of each student?",
        "db_000",
    );
    c.bench_function("route_modular_k5", |b| {
        b.iter(|| router.route(black_box(&q)).unwrap())
    });
}

criterion_group!(benches, scores, retrieval, end_to_end);
criterion_main!(benches);
