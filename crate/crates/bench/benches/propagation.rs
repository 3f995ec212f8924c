use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use idvoi::voi::{voi_cooper, voi_general_model, voi_non_intervening, voi_table_expansion};
use idvoi::{solve_meu, Evidence, ObservationScenario};
use idvoi_bench::{diagrams, query, single_decision};
use std::hint::black_box;

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_meu");
    for chance in [6, 10, 14] {
        let corpus = diagrams(chance, 3, 8);
        group.bench_with_input(BenchmarkId::from_parameter(chance), &corpus, |b, corpus| {
            b.iter(|| {
                for id in corpus {
                    let sc = ObservationScenario::modeled(id);
                    black_box(solve_meu(id, &sc, &Evidence::new()).unwrap().meu);
                }
            })
        });
    }
    group.finish();
}

// all candidates of one query, per method
fn batch_methods(c: &mut Criterion) {
    let mut group = c.benchmark_group("voi_single_decision");
    let corpus: Vec<_> = single_decision(10, 16)
        .into_iter()
        .map(|id| {
            let (cands, e) = query(&id, 1);
            (id, cands, e)
        })
        .filter(|(_, cands, _)| !cands.is_empty())
        .collect();
    group.bench_function("direct", |b| {
        b.iter(|| {
            for (id, cands, e) in &corpus {
                black_box(voi_non_intervening(id, cands, e).unwrap());
            }
        })
    });
    group.bench_function("cooper", |b| {
        b.iter(|| {
            for (id, cands, e) in &corpus {
                black_box(voi_cooper(id, cands, e).unwrap());
            }
        })
    });
    group.bench_function("expansion", |b| {
        b.iter(|| {
            for (id, cands, e) in &corpus {
                for &x in cands {
                    black_box(voi_table_expansion(id, x, 1, None, e).unwrap().voi);
                }
            }
        })
    });
    group.bench_function("general_model", |b| {
        b.iter(|| {
            for (id, cands, e) in &corpus {
                for &x in cands {
                    black_box(voi_general_model(id, x, 1, e).unwrap().voi);
                }
            }
        })
    });
    group.finish();
}

fn expansion_multi_decision(c: &mut Criterion) {
    let corpus: Vec<_> = diagrams(10, 3, 16)
        .into_iter()
        .map(|id| {
            let (cands, e) = query(&id, 2);
            (id, cands, e)
        })
        .collect();
    c.bench_function("voi_expansion_at_d2", |b| {
        b.iter(|| {
            for (id, cands, e) in &corpus {
                for &x in cands {
                    black_box(voi_table_expansion(id, x, 2, None, e).unwrap().voi);
                }
            }
        })
    });
}

criterion_group!(benches, solve, batch_methods, expansion_multi_decision);
criterion_main!(benches);
