use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sizebias::bounds::{bernstein_tail, sub_poisson_tail};
use sizebias::models::ModelDocument;
use sizebias::{BoundParams, LatticePmf, ModelSpec, MonotoneChain, StatisticKind};

fn model(json: &str) -> ModelSpec {
    ModelDocument::from_json(json).unwrap().model.build().unwrap()
}

fn lattice(c: &mut Criterion) {
    let p: Vec<f64> = (0..200).map(|i| 0.05 + 0.9 * i as f64 / 199.0).collect();
    c.bench_function("poisson_binomial_200", |b| {
        b.iter(|| LatticePmf::poisson_binomial(black_box(&p)).unwrap())
    });
}

fn chains(c: &mut Criterion) {
    let p = [0.1, 0.25, 0.4, 0.5, 0.6, 0.7, 0.85, 0.9];
    c.bench_function("monotone_chain_build_8", |b| b.iter(|| MonotoneChain::new(black_box(&p)).unwrap()));
    let chain = MonotoneChain::new(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("monotone_chain_sample_8", |b| b.iter(|| chain.sample(&mut rng)));
}

fn pairs(c: &mut Criterion) {
    let cases = [
        ("er_graph_30", r#"{"variant": "er_graph", "vertices": 30, "edge_probability": 0.2, "thresholds": 2}"#),
        ("multinomial_20", r#"{"variant": "multinomial", "urns": 20, "balls": 40, "thresholds": 1}"#),
        ("hypergeometric_4", r#"{"variant": "hypergeometric", "colors": [5, 8, 3, 6], "sample_size": 10, "thresholds": 2}"#),
        ("gg_neighbors_2d", r#"{"variant": "gg_neighbors", "dimension": 2, "volume": 400.0, "grains": 8, "thresholds": 1}"#),
        ("gg_volume_1d", r#"{"variant": "gg_volume", "dimension": 1, "volume": 100.0, "grains": 5, "radii": 1.0, "threshold": 2.0}"#),
    ];
    let mut group = c.benchmark_group("pair_sample");
    for (name, json) in cases {
        let m = model(json);
        let sampler = m.pair_sampler(StatisticKind::Ge).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        group.bench_function(name, |b| b.iter(|| sampler.sample(&mut rng).unwrap()));
    }
    group.finish();
}

fn bounds(c: &mut Criterion) {
    let params: Vec<BoundParams> = (1..=1000)
        .map(|i| BoundParams::new(10.0 + i as f64, 2.0, 0.05 * i as f64).unwrap())
        .collect();
    c.bench_function("sub_poisson_and_bernstein_1000", |b| {
        b.iter(|| {
            params
                .iter()
                .map(|p| sub_poisson_tail(black_box(p)) + bernstein_tail(black_box(p)))
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, lattice, chains, pairs, bounds);
criterion_main!(benches);
