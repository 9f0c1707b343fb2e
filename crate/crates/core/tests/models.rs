use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use sizebias::models::{sigma_d, Configuration, ModelDocument};
use sizebias::verify::{brute_force_law, sample_pairs};
use sizebias::{ModelSpec, StatisticKind};

fn build(v: serde_json::Value) -> ModelSpec {
    ModelDocument::from_json(&v.to_string()).unwrap().model.build().unwrap()
}

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn binom_ge(n: u64, p: f64, d: i64) -> f64 {
    (d.max(0) as u64..=n)
        .map(|k| choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .sum()
}

#[test]
fn marginals_of_the_desk_models() {
    let er = build(json!({"variant": "er_graph", "vertices": 4, "edge_probability": 0.5, "thresholds": 1}));
    let m = er.marginal_pmf(2).unwrap();
    assert_eq!((m.lo(), m.hi()), (0, 3));
    for k in 0..=3 {
        assert!((m.pmf(k) - choose(3, k as u64) / 8.0).abs() < 1e-15);
    }
    let mult = build(json!({"variant": "multinomial", "urns": 3, "balls": 3, "thresholds": 1}));
    let m = mult.marginal_pmf(0).unwrap();
    for k in 0..=3 {
        let want = choose(3, k as u64) * (1.0f64 / 3.0).powi(k as i32) * (2.0f64 / 3.0).powi(3 - k as i32);
        assert!((m.pmf(k) - want).abs() < 1e-15);
    }
    let hyp = build(json!({"variant": "hypergeometric", "colors": [2, 2], "sample_size": 2, "thresholds": 1}));
    let m = hyp.marginal_pmf(1).unwrap();
    for (k, want) in [(0, 1.0 / 6.0), (1, 4.0 / 6.0), (2, 1.0 / 6.0)] {
        assert!((m.pmf(k) - want).abs() < 1e-15);
    }
}

#[test]
fn closed_form_means() {
    for d in 0..=4 {
        let er = build(json!({"variant": "er_graph", "vertices": 7, "edge_probability": 0.3, "thresholds": d}));
        let want = 7.0 * binom_ge(6, 0.3, d);
        assert!((er.mean(StatisticKind::Ge).unwrap().value - want).abs() < 1e-12);
        let mult = build(json!({"variant": "multinomial", "urns": 5, "balls": 9, "thresholds": d}));
        let want = 5.0 * binom_ge(9, 0.2, d);
        assert!((mult.mean(StatisticKind::Ge).unwrap().value - want).abs() < 1e-12);
    }
    let (m, n) = (20.0f64, 40.0f64);
    let mult = build(json!({"variant": "multinomial", "urns": 20, "balls": 40, "thresholds": 1}));
    let want = m * (1.0 - (n / m) * (1.0 - 1.0 / m).powf(n - 1.0));
    assert!((mult.mean(StatisticKind::Ne).unwrap().value - want).abs() < 1e-11);
    let gg = build(json!({
        "variant": "gg_volume", "dimension": 1, "volume": 100.0, "grains": 2, "radii": 1.0, "threshold": 1.0
    }));
    let want = 100.0 * (1.0 - (1.0f64 - 2.0 / 100.0).powi(2));
    assert!((gg.mean(StatisticKind::Ge).unwrap().value - want).abs() < 1e-12);
}

#[test]
fn coupling_constants_by_model() {
    for d in 1..=3 {
        let er = build(json!({"variant": "er_graph", "vertices": 8, "edge_probability": 0.4, "thresholds": d}));
        assert_eq!(er.coupling_constant(StatisticKind::Ge).unwrap(), (d + 1) as f64);
        let nb = build(json!({
            "variant": "gg_neighbors", "dimension": 2, "volume": 400.0, "grains": 8, "thresholds": d
        }));
        assert_eq!(nb.coupling_constant(StatisticKind::Ge).unwrap(), (d * (5 * d + 1)) as f64);
    }
    let mult = build(json!({"variant": "multinomial", "urns": 4, "balls": 6, "weights": 1.5, "thresholds": 2}));
    assert_eq!(mult.coupling_constant(StatisticKind::Ge).unwrap(), 1.5);
    assert_eq!(mult.coupling_constant(StatisticKind::Ne).unwrap(), 3.0);
    let bad = ModelDocument::from_json(
        &json!({"variant": "gg_neighbors", "dimension": 5, "volume": 1e6, "grains": 3, "thresholds": 1}).to_string(),
    )
    .unwrap();
    assert!(bad.model.build().is_err());
}

#[test]
fn sigma_examples() {
    assert_eq!(sigma_d(&[2; 9], 5), 10);
    assert_eq!(sigma_d(&[3, 1, 2], 2), 5);
    assert_eq!(sigma_d(&[3, 1], 5), 4);
}

#[test]
fn complements() {
    let m5 = build(json!({"variant": "er_graph", "vertices": 5, "edge_probability": 0.2, "thresholds": 1}));
    assert_eq!(m5.complement(StatisticKind::Ge).unwrap().offset, 5.0);
    let w = build(json!({"variant": "multinomial", "urns": 2, "balls": 3, "weights": [1.0, 2.0], "thresholds": 1}));
    let c = w.complement(StatisticKind::Ge).unwrap();
    assert_eq!((c.offset, c.sign), (3.0, -1.0));

    // Isolated vertices are the complement of degree at least one.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let config = m5.sample_configuration(&mut rng).unwrap();
        let Configuration::Graph { vertices, edges } = &config else {
            panic!("not a graph")
        };
        let mut deg = vec![0; *vertices];
        let mut e = edges.iter();
        for i in 0..*vertices {
            for j in i + 1..*vertices {
                if *e.next().unwrap() {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
        }
        let isolated = deg.iter().filter(|&&x| x == 0).count() as f64;
        assert_eq!(5.0 - isolated, m5.statistic(&config, StatisticKind::Ge).unwrap());
    }
}

#[test]
fn enumeration_agrees_with_means() {
    let models = [
        build(json!({"variant": "er_graph", "vertices": 5, "edge_probability": 0.35, "weights": [1.0, 2.0, 0.5, 1.0, 3.0], "thresholds": [1, 2, 3, 0, 2]})),
        build(json!({"variant": "multinomial", "placement": [[0.2, 0.5, 0.1], [0.3, 0.25, 0.6], [0.5, 0.25, 0.3]], "weights": [1.0, 2.0, 3.0], "thresholds": [1, 2, 0]})),
        build(json!({"variant": "hypergeometric", "colors": [2, 3, 1], "sample_size": 3, "weights": [1.0, 0.5, 2.0], "thresholds": [1, 2, 1]})),
    ];
    for m in &models {
        for kind in StatisticKind::ALL {
            let law = brute_force_law(m, kind).unwrap();
            assert!((law.mean() - m.mean(kind).unwrap().value).abs() <= 1e-10, "{} {kind:?}", m.variant());
        }
    }
}

#[test]
fn hypergeometric_ne_pairs_move_at_most_two_weights() {
    let m = build(json!({"variant": "hypergeometric", "colors": [3, 4, 2, 5], "sample_size": 6, "weights": [1.0, 2.0, 0.5, 1.5], "thresholds": [1, 2, 0, 3]}));
    let s = m.pair_sampler(StatisticKind::Ne).unwrap();
    assert_eq!(s.coupling_constant(), 4.0);
    for p in sample_pairs(s.as_ref(), 50_000, 2).unwrap() {
        assert!((p.y_s - p.y).abs() <= 4.0 + 1e-12);
    }
}

#[test]
fn hypergeometric_exhaustive_sample() {
    let m = build(json!({"variant": "hypergeometric", "colors": [2, 2], "sample_size": 4, "thresholds": 2}));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = m.sample_configuration(&mut rng).unwrap();
    assert_eq!(c, Configuration::Sample { labels: vec![0, 1, 2, 3] });
    assert_eq!(m.statistic(&c, StatisticKind::Ge).unwrap(), 2.0);
}
