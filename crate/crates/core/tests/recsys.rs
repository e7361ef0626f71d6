use bilink::recsys::{
    embedding_scores, propagate_lightgcn, train_bpr, train_lightgcn, EmbeddingTable, Propagator, TrainConfig,
};
use bilink::scores::{rank_and_select, ScoreTable};
use bilink::{BipartiteGraph, Pair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_graph(rng: &mut ChaCha8Rng, left: usize, right: usize, p: f64) -> BipartiteGraph {
    let edges: Vec<Pair> = (0..left)
        .flat_map(|u| (0..right).map(move |v| Pair::new(u, v)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    BipartiteGraph::from_edges(left, right, edges).unwrap()
}

fn random_table(rng: &mut ChaCha8Rng, g: &BipartiteGraph, dim: usize) -> EmbeddingTable {
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect() };
    let left = draw(g.left_count() * dim);
    let right = draw(g.right_count() * dim);
    EmbeddingTable::new(dim, left, right).unwrap()
}

fn inner(a: &EmbeddingTable, b: &EmbeddingTable) -> f64 {
    a.values().zip(b.values()).map(|(x, y)| x * y).sum()
}

#[test]
fn propagation_adjoint_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let g = random_graph(&mut rng, 12, 17, 0.3);
        let p = Propagator::new(&g);
        let x = random_table(&mut rng, &g, 4);
        let y = random_table(&mut rng, &g, 4);
        let lhs = inner(&p.apply(&x), &y);
        let rhs = inner(&x, &p.apply_transpose(&y));
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn propagation_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = random_graph(&mut rng, 10, 14, 0.35);
    let x = random_table(&mut rng, &g, 3);
    let y = random_table(&mut rng, &g, 3);
    let (a, b) = (0.7, -2.5);
    let combined = propagate_lightgcn(&x.combine(a, &y, b).unwrap(), &g, 3).unwrap();
    let separate = propagate_lightgcn(&x, &g, 3)
        .unwrap()
        .combine(a, &propagate_lightgcn(&y, &g, 3).unwrap(), b)
        .unwrap();
    for (s, t) in combined.values().zip(separate.values()) {
        assert!((s - t).abs() < 1e-10);
    }
}

#[test]
fn scores_are_inner_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_graph(&mut rng, 6, 9, 0.5);
    let emb = random_table(&mut rng, &g, 5);
    let pairs: Vec<Pair> = (0..6).flat_map(|u| (0..9).map(move |v| Pair::new(u, v))).collect();
    let scores = embedding_scores(&emb, &pairs).unwrap();
    for (p, s) in pairs.iter().zip(scores) {
        let (u, v) = (emb.left_vector(p.left as usize), emb.right_vector(p.right as usize));
        let naive: f64 = (0..5).map(|k| u[k] * v[k]).sum();
        assert!((s - naive).abs() < 1e-12);
    }
}

#[test]
fn ranking_is_invariant_under_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_graph(&mut rng, 8, 11, 0.4);
    let emb = random_table(&mut rng, &g, 2);
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let rotate = |values: &[f64]| -> Vec<f64> {
        values
            .chunks(2)
            .flat_map(|v| [c * v[0] - s * v[1], s * v[0] + c * v[1]])
            .collect()
    };
    let rotated = EmbeddingTable::new(2, rotate(emb.left_values()), rotate(emb.right_values())).unwrap();
    let pairs: Vec<Pair> = (0..8).flat_map(|u| (0..11).map(move |v| Pair::new(u, v))).collect();
    let table = |e: &EmbeddingTable| {
        let scores = embedding_scores(e, &pairs).unwrap();
        ScoreTable::new("dot", serde_json::Value::Null, None, &g, pairs.clone(), scores).unwrap()
    };
    let (a, b) = (table(&emb), table(&rotated));
    for (x, y) in a.scores.iter().zip(&b.scores) {
        assert!((x - y).abs() < 1e-12);
    }
    // rank order only differs where scores tie to rounding
    let top_a = rank_and_select(&a, 20).unwrap();
    let top_b = rank_and_select(&b, 20).unwrap();
    assert_eq!(top_a, top_b);
}

fn early_loss_drop(train: fn(&BipartiteGraph, &TrainConfig) -> bilink::Result<bilink::recsys::TrainedEmbeddings>) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_graph(&mut rng, 40, 60, 0.15);
    let mut first = 0.0;
    let mut last = 0.0;
    let seeds = 5;
    for seed in 0..seeds {
        let config = TrainConfig {
            dim: 8,
            epochs: 10,
            learning_rate: 0.01,
            batch_size: 64,
            layers: 2,
            seed,
            ..TrainConfig::default()
        };
        let history = train(&g, &config).unwrap().loss_history;
        assert_eq!(history.len(), 10);
        first += history[0] / seeds as f64;
        last += history[9] / seeds as f64;
    }
    assert!(last < first, "mean loss went from {first} to {last}");
    assert!(first < std::f64::consts::LN_2 + 1e-3, "first-epoch loss {first}");
}

#[test]
fn bpr_loss_decreases_over_early_epochs() {
    early_loss_drop(train_bpr);
}

#[test]
fn lightgcn_loss_decreases_over_early_epochs() {
    early_loss_drop(train_lightgcn);
}
