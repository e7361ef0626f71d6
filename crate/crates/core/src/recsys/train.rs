use log::debug;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::embedding::{dot, EmbeddingTable};
use super::propagate::{propagate_adjoint, propagate_with, Propagator};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Pair};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub batch_size: usize,
    /// Propagation depth; ignored by BPR.
    pub layers: usize,
    pub init_std: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 64,
            epochs: 300,
            learning_rate: 0.001,
            l2_reg: 1e-4,
            batch_size: 2048,
            layers: 3,
            init_std: 0.01,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.into()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.l2_reg.is_finite() && self.l2_reg >= 0.0) {
            return bad("l2_reg must be finite and non-negative");
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return bad("init_std must be finite and non-negative");
        }
        Ok(())
    }
}

/// A user, one of its observed items and one unobserved item.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triplet {
    pub user: u32,
    pub positive: u32,
    pub negative: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedEmbeddings {
    pub base: EmbeddingTable,
    /// What scoring uses; equal to `base` when there is no propagation.
    pub propagated: EmbeddingTable,
    /// Mean batch loss per epoch.
    pub loss_history: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean over `triplets` of `-ln σ(x_ui - x_uj) + λ(‖e_u‖² + ‖e_i‖² + ‖e_j‖²)`,
/// where `x` uses the propagated vectors and the penalty the base ones,
/// together with its gradient with respect to `base`.
pub fn triplet_loss_and_grad(
    propagator: &Propagator,
    base: &EmbeddingTable,
    layers: usize,
    triplets: &[Triplet],
    l2: f64,
) -> (f64, EmbeddingTable) {
    let d = base.dim();
    let (nl, nr) = (base.left_count(), base.right_count());
    let out = propagate_with(propagator, base, layers);
    let mut grad_out = EmbeddingTable::zeros(nl, nr, d);
    let mut grad_base = EmbeddingTable::zeros(nl, nr, d);
    if triplets.is_empty() {
        return (0.0, grad_base);
    }
    let scale = 1.0 / triplets.len() as f64;
    let mut loss = 0.0;
    for t in triplets {
        let (u, i, j) = (t.user as usize, t.positive as usize, t.negative as usize);
        let (fu, fi, fj) = (out.left_vector(u), out.right_vector(i), out.right_vector(j));
        let x = dot(fu, fi) - dot(fu, fj);
        let (bu, bi, bj) = (base.left_vector(u), base.right_vector(i), base.right_vector(j));
        loss += softplus(-x) + l2 * (dot(bu, bu) + dot(bi, bi) + dot(bj, bj));

        let coef = -sigmoid(-x) * scale;
        {
            let gl = &mut grad_out.left_mut()[u * d..(u + 1) * d];
            for k in 0..d {
                gl[k] += coef * (fi[k] - fj[k]);
            }
        }
        let gr = grad_out.right_mut();
        for k in 0..d {
            gr[i * d + k] += coef * fu[k];
            gr[j * d + k] -= coef * fu[k];
        }
        let r = 2.0 * l2 * scale;
        let bl = &mut grad_base.left_mut()[u * d..(u + 1) * d];
        bl.iter_mut().zip(bu).for_each(|(g, b)| *g += r * b);
        let br = grad_base.right_mut();
        for k in 0..d {
            br[i * d + k] += r * bi[k];
            br[j * d + k] += r * bj[k];
        }
    }
    let back = propagate_adjoint(propagator, &grad_out, layers);
    grad_base.values_mut().zip(back.values()).for_each(|(g, b)| *g += b);
    (loss * scale, grad_base)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut EmbeddingTable, grad: &EmbeddingTable, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for (((p, g), m), v) in params.values_mut().zip(grad.values()).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

fn check_trainable(graph: &BipartiteGraph) -> Result<()> {
    for u in 0..graph.left_count() {
        let degree = graph.left_degree(u);
        if degree == 0 {
            return Err(Error::Precondition(format!(
                "left node {} has no training edges",
                graph.left_label(u)
            )));
        }
        if degree == graph.right_count() {
            return Err(Error::Precondition(format!(
                "left node {} is linked to every right node, so no negative exists",
                graph.left_label(u)
            )));
        }
    }
    Ok(())
}

fn initial_embeddings(graph: &BipartiteGraph, config: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<EmbeddingTable> {
    let normal = Normal::new(0.0, config.init_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let d = config.dim;
    let left = (0..graph.left_count() * d).map(|_| normal.sample(rng)).collect();
    let right = (0..graph.right_count() * d).map(|_| normal.sample(rng)).collect();
    EmbeddingTable::new(d, left, right)
}

fn train(graph: &BipartiteGraph, config: &TrainConfig, layers: usize) -> Result<TrainedEmbeddings> {
    config.validate()?;
    check_trainable(graph)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut base = initial_embeddings(graph, config, &mut rng)?;
    let propagator = Propagator::new(graph);
    let mut adam = Adam::new(base.parameter_count());
    let mut edges: Vec<Pair> = graph.edges().collect();
    let nr = graph.right_count();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        edges.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in edges.chunks(config.batch_size) {
            let triplets: Vec<Triplet> = batch
                .iter()
                .map(|e| {
                    let negative = loop {
                        let v = rng.gen_range(0..nr);
                        if !graph.has_edge(e.left as usize, v) {
                            break v as u32;
                        }
                    };
                    Triplet {
                        user: e.left,
                        positive: e.right,
                        negative,
                    }
                })
                .collect();
            let (loss, grad) = triplet_loss_and_grad(&propagator, &base, layers, &triplets, config.l2_reg);
            total += loss * triplets.len() as f64;
            match config.optimizer {
                Optimizer::Adam => adam.update(&mut base, &grad, config.learning_rate),
                Optimizer::Sgd => base
                    .values_mut()
                    .zip(grad.values())
                    .for_each(|(p, g)| *p -= config.learning_rate * g),
            }
        }
        let mean = total / edges.len().max(1) as f64;
        debug!("epoch {epoch}: loss {mean:.6}");
        loss_history.push(mean);
    }

    if base.values().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateData(
            "training diverged to non-finite embeddings".into(),
        ));
    }
    let propagated = propagate_with(&propagator, &base, layers);
    Ok(TrainedEmbeddings {
        base,
        propagated,
        loss_history,
    })
}

/// Matrix factorization trained on the BPR objective.
pub fn train_bpr(graph: &BipartiteGraph, config: &TrainConfig) -> Result<TrainedEmbeddings> {
    train(graph, config, 0)
}

/// BPR objective on `config.layers`-deep propagated embeddings.
pub fn train_lightgcn(graph: &BipartiteGraph, config: &TrainConfig) -> Result<TrainedEmbeddings> {
    train(graph, config, config.layers)
}
