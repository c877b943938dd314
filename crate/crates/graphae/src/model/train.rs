use ndarray::Array2;

use super::decoder::{decode, DecoderConfig};
use super::encoder::{backward_head, forward_head, standard_normal, EncoderKind, EncoderWeights, Propagation};
use super::loss::{kl_gaussian, reconstruction_pass, ModularityTerm, PairBatch};
use crate::degeneracy::{extract_k_core, propagate_embeddings};
use crate::error::{invalid, Error, Result};
use crate::graph::{normalize, symmetric_normalize_with, Features, OperatorKind, SparseGraph};
use crate::sampling::{importance_scores, sample_nodes, sampling_distribution, SamplingConfig};

/// Architecture of an autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub encoder: EncoderKind,
    pub variational: bool,
    /// Embedding dimension (the gravity decoder adds one mass column).
    pub dim: usize,
    pub decoder: DecoderConfig,
    pub operator: OperatorKind,
}

impl ModelSpec {
    /// The usual two-layer GCN autoencoder: 32 hidden units, inner product decoder.
    pub fn gcn(dim: usize, variational: bool) -> ModelSpec {
        ModelSpec {
            encoder: EncoderKind::Gcn2 { hidden: 32 },
            variational,
            dim,
            decoder: DecoderConfig::inner_product(),
            operator: OperatorKind::Symmetric,
        }
    }

    /// One-hop linear encoder, inner product decoder.
    pub fn linear(dim: usize, variational: bool) -> ModelSpec {
        ModelSpec { encoder: EncoderKind::Linear, ..ModelSpec::gcn(dim, variational) }
    }

    pub fn output_dim(&self) -> usize {
        self.decoder.output_dim(self.dim)
    }
}

/// Community prior for the first encoder layer: the encoder propagates over
/// `A + λ·A_s` instead of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPrior {
    pub graph: SparseGraph,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scaling {
    /// Reconstruct all n² pairs every epoch.
    Full,
    /// Train on the k-core, then propagate embeddings with `iterations` sweeps per wave.
    KCore { k: usize, iterations: usize },
    /// Reconstruct a freshly sampled subgraph every epoch.
    Sampled(SamplingConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularityReg {
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight of positive pairs; `None` balances positives against negatives.
    pub w_pos: Option<f64>,
    pub scaling: Scaling,
    pub modularity: Option<ModularityReg>,
    pub seed: u64,
    /// Reconstruct the diagonal with label 1.
    pub include_diagonal: bool,
    /// Largest number of pairs a full-batch epoch may decode.
    pub max_pairs: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.01,
            w_pos: None,
            scaling: Scaling::Full,
            modularity: None,
            seed: 0,
            include_diagonal: true,
            max_pairs: 500_000_000,
        }
    }
}

/// Result of training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub weights: EncoderWeights,
    /// One row per node; for gravity models the last column holds the masses.
    pub embedding: Array2<f64>,
    /// Training loss before each update.
    pub loss_trace: Vec<f64>,
    pub seed: u64,
    pub featureless: bool,
    /// Mixing weight of the community prior used during training (0 if none).
    pub prior_lambda: f64,
    /// Nodes the encoder was trained on when using k-core scaling.
    pub core_nodes: Option<Vec<usize>>,
}

impl TrainedModel {
    pub fn masses(&self) -> Option<ndarray::ArrayView1<'_, f64>> {
        (self.spec.decoder.kind == super::DecoderKind::Gravity).then(|| self.embedding.column(self.spec.dim))
    }

    /// Edge probabilities for ordered pairs.
    pub fn scores(&self, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        decode(self.embedding.view(), pairs, &self.spec.decoder)
    }
}

pub(crate) fn build_propagation(g: &SparseGraph, spec: &ModelSpec, prior: Option<&CommunityPrior>) -> Result<Propagation> {
    let base_graph = match spec.operator {
        OperatorKind::Symmetric => g.to_undirected(),
        OperatorKind::OutDegree => g.clone(),
    };
    let base = normalize(&base_graph, spec.operator)?;
    let inner = match prior {
        Some(p) if p.lambda > 0.0 => {
            if spec.operator != OperatorKind::Symmetric {
                return invalid("a community prior needs the symmetric operator");
            }
            symmetric_normalize_with(&base_graph, &p.graph, p.lambda)?
        }
        _ => base.clone(),
    };
    let outer = match spec.encoder {
        EncoderKind::Linear => inner.clone(),
        EncoderKind::Gcn2 { .. } => base,
    };
    Ok(Propagation { outer, inner })
}

/// Training objective on one graph: reconstruction loss, optional
/// modularity regulariser, and the KL term for variational models.
pub struct Objective<'a> {
    prop: Propagation,
    x: &'a Features,
    labels: &'a SparseGraph,
    decoder: DecoderConfig,
    include_diag: bool,
    w_pos: Option<f64>,
    modularity: Option<ModularityTerm>,
}

impl<'a> Objective<'a> {
    pub fn new(
        g: &'a SparseGraph,
        x: &'a Features,
        spec: &ModelSpec,
        prior: Option<&CommunityPrior>,
        cfg: &TrainConfig,
    ) -> Result<Objective<'a>> {
        if x.n() != g.n() {
            return Err(Error::Dimension(format!("{} feature rows for {} nodes", x.n(), g.n())));
        }
        spec.decoder.validate(spec.output_dim())?;
        if let Some(w) = cfg.w_pos {
            if w < 1.0 {
                return invalid("w_pos must be at least 1");
            }
        }
        let modularity = match cfg.modularity {
            Some(r) if r.beta < 0.0 || r.gamma < 0.0 => return invalid("modularity beta and gamma must be non-negative"),
            Some(r) if r.beta > 0.0 => Some(ModularityTerm::new(g, r.beta, r.gamma)?),
            _ => None,
        };
        Ok(Objective {
            prop: build_propagation(g, spec, prior)?,
            x,
            labels: g,
            decoder: spec.decoder,
            include_diag: cfg.include_diagonal,
            w_pos: cfg.w_pos,
            modularity,
        })
    }

    /// Mean-head output, used as the embedding after training.
    pub fn encode_mean(&self, w: &EncoderWeights) -> Result<Array2<f64>> {
        Ok(forward_head(&w.mean, &self.prop, self.x)?.0)
    }

    /// Loss on the pairs of `nodes` and, optionally, its gradient.
    ///
    /// `noise` holds the standard normal draws of variational models (one
    /// row per node, all nodes), which makes the loss a deterministic
    /// function of the weights.
    pub fn evaluate(
        &self,
        w: &EncoderWeights,
        nodes: &[usize],
        noise: Option<&Array2<f64>>,
        want_grad: bool,
    ) -> Result<(f64, Option<EncoderWeights>)> {
        let n = self.labels.n();
        let (mu, cache_mu) = forward_head(&w.mean, &self.prop, self.x)?;
        let sigma_part = match (&w.log_sigma, noise) {
            (Some(layer), Some(eps)) => {
                let (ls, cache) = forward_head(layer, &self.prop, self.x)?;
                let sigma = ls.mapv(f64::exp);
                Some((ls, sigma, cache, eps))
            }
            (Some(_), None) => return invalid("variational objective needs noise"),
            _ => None,
        };
        let z = match &sigma_part {
            Some((_, sigma, _, eps)) => &mu + &(sigma * *eps),
            None => mu.clone(),
        };
        let batch = PairBatch { nodes, labels: self.labels, include_diag: self.include_diag };
        let w_pos = self.w_pos.unwrap_or_else(|| batch.default_w_pos());
        let (mut loss, mut gz) = reconstruction_pass(&z, &batch, &self.decoder, w_pos, want_grad)?;
        if let Some(term) = &self.modularity {
            let scale = (n as f64 / nodes.len() as f64).powi(2);
            let space = self.decoder.space_dim(z.ncols());
            let (l, g) = term.pass(&z, nodes, space, scale, want_grad);
            loss += l;
            if let (Some(gz), Some(g)) = (gz.as_mut(), g) {
                *gz += &g;
            }
        }
        let nf = n as f64;
        if let Some((ls, _, _, _)) = &sigma_part {
            loss += kl_gaussian(mu.view(), ls.view()) / nf;
        }
        if !loss.is_finite() {
            return Err(Error::Numeric("training loss is not finite".into()));
        }
        let Some(gz) = gz else { return Ok((loss, None)) };
        let mut grads = w.zeros_like();
        match &sigma_part {
            None => grads.mean = backward_head(&w.mean, &self.prop, self.x, &cache_mu, &gz),
            Some((_, sigma, cache_ls, eps)) => {
                let kl_scale = 1.0 / (nf * nf);
                let g_mu = &gz + &(&mu * kl_scale);
                let g_ls = &gz * sigma * *eps + &((sigma * sigma - 1.0) * kl_scale);
                grads.mean = backward_head(&w.mean, &self.prop, self.x, &cache_mu, &g_mu);
                grads.log_sigma = Some(backward_head(w.log_sigma.as_ref().unwrap(), &self.prop, self.x, cache_ls, &g_ls));
            }
        }
        Ok((loss, Some(grads)))
    }
}

/// Adam with the usual constants.
pub(crate) struct Adam {
    lr: f64,
    t: i32,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(lr: f64, shapes: &[&Array2<f64>]) -> Adam {
        let zeros = || shapes.iter().map(|a| Array2::zeros(a.raw_dim())).collect();
        Adam { lr, t: 0, m: zeros(), v: zeros() }
    }

    pub fn step(&mut self, params: Vec<&mut Array2<f64>>, grads: Vec<&Array2<f64>>) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let lr = self.lr;
            ndarray::Zip::from(p).and(&mut self.m[k]).and(&mut self.v[k]).and(g).for_each(|p, m, v, &g| {
                *m = Self::B1 * *m + (1.0 - Self::B1) * g;
                *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            });
        }
    }
}

const STREAM_INIT: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_SAMPLE: u64 = 3;

/// Trains an autoencoder on `g`.
///
/// `g` provides both the propagation structure and the reconstruction
/// targets. Directed graphs with the symmetric operator propagate over the
/// undirected version but still reconstruct directed arcs.
pub fn train(
    g: &SparseGraph,
    x: &Features,
    spec: &ModelSpec,
    prior: Option<&CommunityPrior>,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    if cfg.epochs < 1 {
        return invalid("epochs must be at least 1");
    }
    if spec.dim < 1 {
        return invalid("embedding dimension must be at least 1");
    }
    match &cfg.scaling {
        Scaling::KCore { k, iterations } => train_on_core(g, x, spec, prior, cfg, *k, *iterations),
        Scaling::Full => {
            let pairs = (g.n() as u64).saturating_mul(g.n() as u64);
            if pairs > cfg.max_pairs {
                return invalid(format!(
                    "full-batch training would decode {pairs} pairs, above the budget of {} (use k-core or sampled scaling)",
                    cfg.max_pairs
                ));
            }
            let all: Vec<usize> = (0..g.n()).collect();
            fit(g, x, spec, prior, cfg, |_| Ok(all.clone()))
        }
        Scaling::Sampled(sc) => {
            if sc.size < 1 || sc.size > g.n() {
                return invalid(format!("subgraph size must lie in 1..={}", g.n()));
            }
            let p = sampling_distribution(&importance_scores(&g.to_undirected(), sc.method), sc.alpha)?;
            let mut rng = crate::seeded_rng(cfg.seed, STREAM_SAMPLE);
            fit(g, x, spec, prior, cfg, |_| sample_nodes(&p, sc.size, sc.with_replacement, &mut rng))
        }
    }
}

fn fit(
    g: &SparseGraph,
    x: &Features,
    spec: &ModelSpec,
    prior: Option<&CommunityPrior>,
    cfg: &TrainConfig,
    mut batch: impl FnMut(usize) -> Result<Vec<usize>>,
) -> Result<TrainedModel> {
    let objective = Objective::new(g, x, spec, prior, cfg)?;
    let mut init_rng = crate::seeded_rng(cfg.seed, STREAM_INIT);
    let mut noise_rng = crate::seeded_rng(cfg.seed, STREAM_NOISE);
    let mut weights = EncoderWeights::init(spec.encoder, spec.variational, x.dim(), spec.output_dim(), &mut init_rng);
    let mut adam = Adam::new(cfg.learning_rate, &weights.mats());
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let nodes = batch(epoch)?;
        let noise = spec.variational.then(|| standard_normal(g.n(), spec.output_dim(), &mut noise_rng));
        let (loss, grads) = objective.evaluate(&weights, &nodes, noise.as_ref(), true)?;
        trace.push(loss);
        let grads = grads.unwrap();
        adam.step(weights.mats_mut(), grads.mats());
    }
    let embedding = objective.encode_mean(&weights)?;
    if embedding.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("embedding contains non-finite values".into()));
    }
    Ok(TrainedModel {
        spec: spec.clone(),
        weights,
        embedding,
        loss_trace: trace,
        seed: cfg.seed,
        featureless: x.is_identity(),
        prior_lambda: prior.map_or(0.0, |p| p.lambda),
        core_nodes: None,
    })
}

fn train_on_core(
    g: &SparseGraph,
    x: &Features,
    spec: &ModelSpec,
    prior: Option<&CommunityPrior>,
    cfg: &TrainConfig,
    k: usize,
    iterations: usize,
) -> Result<TrainedModel> {
    let (core, nodes) = extract_k_core(g, k);
    if nodes.is_empty() {
        return invalid(format!("the {k}-core is empty"));
    }
    let x_core = x.select(&nodes);
    let prior_core = prior.map(|p| CommunityPrior { graph: p.graph.induced_subgraph(&nodes), lambda: p.lambda });
    let inner_cfg = TrainConfig { scaling: Scaling::Full, ..cfg.clone() };
    let mut model = train(&core, &x_core, spec, prior_core.as_ref(), &inner_cfg)?;
    model.embedding = propagate_embeddings(g, &nodes, model.embedding.view(), iterations, cfg.seed)?;
    model.core_nodes = Some(nodes);
    Ok(model)
}
