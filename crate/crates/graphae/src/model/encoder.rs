use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{Features, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    /// `Z = Ã X W`.
    Linear,
    /// `Z = Ã ReLU(Ã X W0) W1`.
    Gcn2 { hidden: usize },
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Linear => "linear",
            EncoderKind::Gcn2 { .. } => "gcn2",
        }
    }
}

/// Weights of one encoder head.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w0: Array2<f64>,
    pub w1: Option<Array2<f64>>,
}

impl Layer {
    pub(crate) fn glorot<R: Rng>(kind: EncoderKind, input: usize, out: usize, rng: &mut R) -> Layer {
        match kind {
            EncoderKind::Linear => Layer { w0: glorot(input, out, rng), w1: None },
            EncoderKind::Gcn2 { hidden } => Layer { w0: glorot(input, hidden, rng), w1: Some(glorot(hidden, out, rng)) },
        }
    }

    pub(crate) fn zeros_like(&self) -> Layer {
        Layer { w0: Array2::zeros(self.w0.raw_dim()), w1: self.w1.as_ref().map(|w| Array2::zeros(w.raw_dim())) }
    }

    pub(crate) fn mats_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut v = vec![&mut self.w0];
        if let Some(w) = self.w1.as_mut() {
            v.push(w);
        }
        v
    }

    pub(crate) fn mats(&self) -> Vec<&Array2<f64>> {
        let mut v = vec![&self.w0];
        if let Some(w) = self.w1.as_ref() {
            v.push(w);
        }
        v
    }

    pub fn out_dim(&self) -> usize {
        self.w1.as_ref().unwrap_or(&self.w0).ncols()
    }
}

/// Encoder parameters: a mean head and, for variational models, a
/// parallel head producing `log σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    pub kind: EncoderKind,
    pub mean: Layer,
    pub log_sigma: Option<Layer>,
}

impl EncoderWeights {
    pub fn init<R: Rng>(kind: EncoderKind, variational: bool, input: usize, out: usize, rng: &mut R) -> EncoderWeights {
        let mean = Layer::glorot(kind, input, out, rng);
        let log_sigma = variational.then(|| Layer::glorot(kind, input, out, rng));
        EncoderWeights { kind, mean, log_sigma }
    }

    pub fn is_variational(&self) -> bool {
        self.log_sigma.is_some()
    }

    pub(crate) fn zeros_like(&self) -> EncoderWeights {
        EncoderWeights { kind: self.kind, mean: self.mean.zeros_like(), log_sigma: self.log_sigma.as_ref().map(Layer::zeros_like) }
    }

    pub(crate) fn mats_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut v = self.mean.mats_mut();
        if let Some(l) = self.log_sigma.as_mut() {
            v.extend(l.mats_mut());
        }
        v
    }

    pub(crate) fn mats(&self) -> Vec<&Array2<f64>> {
        let mut v = self.mean.mats();
        if let Some(l) = self.log_sigma.as_ref() {
            v.extend(l.mats());
        }
        v
    }
}

fn glorot<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Array2<f64> {
    let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-r..r))
}

/// The two propagation operators of an encoder. Linear encoders use only
/// `inner`; standard GCNs use the same matrix twice.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub outer: Operator,
    pub inner: Operator,
}

pub(crate) struct HeadCache {
    /// Pre-activation of the hidden layer (GCN only).
    pre: Option<Array2<f64>>,
    hidden: Option<Array2<f64>>,
}

fn check_dims(x: &Features, op: &Operator, w0: &Array2<f64>) -> Result<()> {
    if x.n() != op.n() {
        return Err(Error::Dimension(format!("features have {} rows, operator has {} nodes", x.n(), op.n())));
    }
    if x.dim() != w0.nrows() {
        return Err(Error::Dimension(format!("features have {} columns, first weight has {} rows", x.dim(), w0.nrows())));
    }
    Ok(())
}

pub(crate) fn forward_head(layer: &Layer, prop: &Propagation, x: &Features) -> Result<(Array2<f64>, HeadCache)> {
    check_dims(x, &prop.inner, &layer.w0)?;
    let pre = prop.inner.apply(x.times(&layer.w0).view())?;
    match &layer.w1 {
        None => Ok((pre, HeadCache { pre: None, hidden: None })),
        Some(w1) => {
            if w1.nrows() != pre.ncols() {
                return Err(Error::Dimension("hidden width does not match second weight".into()));
            }
            let hidden = pre.mapv(|v| v.max(0.0));
            let z = prop.outer.apply(hidden.dot(w1).view())?;
            Ok((z, HeadCache { pre: Some(pre), hidden: Some(hidden) }))
        }
    }
}

pub(crate) fn backward_head(layer: &Layer, prop: &Propagation, x: &Features, cache: &HeadCache, gz: &Array2<f64>) -> Layer {
    match &layer.w1 {
        None => {
            let g = prop.inner.apply_transpose(gz.view()).expect("shapes checked in forward");
            Layer { w0: x.t_times(&g), w1: None }
        }
        Some(w1) => {
            let g_hw = prop.outer.apply_transpose(gz.view()).expect("shapes checked in forward");
            let hidden = cache.hidden.as_ref().unwrap();
            let pre = cache.pre.as_ref().unwrap();
            let g_w1 = hidden.t().dot(&g_hw);
            let mut g_pre = g_hw.dot(&w1.t());
            ndarray::Zip::from(&mut g_pre).and(pre).for_each(|g, &p| {
                if p <= 0.0 {
                    *g = 0.0;
                }
            });
            let g = prop.inner.apply_transpose(g_pre.view()).expect("shapes checked in forward");
            Layer { w0: x.t_times(&g), w1: Some(g_w1) }
        }
    }
}

/// `Z = op · X · W`.
pub fn encode_linear(op: &Operator, x: &Features, w: &Array2<f64>) -> Result<Array2<f64>> {
    check_dims(x, op, w)?;
    op.apply(x.times(w).view())
}

/// `Z = outer · ReLU(inner · X · W0) · W1`.
pub fn encode_gcn2(outer: &Operator, inner: &Operator, x: &Features, w0: &Array2<f64>, w1: &Array2<f64>) -> Result<Array2<f64>> {
    let layer = Layer { w0: w0.clone(), w1: Some(w1.clone()) };
    let prop = Propagation { outer: outer.clone(), inner: inner.clone() };
    Ok(forward_head(&layer, &prop, x)?.0)
}

/// `Z = μ + exp(log σ) ⊙ ε` with seeded standard normal `ε`.
pub fn reparameterize(mu: &Array2<f64>, log_sigma: &Array2<f64>, seed: u64) -> Result<Array2<f64>> {
    if mu.dim() != log_sigma.dim() {
        return Err(Error::Dimension("mean and log-sigma shapes differ".into()));
    }
    let mut rng = crate::seeded_rng(seed, 0x6e_6f_69_73);
    let eps = standard_normal(mu.nrows(), mu.ncols(), &mut rng);
    Ok(mu + &(log_sigma.mapv(f64::exp) * eps))
}

pub(crate) fn standard_normal<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}
