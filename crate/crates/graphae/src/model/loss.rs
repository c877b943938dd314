//! Training objectives.
//!
//! The public functions evaluate each loss directly on small dense inputs.
//! Training uses the streaming passes below, which walk the pair matrix in
//! row blocks so that no n×n matrix is ever held in memory, and return
//! gradients with respect to the embedding matrix.

use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView2, Axis};

use super::decoder::{logits_block, DecoderConfig, DecoderKind};
use crate::error::{invalid, Error, Result};
use crate::graph::SparseGraph;

/// Upper bound on entries of one pair block.
const BLOCK_ENTRIES: usize = 1 << 20;

#[inline(always)]
fn softplus_sigmoid(x: f64) -> (f64, f64) {
    let e = (-x.abs()).exp();
    let sp = x.max(0.0) + e.ln_1p();
    let inv = 1.0 / (1.0 + e);
    (sp, if x >= 0.0 { inv } else { e * inv })
}

/// Weighted cross-entropy averaged over all entries:
/// `−[w_pos·a·log σ(x) + (1−a)·log(1−σ(x))]`, evaluated in logit space.
pub fn loss_reconstruction(labels: ArrayView2<f64>, logits: ArrayView2<f64>, w_pos: f64) -> Result<f64> {
    if labels.dim() != logits.dim() {
        return Err(Error::Dimension("labels and logits differ in shape".into()));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite logit".into()));
    }
    let total: f64 = labels
        .iter()
        .zip(logits.iter())
        .map(|(&a, &x)| {
            let (sp, _) = softplus_sigmoid(x);
            w_pos * a * (sp - x) + (1.0 - a) * sp
        })
        .sum();
    Ok(total / labels.len() as f64)
}

/// `KL(N(μ, σ²) ‖ N(0, I))` summed over dimensions and averaged over nodes.
pub fn kl_gaussian(mu: ArrayView2<f64>, log_sigma: ArrayView2<f64>) -> f64 {
    let n = mu.nrows().max(1) as f64;
    let s: f64 = mu.iter().zip(log_sigma.iter()).map(|(&m, &l)| 1.0 + 2.0 * l - m * m - (2.0 * l).exp()).sum();
    -0.5 * s / n
}

/// `−(β/2m) Σ_ij [A_ij − d_i d_j / 2m] exp(−γ ‖z_i − z_j‖²)`, to be added to
/// a minimised loss.
pub fn loss_modularity_reg(z: ArrayView2<f64>, g: &SparseGraph, beta: f64, gamma: f64) -> Result<f64> {
    let g = g.to_undirected();
    if g.m() == 0 {
        return invalid("modularity needs at least one edge");
    }
    if z.nrows() != g.n() {
        return Err(Error::Dimension(format!("{} embedding rows for {} nodes", z.nrows(), g.n())));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    let deg: Vec<f64> = (0..g.n()).map(|i| g.degree(i)).collect();
    let two_m: f64 = deg.iter().sum();
    let mut total = 0.0;
    for i in 0..g.n() {
        for j in 0..g.n() {
            let d2: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            total += (g.weight(i, j) - deg[i] * deg[j] / two_m) * (-gamma * d2).exp();
        }
    }
    Ok(-beta / two_m * total)
}

/// Pairs to reconstruct: all ordered pairs of `nodes`, labelled by `labels`
/// (plus ones on the diagonal when `include_diag`).
pub(crate) struct PairBatch<'a> {
    pub nodes: &'a [usize],
    pub labels: &'a SparseGraph,
    pub include_diag: bool,
}

impl PairBatch<'_> {
    fn local_index(&self, n_total: usize) -> Vec<usize> {
        let mut local = vec![usize::MAX; n_total];
        for (k, &v) in self.nodes.iter().enumerate() {
            local[v] = k;
        }
        local
    }

    /// Total positive label mass over the batch pairs.
    pub fn positive_mass(&self) -> f64 {
        let local = self.local_index(self.labels.n());
        let mut mass = if self.include_diag { self.nodes.len() as f64 } else { 0.0 };
        for &v in self.nodes {
            let (c, w) = self.labels.neighbors(v);
            mass += c.iter().zip(w).filter(|(&u, _)| local[u] != usize::MAX).map(|(_, &x)| x).sum::<f64>();
        }
        mass
    }

    /// Default positive weight `(#pairs − #positives) / #positives`, at least 1.
    pub fn default_w_pos(&self) -> f64 {
        let pairs = (self.nodes.len() * self.nodes.len()) as f64;
        let pos = self.positive_mass();
        if pos == 0.0 {
            1.0
        } else {
            ((pairs - pos) / pos).max(1.0)
        }
    }
}

fn squared_norms(z: ArrayView2<f64>) -> Vec<f64> {
    z.rows().into_iter().map(|r| r.dot(&r)).collect()
}

/// `g[rows] += rowsum(w) ⊙ zr − w·zc` and `g += colsum(w) ⊙ zc − wᵀ·zr`:
/// the gradient of `Σ_ij f(‖z_i − z_j‖²)` given `w_ij = 2 f'(D_ij)`.
fn distance_grad(w: &Array2<f64>, zr: ArrayView2<f64>, zc: ArrayView2<f64>, g: &mut Array2<f64>, r0: usize, cols: usize) {
    let row_sum = w.sum_axis(Axis(1));
    let col_sum = w.sum_axis(Axis(0));
    {
        let mut gr = g.slice_mut(s![r0..r0 + zr.nrows(), ..cols]);
        gr += &(&zr * &row_sum.insert_axis(Axis(1)));
        general_mat_mul(-1.0, w, &zc, 1.0, &mut gr);
    }
    let mut gc = g.slice_mut(s![.., ..cols]);
    gc += &(&zc * &col_sum.insert_axis(Axis(1)));
    general_mat_mul(-1.0, &w.t(), &zr, 1.0, &mut gc);
}

/// Mean weighted cross-entropy over the batch pairs and, if requested, its
/// gradient with respect to the batch rows of `z` (other rows stay zero).
pub(crate) fn reconstruction_pass(
    z: &Array2<f64>,
    batch: &PairBatch,
    cfg: &DecoderConfig,
    w_pos: f64,
    want_grad: bool,
) -> Result<(f64, Option<Array2<f64>>)> {
    let zs = z.select(Axis(0), batch.nodes);
    let s_count = zs.nrows();
    let d = zs.ncols();
    let local = batch.local_index(z.nrows());
    let space = cfg.space_dim(d);
    let sq = if cfg.kind == DecoderKind::Gravity { squared_norms(zs.slice(s![.., ..space])) } else { Vec::new() };
    let mut g_local = Array2::<f64>::zeros((s_count, d));
    let rows_per_block = (BLOCK_ENTRIES / s_count.max(1)).max(1);
    let mut loss = 0.0;
    let mut fixes: Vec<(usize, f64)> = Vec::new();

    for r0 in (0..s_count).step_by(rows_per_block) {
        let r1 = (r0 + rows_per_block).min(s_count);
        let zr = zs.slice(s![r0..r1, ..]);
        // for gravity keep the clamped squared distances to form the gradient weights
        let (mut block, dist) = if cfg.kind == DecoderKind::Gravity {
            let e = space;
            let mut dist = zr.slice(s![.., ..e]).dot(&zs.slice(s![.., ..e]).t());
            let mut logit = Array2::zeros(dist.raw_dim());
            let mass = zs.column(e);
            for (r, (mut drow, mut lrow)) in dist.rows_mut().into_iter().zip(logit.rows_mut()).enumerate() {
                for c in 0..s_count {
                    let dd = if r + r0 == c { 0.0 } else { (sq[r0 + r] + sq[c] - 2.0 * drow[c]).max(0.0) };
                    drow[c] = dd;
                    lrow[c] = mass[c] - cfg.lambda * dd.max(cfg.dist_floor).ln();
                }
            }
            (logit, Some(dist))
        } else {
            (logits_block(zr, zs.view(), cfg, &[], &[], Some(r0)), None)
        };

        let mut block_loss = 0.0;
        for (r, mut row) in block.rows_mut().into_iter().enumerate() {
            let i = batch.nodes[r0 + r];
            fixes.clear();
            let (cols, weights) = batch.labels.neighbors(i);
            let diag = batch.include_diag.then_some((i, 1.0));
            for (j, a) in cols.iter().copied().zip(weights.iter().copied()).chain(diag) {
                let c = local[j];
                if c == usize::MAX {
                    continue;
                }
                let x = row[c];
                let (sp, sig) = softplus_sigmoid(x);
                block_loss += w_pos * a * (sp - x) + (1.0 - a) * sp - sp;
                fixes.push((c, -w_pos * a * (1.0 - sig) + (1.0 - a) * sig));
            }
            // Σ ln(1 + e) is taken as the log of a running product; each
            // factor lies in [1, 2], so 512 of them cannot overflow.
            let mut prod = 1.0;
            for chunk in row.as_slice_mut().expect("row-major block").chunks_mut(512) {
                for v in chunk.iter_mut() {
                    let x = *v;
                    let e = (-x.abs()).exp();
                    let one_e = 1.0 + e;
                    let inv = 1.0 / one_e;
                    prod *= one_e;
                    block_loss += x.max(0.0);
                    *v = if x >= 0.0 { inv } else { e * inv };
                }
                block_loss += prod.ln();
                prod = 1.0;
            }
            for &(c, resid) in &fixes {
                row[c] = resid;
            }
        }
        loss += block_loss;
        if !want_grad {
            continue;
        }
        let resid = block;
        match cfg.kind {
            // symmetric labels give a symmetric residual, so both halves of
            // the gradient are the same product
            DecoderKind::InnerProduct if !batch.labels.is_directed() => {
                general_mat_mul(2.0, &resid, &zs, 1.0, &mut g_local.slice_mut(s![r0..r1, ..]));
            }
            DecoderKind::InnerProduct => {
                general_mat_mul(1.0, &resid, &zs, 1.0, &mut g_local.slice_mut(s![r0..r1, ..]));
                general_mat_mul(1.0, &resid.t(), &zr, 1.0, &mut g_local);
            }
            DecoderKind::SourceTarget => {
                let h = d / 2;
                general_mat_mul(1.0, &resid, &zs.slice(s![.., h..]), 1.0, &mut g_local.slice_mut(s![r0..r1, ..h]));
                general_mat_mul(1.0, &resid.t(), &zr.slice(s![.., ..h]), 1.0, &mut g_local.slice_mut(s![.., h..]));
            }
            DecoderKind::Gravity => {
                let dist = dist.unwrap();
                let mut w = resid.clone();
                ndarray::Zip::from(&mut w).and(&dist).for_each(|w, &dd| {
                    *w = if dd > cfg.dist_floor { -2.0 * cfg.lambda * *w / dd } else { 0.0 };
                });
                distance_grad(&w, zr.slice(s![.., ..space]), zs.slice(s![.., ..space]), &mut g_local, r0, space);
                let mut gm = g_local.column_mut(space);
                gm += &resid.sum_axis(Axis(0));
            }
        }
    }
    let pairs = (s_count * s_count) as f64;
    if !loss.is_finite() {
        return Err(Error::Numeric("reconstruction loss is not finite".into()));
    }
    let grad = want_grad.then(|| scatter_rows(g_local / pairs, batch.nodes, z.nrows()));
    Ok((loss / pairs, grad))
}

fn scatter_rows(local: Array2<f64>, nodes: &[usize], n_total: usize) -> Array2<f64> {
    if nodes.len() == n_total && nodes.iter().enumerate().all(|(k, &v)| k == v) {
        return local;
    }
    let mut g = Array2::zeros((n_total, local.ncols()));
    for (k, &v) in nodes.iter().enumerate() {
        g.row_mut(v).assign(&local.row(k));
    }
    g
}

/// Modularity-inspired regulariser over an undirected graph.
pub(crate) struct ModularityTerm {
    pub graph: SparseGraph,
    pub degrees: Vec<f64>,
    pub two_m: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ModularityTerm {
    pub fn new(g: &SparseGraph, beta: f64, gamma: f64) -> Result<ModularityTerm> {
        let graph = g.to_undirected();
        let degrees: Vec<f64> = (0..graph.n()).map(|i| graph.degree(i)).collect();
        let two_m: f64 = degrees.iter().sum();
        if two_m == 0.0 {
            return invalid("modularity regularisation needs at least one edge");
        }
        Ok(ModularityTerm { graph, degrees, two_m, beta, gamma })
    }

    /// Regulariser restricted to pairs of `nodes`, multiplied by `scale`,
    /// and its gradient with respect to the first `space` columns of `z`.
    pub fn pass(&self, z: &Array2<f64>, nodes: &[usize], space: usize, scale: f64, want_grad: bool) -> (f64, Option<Array2<f64>>) {
        let zs = z.select(Axis(0), nodes);
        let es = zs.slice(s![.., ..space]);
        let s_count = nodes.len();
        let mut local = vec![usize::MAX; z.nrows()];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let sq = squared_norms(es);
        let deg: Array1<f64> = nodes.iter().map(|&v| self.degrees[v]).collect();
        let c = self.beta * scale / self.two_m;
        let mut g_local = Array2::<f64>::zeros((s_count, zs.ncols()));
        let rows_per_block = (BLOCK_ENTRIES / s_count.max(1)).max(1);
        let mut total = 0.0;
        for r0 in (0..s_count).step_by(rows_per_block) {
            let r1 = (r0 + rows_per_block).min(s_count);
            let er = es.slice(s![r0..r1, ..]);
            let mut k = er.dot(&es.t());
            for (r, mut row) in k.rows_mut().into_iter().enumerate() {
                let i = nodes[r0 + r];
                let di = deg[r0 + r] / self.two_m;
                let mut ex = Vec::new();
                let (cols, w) = self.graph.neighbors(i);
                for (&j, &a) in cols.iter().zip(w) {
                    let cl = local[j];
                    if cl != usize::MAX {
                        ex.push((cl, a));
                    }
                }
                for (cl, v) in row.iter_mut().enumerate() {
                    let dd = if cl == r0 + r { 0.0 } else { (sq[r0 + r] + sq[cl] - 2.0 * *v).max(0.0) };
                    *v = (-self.gamma * dd).exp();
                }
                let mut fix = Vec::with_capacity(ex.len());
                for &(cl, a) in &ex {
                    fix.push((cl, a * row[cl]));
                }
                for (cl, v) in row.iter_mut().enumerate() {
                    *v *= -di * deg[cl];
                }
                for (cl, extra) in fix {
                    row[cl] += extra;
                }
                total += row.sum();
            }
            if want_grad {
                let w = k * (2.0 * c * self.gamma);
                distance_grad(&w, er, es, &mut g_local, r0, space);
            }
        }
        let grad = want_grad.then(|| scatter_rows(g_local, nodes, z.nrows()));
        (-c * total, grad)
    }
}
