use ndarray::{Array2, ArrayView2, Axis};

use super::decoder::{pair_logit, sigmoid, DecoderConfig};
use super::encoder::forward_head;
use super::train::{build_propagation, TrainedModel};
use crate::error::{invalid, Result};
use crate::graph::{FeatureMatrix, Features, SparseGraph};

/// Embeds nodes unseen during training with one forward pass of the trained
/// encoder over the augmented graph.
///
/// The operator is rebuilt from `g_augmented`, so existing nodes adjacent
/// to new ones also see their normalisation change. Only models trained on
/// real features can do this: with identity features every weight row
/// belongs to a specific training node.
pub fn infer_new_nodes(
    model: &TrainedModel,
    g_augmented: &SparseGraph,
    x_augmented: &FeatureMatrix,
    new_nodes: &[usize],
) -> Result<Array2<f64>> {
    if model.featureless {
        return invalid("model was trained without node features; identity features make the encoder transductive");
    }
    if x_augmented.n() != g_augmented.n() {
        return invalid(format!("{} feature rows for {} nodes", x_augmented.n(), g_augmented.n()));
    }
    if let Some(&v) = new_nodes.iter().find(|&&v| v >= g_augmented.n()) {
        return invalid(format!("node {v} is not in the augmented graph"));
    }
    let prop = build_propagation(g_augmented, &model.spec, None)?;
    let x = Features::Dense(x_augmented.clone());
    let (z, _) = forward_head(&model.weights.mean, &prop, &x)?;
    Ok(z.select(Axis(0), new_nodes))
}

/// Top-`k` targets `j ≠ i` for every query `i`, by decreasing edge score;
/// equal scores go to the lower node id.
pub fn rank_neighbors(z: ArrayView2<f64>, cfg: &DecoderConfig, queries: &[usize], k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    cfg.validate(z.ncols())?;
    let n = z.nrows();
    if k > n.saturating_sub(1) {
        return invalid(format!("cannot rank {k} candidates among {} other nodes", n.saturating_sub(1)));
    }
    let mut out = Vec::with_capacity(queries.len());
    for &i in queries {
        if i >= n {
            return invalid(format!("query node {i} out of range"));
        }
        let mut cand: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, pair_logit(z, i, j, cfg))).collect();
        let by_score = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if k < cand.len() {
            cand.select_nth_unstable_by(k, by_score);
            cand.truncate(k);
        }
        cand.sort_by(by_score);
        out.push(cand.into_iter().map(|(j, x)| (j, sigmoid(x))).collect());
    }
    Ok(out)
}

impl TrainedModel {
    pub fn rank(&self, queries: &[usize], k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
        rank_neighbors(self.embedding.view(), &self.spec.decoder, queries, k)
    }
}
