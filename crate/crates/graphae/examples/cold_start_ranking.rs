//! Recommend neighbours for nodes that joined after training.
//!
//! A planted-partition graph with noisy community features is split into
//! old and new nodes. The encoder trained on the old part embeds the new
//! nodes from their features and links, and their top-ranked candidates
//! should mostly share their community.

use graphae::graph::FeatureMatrix;
use graphae::model::{infer_new_nodes, rank_neighbors, train, ModelSpec, TrainConfig};
use graphae::{seeded_rng, Features, SparseGraph};
use ndarray::Array2;
use rand::Rng;

const BLOCKS: usize = 4;
const PER_BLOCK: usize = 50;

fn main() -> graphae::Result<()> {
    let n = BLOCKS * PER_BLOCK;
    let block = |v: usize| v % BLOCKS;
    let mut rng = seeded_rng(1, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block(i) == block(j) { 0.15 } else { 0.005 };
            if rng.random_bool(p) {
                edges.push((i, j, 1.0));
            }
        }
    }
    let x = Array2::from_shape_fn((n, BLOCKS), |(v, f)| if block(v) == f { 1.0 } else { 0.0 } + rng.random_range(-0.3..0.3));
    let x = FeatureMatrix::new(x)?;

    let old = 180;
    let g = SparseGraph::from_edges(n, &edges, false)?;
    let old_nodes: Vec<usize> = (0..old).collect();
    let g_old = g.induced_subgraph(&old_nodes);
    let x_old = match Features::Dense(x.clone()).select(&old_nodes) {
        Features::Dense(m) => m,
        Features::Identity(_) => unreachable!(),
    };

    let model = train(&g_old, &Features::Dense(x_old), &ModelSpec::gcn(8, false), None, &TrainConfig::default())?;
    let everyone: Vec<usize> = (0..n).collect();
    let z = infer_new_nodes(&model, &g, &x, &everyone)?;

    let new_nodes: Vec<usize> = (old..n).collect();
    let k = 10;
    let ranked = rank_neighbors(z.view(), &model.spec.decoder, &new_nodes, k)?;
    let mut same = 0;
    for (&v, list) in new_nodes.iter().zip(&ranked) {
        same += list.iter().filter(|&&(u, _)| block(u) == block(v)).count();
    }
    println!("{} new nodes; {:.1}% of their top-{k} candidates share their community", new_nodes.len(), 100.0 * same as f64 / (k * new_nodes.len()) as f64);
    let top: Vec<String> = ranked[0].iter().take(5).map(|(u, p)| format!("{u}:{p:.2}")).collect();
    println!("node {} (community {}): {}", old, block(old), top.join(" "));
    Ok(())
}
