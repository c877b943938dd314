//! Subgraph-sampled decoding: each epoch reconstructs only the pairs among
//! a few hundred nodes drawn by importance.
//!
//! `cargo run --release --example fastgae_sampling [-- <edges.txt>]`

use std::io::BufReader;
use std::time::Instant;

use graphae::eval::{auc, split_edges, SplitTask};
use graphae::graph::load_graph;
use graphae::model::{train, ModelSpec, Scaling, TrainConfig};
use graphae::sampling::{importance_scores, recommended_subgraph_size, sample_nodes, sampling_distribution, ImportanceMethod, SamplingConfig};
use graphae::{seeded_rng, Features};

fn main() -> graphae::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/cora/edges.txt").into());
    let g = load_graph(BufReader::new(graphae::io::open(path.as_ref())?), false)?;
    let size = recommended_subgraph_size(g.n(), Default::default())?;
    println!("{} nodes; recommended subgraph size {size}", g.n());

    let mut rng = seeded_rng(0, 0);
    for alpha in [0.0, 1.0, 2.0] {
        let p = sampling_distribution(&importance_scores(&g, ImportanceMethod::Degree), alpha)?;
        let drawn = sample_nodes(&p, size, false, &mut rng)?;
        let mean_degree = drawn.iter().map(|&v| g.degree(v)).sum::<f64>() / size as f64;
        println!("  alpha {alpha}: mean degree of sampled nodes {mean_degree:.2}");
    }

    let split = split_edges(&g, 0.05, 0.10, SplitTask::General, 0)?;
    let (pairs, labels) = split.test_set();
    let x = Features::Identity(g.n());
    for scaling in [Scaling::Full, Scaling::Sampled(SamplingConfig::degree(size))] {
        let cfg = TrainConfig { scaling: scaling.clone(), ..Default::default() };
        let start = Instant::now();
        let model = train(&split.train, &x, &ModelSpec::gcn(16, false), None, &cfg)?;
        let secs = start.elapsed().as_secs_f64();
        let name = if matches!(scaling, Scaling::Full) { "full" } else { "sampled" };
        println!("{name:<8} test AUC {:.4}, {:.1} ms per epoch", auc(&model.scores(&pairs)?, &labels)?, 1000.0 * secs / cfg.epochs as f64);
    }
    Ok(())
}
