//! Train on a graph's k-core only, then spread the embeddings outwards.
//!
//! `cargo run --release --example kcore_training [-- <edges.txt> <k>]`

use std::io::BufReader;
use std::time::Instant;

use graphae::degeneracy::{core_decomposition, extract_k_core, first_wave, propagation_error_curve};
use graphae::eval::{auc, split_edges, SplitTask};
use graphae::graph::load_graph;
use graphae::model::{train, ModelSpec, Scaling, TrainConfig};
use graphae::Features;

fn main() -> graphae::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/cora/edges.txt").into());
    let k = args.next().and_then(|e| e.parse().ok()).unwrap_or(3);
    let g = load_graph(BufReader::new(graphae::io::open(path.as_ref())?), false)?;

    let cores = core_decomposition(&g);
    println!("degeneracy {}", cores.degeneracy);
    for level in 1..=cores.degeneracy {
        let (core, _) = extract_k_core(&g, level);
        println!("  {level}-core: {:>5} nodes {:>6} edges", core.n(), core.m());
    }

    let split = split_edges(&g, 0.05, 0.10, SplitTask::General, 0)?;
    let (pairs, labels) = split.test_set();
    let x = Features::Identity(g.n());
    for scaling in [Scaling::Full, Scaling::KCore { k, iterations: 10 }] {
        let cfg = TrainConfig { scaling: scaling.clone(), ..Default::default() };
        let start = Instant::now();
        let model = train(&split.train, &x, &ModelSpec::gcn(16, false), None, &cfg)?;
        let secs = start.elapsed().as_secs_f64();
        let trained_on = model.core_nodes.as_ref().map_or(g.n(), Vec::len);
        println!("{scaling:?}: trained on {trained_on} nodes, test AUC {:.4}, {secs:.1}s", auc(&model.scores(&pairs)?, &labels)?);

        if let Some(core) = &model.core_nodes {
            let z_core = model.embedding.select(ndarray::Axis(0), core);
            let wave = first_wave(&split.train, core).len();
            let start = ndarray::Array2::<f64>::zeros((wave, z_core.ncols()));
            let curve = propagation_error_curve(&split.train, core, z_core.view(), start.view(), 10)?;
            let curve: Vec<String> = curve.iter().map(|e| format!("{e:.2e}")).collect();
            println!("  first wave ({wave} nodes), distance to the fixed point by sweep: {}", curve.join(" "));
        }
    }
    Ok(())
}
