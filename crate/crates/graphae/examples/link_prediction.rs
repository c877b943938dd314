//! Featureless link prediction on Cora with a GCN autoencoder and its
//! variational twin.
//!
//! `cargo run --release --example link_prediction [-- <edges.txt> <epochs>]`

use std::io::BufReader;

use graphae::experiment::{Experiment, Task};
use graphae::graph::load_graph;
use graphae::model::{ModelSpec, TrainConfig};
use graphae::Features;

fn main() -> graphae::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/cora/edges.txt").into());
    let epochs = args.next().and_then(|e| e.parse().ok()).unwrap_or(200);

    let g = load_graph(BufReader::new(graphae::io::open(path.as_ref())?), false)?;
    println!("{} nodes, {} edges", g.n(), g.m());
    let x = Features::Identity(g.n());

    for variational in [false, true] {
        let exp = Experiment::new(ModelSpec::gcn(16, variational), TrainConfig { epochs, ..Default::default() }, Task::LinkPrediction);
        let out = exp.run(&g, &x, None, 0)?;
        println!(
            "{:<4} test AUC {:.4}  AP {:.4}  (val AUC {:.4}, {:.1}s)",
            if variational { "VGAE" } else { "GAE" },
            out.metrics["auc"],
            out.metrics["ap"],
            out.metrics["val_auc"],
            out.train_seconds
        );
    }
    Ok(())
}
