//! Node clustering on featureless Cora: Louvain on the graph itself, then
//! k-means on embeddings from a standard and a modularity-aware linear
//! autoencoder.
//!
//! `cargo run --release --example community_detection [-- <epochs>]`

use std::io::BufReader;

use graphae::clustering::{louvain, modularity};
use graphae::eval::{ami, ari};
use graphae::experiment::{Experiment, GroundTruth, PriorSpec, Task};
use graphae::graph::load_graph;
use graphae::model::{ModelSpec, ModularityReg, TrainConfig};
use graphae::Features;

fn main() -> graphae::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|e| e.parse().ok()).unwrap_or(300);
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/cora");
    let g = load_graph(BufReader::new(graphae::io::open(format!("{dir}/edges.txt").as_ref())?), false)?;
    let truth = GroundTruth::read(graphae::io::open(format!("{dir}/labels.tsv").as_ref())?)?;

    let levels = louvain(&g, None)?;
    let top = levels.last().unwrap();
    let found = top.restrict(&truth.nodes);
    println!(
        "Louvain: {} communities, Q {:.3}, AMI {:.3}, ARI {:.3}",
        top.k(),
        modularity(&g, top)?,
        ami(&truth.partition, &found)?,
        ari(&truth.partition, &found)?
    );

    let cfg = TrainConfig { epochs, ..Default::default() };
    let standard = Experiment::new(ModelSpec::linear(16, false), cfg.clone(), Task::CommunityDetection);
    let aware = Experiment {
        prior: Some(PriorSpec { lambda: 0.25, s: 1 }),
        ..Experiment::new(
            ModelSpec::linear(16, false),
            TrainConfig { modularity: Some(ModularityReg { beta: 1.0, gamma: 0.25 }), ..cfg },
            Task::CommunityDetection,
        )
    };
    for (name, exp) in [("standard", standard), ("modularity-aware", aware)] {
        let m = exp.run(&g, &Features::Identity(g.n()), Some(&truth), 0)?.metrics;
        println!("{name:<17} AMI {:.3}  ARI {:.3}  Q {:.3}", m["ami"], m["ari"], m["modularity"]);
    }
    Ok(())
}
