//! End-to-end evaluation runs: split, train, score.
//!
//! An [`Experiment`] bundles a model, its training configuration and an
//! evaluation task. Each call to [`Experiment::run`] is one seeded run; the
//! seed drives the edge split, weight initialisation, noise, sampling, the
//! community prior and k-means alike.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::time::Instant;

use ndarray::{s, Array2};

use crate::clustering::{kmeans, louvain, membership_operators, modularity, read_labels, Partition};
use crate::error::{invalid, Result};
use crate::eval::{ami, ari, auc, average_precision, ranking_metrics, split_edges_with, EdgeSplit, SplitTask};
use crate::graph::{Features, SparseGraph};
use crate::model::{train, CommunityPrior, DecoderKind, ModelSpec, TrainConfig, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Random edges masked; AUC and AP on the test pairs.
    LinkPrediction,
    /// Training on the whole graph; k-means on the embedding against
    /// ground-truth classes, plus the modularity of the clustering.
    CommunityDetection,
    /// Link prediction and community detection from the same masked-graph model.
    Joint,
    /// Masked unidirectional edges against their reversals.
    DirectedTask2,
    /// Recovering the masked direction of reciprocal edges.
    DirectedTask3,
    /// Top-K recommendation of masked neighbours.
    Ranking,
}

impl Task {
    pub const NAMES: [&'static str; 6] =
        ["link_prediction", "community_detection", "joint", "directed_task2", "directed_task3", "ranking"];

    pub fn parse(s: &str) -> Result<Task> {
        Ok(match s {
            "link_prediction" => Task::LinkPrediction,
            "community_detection" => Task::CommunityDetection,
            "joint" => Task::Joint,
            "directed_task2" => Task::DirectedTask2,
            "directed_task3" => Task::DirectedTask3,
            "ranking" => Task::Ranking,
            _ => return invalid(format!("unknown task '{s}'")),
        })
    }

    pub fn name(self) -> &'static str {
        Task::NAMES[self as usize]
    }

    fn split_task(self) -> Option<SplitTask> {
        match self {
            Task::LinkPrediction | Task::Joint | Task::Ranking => Some(SplitTask::General),
            Task::DirectedTask2 => Some(SplitTask::BiasedNegative),
            Task::DirectedTask3 => Some(SplitTask::Bidirectionality),
            Task::CommunityDetection => None,
        }
    }
}

/// Community prior built from a Louvain partition of the training graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub lambda: f64,
    /// Same-community partners per node in the sparsified membership graph.
    pub s: usize,
}

/// Class labels for some or all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub nodes: Vec<usize>,
    pub partition: Partition,
}

impl GroundTruth {
    pub fn read<R: BufRead>(r: R) -> Result<GroundTruth> {
        let (nodes, labels) = read_labels(r)?;
        Ok(GroundTruth { nodes, partition: Partition::from_labels(&labels) })
    }

    pub fn classes(&self) -> usize {
        self.partition.k()
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ModelSpec,
    pub train: TrainConfig,
    pub prior: Option<PriorSpec>,
    pub task: Task,
    pub val_frac: f64,
    pub test_frac: f64,
    /// Allow reversed edges among general-task negatives on directed graphs.
    pub include_reversals: bool,
    /// k-means cluster count; `None` uses the number of ground-truth classes.
    pub clusters: Option<usize>,
    pub top_k: usize,
}

impl Experiment {
    pub fn new(spec: ModelSpec, train: TrainConfig, task: Task) -> Experiment {
        Experiment { spec, train, prior: None, task, val_frac: 0.05, test_frac: 0.10, include_reversals: false, clusters: None, top_k: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub train_seconds: f64,
    pub model: TrainedModel,
}

/// Embedding columns used for clustering: the gravity mass is dropped.
fn clustering_view(model: &TrainedModel) -> Array2<f64> {
    match model.spec.decoder.kind {
        DecoderKind::Gravity => model.embedding.slice(s![.., ..model.spec.dim]).to_owned(),
        _ => model.embedding.clone(),
    }
}

impl Experiment {
    /// Trains on `g` (or its masked version) with a seeded prior.
    pub fn fit(&self, g: &SparseGraph, x: &Features, seed: u64) -> Result<TrainedModel> {
        let prior = match self.prior {
            Some(p) if p.lambda > 0.0 => {
                let levels = louvain(g, None)?;
                let ops = membership_operators(levels.last().unwrap(), p.s, seed)?;
                Some(CommunityPrior { graph: ops.sparse, lambda: p.lambda })
            }
            _ => None,
        };
        let cfg = TrainConfig { seed, ..self.train.clone() };
        train(g, x, &self.spec, prior.as_ref(), &cfg)
    }

    pub fn run(&self, g: &SparseGraph, x: &Features, truth: Option<&GroundTruth>, seed: u64) -> Result<RunOutcome> {
        let mut metrics = BTreeMap::new();
        let split = match self.task.split_task() {
            Some(t) => Some(split_edges_with(g, self.val_frac, self.test_frac, t, seed, self.include_reversals)?),
            None => None,
        };
        let train_graph = split.as_ref().map_or(g, |s| &s.train);
        let start = Instant::now();
        let model = self.fit(train_graph, x, seed)?;
        let train_seconds = start.elapsed().as_secs_f64();

        if let Some(split) = &split {
            if self.task == Task::Ranking {
                self.ranking(&model, split, &mut metrics)?;
            } else {
                let (pairs, labels) = split.test_set();
                let scores = model.scores(&pairs)?;
                metrics.insert("auc".into(), auc(&scores, &labels)?);
                metrics.insert("ap".into(), average_precision(&scores, &labels)?);
                if !split.val_pos.is_empty() {
                    let (pairs, labels) = split.val_set();
                    let scores = model.scores(&pairs)?;
                    metrics.insert("val_auc".into(), auc(&scores, &labels)?);
                    metrics.insert("val_ap".into(), average_precision(&scores, &labels)?);
                }
            }
        }
        if matches!(self.task, Task::CommunityDetection | Task::Joint) {
            let k = match (self.clusters, truth) {
                (Some(k), _) => k,
                (None, Some(t)) => t.classes(),
                (None, None) => return invalid("community detection needs ground-truth labels or an explicit cluster count"),
            };
            let found = kmeans(clustering_view(&model).view(), k, seed)?;
            metrics.insert("modularity".into(), modularity(g, &found)?);
            if let Some(t) = truth {
                let restricted = found.restrict(&t.nodes);
                metrics.insert("ami".into(), ami(&t.partition, &restricted)?);
                metrics.insert("ari".into(), ari(&t.partition, &restricted)?);
            }
        }
        Ok(RunOutcome { seed, metrics, train_seconds, model })
    }

    fn ranking(&self, model: &TrainedModel, split: &EdgeSplit, metrics: &mut BTreeMap<String, f64>) -> Result<()> {
        let mut truth: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for &(i, j) in &split.test_pos {
            truth.entry(i).or_default().push((j, 1.0));
            if !split.train.is_directed() {
                truth.entry(j).or_default().push((i, 1.0));
            }
        }
        let queries: Vec<usize> = truth.keys().copied().collect();
        let max_deg = queries.iter().map(|&q| split.train.neighbors(q).0.len()).max().unwrap_or(0);
        let ranked = model.rank(&queries, self.top_k + max_deg)?;
        let (mut recall, mut map, mut ndcg) = (0.0, 0.0, 0.0);
        for (q, list) in queries.iter().zip(ranked) {
            // Known training neighbours are not recommendations.
            let predicted: Vec<usize> = list.into_iter().map(|(v, _)| v).filter(|&v| !split.train.has_edge(*q, v)).collect();
            let m = ranking_metrics(&predicted, &truth[q], self.top_k)?;
            recall += m.recall;
            map += m.map;
            ndcg += m.ndcg;
        }
        let nq = queries.len().max(1) as f64;
        metrics.insert("recall".into(), recall / nq);
        metrics.insert("map".into(), map / nq);
        metrics.insert("ndcg".into(), ndcg / nq);
        Ok(())
    }
}
