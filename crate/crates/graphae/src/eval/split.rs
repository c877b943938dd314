use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::graph::SparseGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTask {
    /// Random edges masked, random unconnected pairs as negatives.
    General,
    /// Unidirectional edges masked, their reversals as negatives.
    BiasedNegative,
    /// One direction of every reciprocal pair masked; negatives are
    /// reversals of unidirectional edges.
    Bidirectionality,
}

impl SplitTask {
    pub fn parse(s: &str) -> Result<SplitTask> {
        match s {
            "general" => Ok(SplitTask::General),
            "biased_negative" => Ok(SplitTask::BiasedNegative),
            "bidirectionality" => Ok(SplitTask::Bidirectionality),
            _ => invalid(format!("unknown split task '{s}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EdgeSplit {
    pub task: SplitTask,
    pub train: SparseGraph,
    pub val_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
}

fn labelled(pos: &[(usize, usize)], neg: &[(usize, usize)]) -> (Vec<(usize, usize)>, Vec<bool>) {
    let pairs = pos.iter().chain(neg).copied().collect();
    let labels = std::iter::repeat_n(true, pos.len()).chain(std::iter::repeat_n(false, neg.len())).collect();
    (pairs, labels)
}

impl EdgeSplit {
    /// Test pairs with their labels, positives first.
    pub fn test_set(&self) -> (Vec<(usize, usize)>, Vec<bool>) {
        labelled(&self.test_pos, &self.test_neg)
    }

    pub fn val_set(&self) -> (Vec<(usize, usize)>, Vec<bool>) {
        labelled(&self.val_pos, &self.val_neg)
    }
}

/// Masks edges for one of the three link prediction tasks. Negatives of
/// the general task exclude both directions of every edge.
pub fn split_edges(g: &SparseGraph, val_frac: f64, test_frac: f64, task: SplitTask, seed: u64) -> Result<EdgeSplit> {
    split_edges_with(g, val_frac, test_frac, task, seed, false)
}

/// As [`split_edges`]; `include_reversals` lets general-task negatives on
/// directed graphs be reversals of existing edges.
pub fn split_edges_with(
    g: &SparseGraph,
    val_frac: f64,
    test_frac: f64,
    task: SplitTask,
    seed: u64,
    include_reversals: bool,
) -> Result<EdgeSplit> {
    if !(val_frac >= 0.0 && test_frac > 0.0 && val_frac + test_frac < 1.0) {
        return invalid(format!("need val >= 0, test > 0 and val + test < 1 (got {val_frac}, {test_frac})"));
    }
    let mut rng = crate::seeded_rng(seed, 4);
    let m = g.m();
    let n_val = (val_frac * m as f64).round() as usize;
    let n_test = (test_frac * m as f64).round() as usize;
    let directed_only = |what: &str| invalid(format!("{what} needs a directed graph"));
    let unidirectional = || -> Vec<(usize, usize)> {
        g.edges().into_iter().filter(|&(i, j, _)| !g.has_edge(j, i)).map(|(i, j, _)| (i, j)).collect()
    };
    match task {
        SplitTask::General => {
            let mut pool: Vec<(usize, usize)> = g.edges().into_iter().map(|(i, j, _)| (i, j)).collect();
            if n_test == 0 || n_val + n_test >= pool.len() {
                return invalid(format!("{} edges are too few to mask {n_val} + {n_test}", pool.len()));
            }
            pool.shuffle(&mut rng);
            let test_pos = pool[..n_test].to_vec();
            let val_pos = pool[n_test..n_test + n_val].to_vec();
            let mut taken = HashSet::new();
            let test_neg = negatives(g, n_test, include_reversals, &mut taken, &mut rng)?;
            let val_neg = negatives(g, n_val, include_reversals, &mut taken, &mut rng)?;
            let masked: Vec<(usize, usize)> = test_pos.iter().chain(&val_pos).copied().collect();
            Ok(EdgeSplit { task, train: g.without_edges(&masked), val_pos, val_neg, test_pos, test_neg })
        }
        SplitTask::BiasedNegative => {
            if !g.is_directed() {
                return directed_only("the biased negative task");
            }
            let mut pool = unidirectional();
            if n_test == 0 || n_val + n_test > pool.len() {
                return invalid(format!("{} unidirectional edges are too few to mask {n_val} + {n_test}", pool.len()));
            }
            pool.shuffle(&mut rng);
            let test_pos = pool[..n_test].to_vec();
            let val_pos = pool[n_test..n_test + n_val].to_vec();
            let rev = |v: &[(usize, usize)]| v.iter().map(|&(i, j)| (j, i)).collect::<Vec<_>>();
            let masked: Vec<(usize, usize)> = test_pos.iter().chain(&val_pos).copied().collect();
            Ok(EdgeSplit { task, train: g.without_edges(&masked), val_neg: rev(&val_pos), test_neg: rev(&test_pos), val_pos, test_pos })
        }
        SplitTask::Bidirectionality => {
            if !g.is_directed() {
                return directed_only("the bidirectionality task");
            }
            let mut removed = Vec::new();
            for (i, j, _) in g.edges() {
                if i < j && g.has_edge(j, i) {
                    removed.push(if rng.random_bool(0.5) { (i, j) } else { (j, i) });
                }
            }
            if removed.is_empty() {
                return invalid("the bidirectionality task needs at least one reciprocal edge");
            }
            let mut uni = unidirectional();
            if uni.len() < removed.len() {
                return invalid(format!("{} unidirectional edges cannot balance {} reciprocal ones", uni.len(), removed.len()));
            }
            uni.shuffle(&mut rng);
            let test_neg = uni[..removed.len()].iter().map(|&(i, j)| (j, i)).collect();
            Ok(EdgeSplit { task, train: g.without_edges(&removed), val_pos: Vec::new(), val_neg: Vec::new(), test_pos: removed, test_neg })
        }
    }
}

/// Uniform unconnected pairs, distinct across calls sharing `taken`.
fn negatives<R: Rng>(g: &SparseGraph, count: usize, include_reversals: bool, taken: &mut HashSet<(usize, usize)>, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    let n = g.n();
    let ordered = (n * n.saturating_sub(1)) as f64;
    let blocked = 2.0 * g.m() as f64 + taken.len() as f64 * if g.is_directed() { 1.0 } else { 2.0 };
    let needed = count as f64 * if g.is_directed() { 1.0 } else { 2.0 };
    if ordered - blocked < 2.0 * needed {
        return invalid(format!("graph is too dense to draw {count} negative pairs"));
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || g.has_edge(i, j) || (!include_reversals && g.has_edge(j, i)) {
            continue;
        }
        let key = if g.is_directed() { (i, j) } else { (i.min(j), i.max(j)) };
        if taken.insert(key) {
            out.push((i, j));
        }
    }
    Ok(out)
}
