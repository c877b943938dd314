//! Community detection: modularity, Louvain, community-membership operators
//! and k-means on embeddings.

mod kmeans;
mod louvain;
mod membership;

use std::io::{BufRead, Write};

pub use kmeans::{kmeans, KMeans, KMeansFit};
pub use louvain::{louvain, Louvain};
pub use membership::{community_matrix, indicator_eigencheck, membership_operators, MembershipOperators};

use crate::error::{invalid, Error, Result};
use crate::graph::SparseGraph;

/// Assignment of every node to one of `k` communities with dense ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabels arbitrary labels to `0..k` in order of first appearance.
    pub fn from_labels<T: Eq + std::hash::Hash + Clone>(labels: &[T]) -> Partition {
        let mut ids = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Partition { assignment, k: ids.len() }
    }

    pub fn singletons(n: usize) -> Partition {
        Partition { assignment: (0..n).collect(), k: n }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Members of every community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &c in &self.assignment {
            out[c] += 1;
        }
        out
    }

    /// Restriction to `nodes` (relabelled densely).
    pub fn restrict(&self, nodes: &[usize]) -> Partition {
        let labels: Vec<usize> = nodes.iter().map(|&v| self.assignment[v]).collect();
        Partition::from_labels(&labels)
    }

    /// `node<TAB>community` lines.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, c) in self.assignment.iter().enumerate() {
            writeln!(w, "{i}\t{c}")?;
        }
        Ok(())
    }

    /// Reads `node<TAB>label` lines; every node in `0..n` must be listed once.
    pub fn read_tsv<R: BufRead>(r: R) -> Result<Partition> {
        let (nodes, labels) = read_labels(r)?;
        let n = nodes.len();
        let mut by_node = vec![None; n];
        for (&v, l) in nodes.iter().zip(labels) {
            if v >= n || by_node[v].is_some() {
                return invalid(format!("node {v} is repeated or outside 0..{n}"));
            }
            by_node[v] = Some(l);
        }
        let labels: Vec<String> = by_node.into_iter().map(|l| l.unwrap()).collect();
        Ok(Partition::from_labels(&labels))
    }
}

/// Reads `node<TAB>label` lines, keeping only listed nodes (e.g. ground-truth
/// classes available for a subset of nodes).
pub fn read_labels<R: BufRead>(r: R) -> Result<(Vec<usize>, Vec<String>)> {
    let mut nodes = Vec::new();
    let mut labels = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let (Some(a), Some(b)) = (it.next(), it.next()) else {
            return Err(Error::Parse { line: k + 1, msg: "expected 'node label'".into() });
        };
        nodes.push(a.parse().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad node id '{a}'") })?);
        labels.push(b.to_string());
    }
    Ok((nodes, labels))
}

/// Newman modularity `(1/2m) Σ_ij [A_ij − d_i d_j / 2m] δ(c_i, c_j)`.
pub fn modularity(g: &SparseGraph, p: &Partition) -> Result<f64> {
    let und;
    let g = if g.is_directed() {
        und = g.to_undirected();
        &und
    } else {
        g
    };
    if p.n() != g.n() {
        return Err(Error::Dimension(format!("partition has {} nodes, graph has {}", p.n(), g.n())));
    }
    if g.m() == 0 {
        return invalid("modularity is undefined without edges");
    }
    let mut inside = vec![0.0; p.k()];
    let mut total = vec![0.0; p.k()];
    let mut two_m = 0.0;
    for (i, j, w) in g.entries() {
        let c = p.community(i);
        total[c] += w;
        two_m += w;
        if c == p.community(j) {
            inside[c] += w;
        }
    }
    Ok(inside.iter().zip(&total).map(|(a, t)| a / two_m - (t / two_m).powi(2)).sum())
}
