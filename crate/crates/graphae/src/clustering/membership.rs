use std::collections::BTreeSet;

use rand::seq::index::sample;

use super::Partition;
use crate::error::{invalid, Result};
use crate::graph::{Operator, SparseGraph};

/// Community-based prior graphs built from a partition.
#[derive(Debug, Clone)]
pub struct MembershipOperators {
    /// Every pair of distinct nodes sharing a community.
    pub complete: SparseGraph,
    /// Each node linked to `s` random members of its community, symmetrised.
    pub sparse: SparseGraph,
}

/// `M Mᵀ − I`: unit weight between distinct members of the same community.
pub fn community_matrix(p: &Partition) -> Result<SparseGraph> {
    let mut edges = Vec::new();
    for members in p.members() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                edges.push((i, j, 1.0));
            }
        }
    }
    SparseGraph::from_edges(p.n(), &edges, false)
}

/// Builds both prior graphs. In the sparse one every node picks
/// `min(s, size − 1)` distinct partners uniformly inside its community.
pub fn membership_operators(p: &Partition, s: usize, seed: u64) -> Result<MembershipOperators> {
    if s == 0 {
        return invalid("s must be at least 1");
    }
    let mut rng = crate::seeded_rng(seed, 0x6d_65_6d);
    let mut pairs = BTreeSet::new();
    for members in p.members() {
        let others = members.len() - 1;
        if others == 0 {
            continue;
        }
        for (a, &i) in members.iter().enumerate() {
            for idx in sample(&mut rng, others, s.min(others)) {
                let j = members[if idx >= a { idx + 1 } else { idx }];
                pairs.insert((i.min(j), i.max(j)));
            }
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs.into_iter().map(|(i, j)| (i, j, 1.0)).collect();
    Ok(MembershipOperators { complete: community_matrix(p)?, sparse: SparseGraph::from_edges(p.n(), &edges, false)? })
}

/// Largest `‖F v_k − v_k‖_∞` over community indicator vectors `v_k`.
pub fn indicator_eigencheck(op: &Operator, p: &Partition) -> Result<f64> {
    let n = p.n();
    let mut ind = ndarray::Array2::<f64>::zeros((n, p.k()));
    for (i, &c) in p.assignment().iter().enumerate() {
        ind[[i, c]] = 1.0;
    }
    let out = op.apply(ind.view())?;
    Ok((&out - &ind).iter().fold(0.0, |m, v| m.max(v.abs())))
}
