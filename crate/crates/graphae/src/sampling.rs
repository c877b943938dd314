//! Node-importance sampling of subgraphs, used to approximate the
//! reconstruction loss on large graphs by decoding a small random subgraph
//! at every training step.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;

use crate::degeneracy::core_decomposition;
use crate::error::{invalid, Result};
use crate::graph::SparseGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportanceMethod {
    Uniform,
    Degree,
    Core,
}

impl ImportanceMethod {
    pub fn parse(s: &str) -> Result<ImportanceMethod> {
        match s {
            "uniform" => Ok(ImportanceMethod::Uniform),
            "degree" => Ok(ImportanceMethod::Degree),
            "core" => Ok(ImportanceMethod::Core),
            _ => invalid(format!("unknown sampling method '{s}' (expected uniform, degree or core)")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ImportanceMethod::Uniform => "uniform",
            ImportanceMethod::Degree => "degree",
            ImportanceMethod::Core => "core",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub method: ImportanceMethod,
    /// Sharpening exponent applied to the importance scores.
    pub alpha: f64,
    pub size: usize,
    pub with_replacement: bool,
}

impl SamplingConfig {
    pub fn degree(size: usize) -> SamplingConfig {
        SamplingConfig { method: ImportanceMethod::Degree, alpha: 1.0, size, with_replacement: false }
    }
}

/// Parameters of the recommended subgraph size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    /// Tolerated deviation of the approximate loss.
    pub deviation: f64,
    /// Confidence level, in (0, 1).
    pub confidence: f64,
    /// Cap on reconstructed probabilities, in (0, 1).
    pub prob_cap: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams { deviation: 1.0, confidence: 0.1, prob_cap: 0.001 }
    }
}

/// Per-node importance: all ones, weighted degree, or core number.
pub fn importance_scores(g: &SparseGraph, method: ImportanceMethod) -> Vec<f64> {
    match method {
        ImportanceMethod::Uniform => vec![1.0; g.n()],
        ImportanceMethod::Degree => (0..g.n()).map(|i| g.degree(i)).collect(),
        ImportanceMethod::Core => core_decomposition(g).core_number.into_iter().map(|c| c as f64).collect(),
    }
}

/// `p_i = f_i^α / Σ_j f_j^α` with `0^0 = 1`.
pub fn sampling_distribution(scores: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if alpha < 0.0 {
        return invalid("sharpening exponent must be non-negative");
    }
    if scores.iter().any(|&f| f < 0.0 || !f.is_finite()) {
        return invalid("importance scores must be finite and non-negative");
    }
    if !scores.iter().any(|&f| f > 0.0) {
        return invalid("all importance scores are zero");
    }
    let w: Vec<f64> = scores.iter().map(|&f| if alpha == 0.0 { 1.0 } else { f.powf(alpha) }).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Draws a node subset according to `p` and returns it with its induced subgraph.
///
/// Without replacement the law is that of `size` successive draws, each
/// renormalised over the nodes not drawn yet; nodes are returned in draw
/// order. This is realised with exponential keys `E_i / p_i` (the `size`
/// smallest keys come out in the successive-draw order), so a draw costs
/// O(n log n) rather than O(n · size). Only positive-probability nodes can be
/// drawn. With replacement the distinct nodes of `size` independent draws
/// are returned in first-draw order.
pub fn sample_nodes<R: Rng>(p: &[f64], size: usize, with_replacement: bool, rng: &mut R) -> Result<Vec<usize>> {
    let n = p.len();
    if with_replacement {
        let dist = WeightedIndex::new(p).map_err(|e| crate::Error::Invalid(format!("bad sampling distribution: {e}")))?;
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for _ in 0..size {
            let v = dist.sample(rng);
            if !seen[v] {
                seen[v] = true;
                out.push(v);
            }
        }
        return Ok(out);
    }
    if size > n {
        return invalid(format!("cannot draw {size} distinct nodes from {n}"));
    }
    let positive = p.iter().filter(|&&x| x > 0.0).count();
    if size > positive {
        return invalid(format!("only {positive} nodes have positive probability, {size} requested"));
    }
    let mut keys: Vec<(f64, usize)> = p
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(i, &x)| {
            let u: f64 = rng.random();
            (-(1.0 - u).ln() / x, i)
        })
        .collect();
    if size < keys.len() {
        keys.select_nth_unstable_by(size, |a, b| a.0.total_cmp(&b.0));
        keys.truncate(size);
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(keys.into_iter().map(|k| k.1).collect())
}

pub fn sample_subgraph(
    g: &SparseGraph,
    p: &[f64],
    size: usize,
    with_replacement: bool,
    seed: u64,
) -> Result<(Vec<usize>, SparseGraph)> {
    if p.len() != g.n() {
        return invalid(format!("{} probabilities for {} nodes", p.len(), g.n()));
    }
    let mut rng = crate::seeded_rng(seed, 0x73_61_6d_70);
    let nodes = sample_nodes(p, size, with_replacement, &mut rng)?;
    let sub = g.induced_subgraph(&nodes);
    Ok((nodes, sub))
}

/// Subgraph size above which the sampled loss stays within the tolerated
/// deviation of the full loss with the requested confidence:
/// `√n · √(−ln(conf/2) · ln(cap)² / (2·dev²))`, rounded to the nearest integer.
pub fn recommended_subgraph_size(n: usize, params: ThresholdParams) -> Result<usize> {
    let ThresholdParams { deviation, confidence, prob_cap } = params;
    if deviation <= 0.0 || !(0.0 < confidence && confidence < 1.0) || !(0.0 < prob_cap && prob_cap < 1.0) {
        return invalid("threshold parameters out of range");
    }
    let c = (-(confidence / 2.0).ln() * prob_cap.ln().powi(2) / (2.0 * deviation * deviation)).sqrt();
    Ok(((n as f64).sqrt() * c).round() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;

    fn star3() -> SparseGraph {
        load_graph("0 1\n0 2\n0 3".as_bytes(), false).unwrap()
    }

    #[test]
    fn scores_by_method() {
        let g = star3();
        assert_eq!(importance_scores(&g, ImportanceMethod::Uniform), vec![1.0; 4]);
        assert_eq!(importance_scores(&g, ImportanceMethod::Degree), vec![3.0, 1.0, 1.0, 1.0]);
        let tp = load_graph("0 1\n1 2\n0 2\n2 3".as_bytes(), false).unwrap();
        assert_eq!(importance_scores(&tp, ImportanceMethod::Core), vec![2.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn distribution_hand_values() {
        let p = sampling_distribution(&[3.0, 1.0, 1.0, 1.0], 1.0).unwrap();
        for (a, b) in p.iter().zip([0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = sampling_distribution(&[2.0, 1.0], 2.0).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15 && (p[1] - 0.2).abs() < 1e-15);
        assert_eq!(sampling_distribution(&[0.0, 5.0, 2.0], 0.0).unwrap(), vec![1.0 / 3.0; 3]);
        assert!(sampling_distribution(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn full_draw_returns_the_whole_graph() {
        let g = star3();
        let (nodes, sub) = sample_subgraph(&g, &[0.25; 4], 4, false, 9).unwrap();
        let mut sorted = nodes.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        assert_eq!(sub.m(), g.m());
        assert!(sample_subgraph(&g, &[0.25; 4], 5, false, 9).is_err());
    }

    #[test]
    fn degenerate_distribution_draws_its_atom_first() {
        for seed in 0..20 {
            let mut rng = crate::seeded_rng(seed, 0);
            let nodes = sample_nodes(&[0.0, 0.0, 1.0, 0.0], 1, false, &mut rng).unwrap();
            assert_eq!(nodes, vec![2]);
        }
    }

    #[test]
    fn threshold_values() {
        let p = ThresholdParams::default();
        assert_eq!(recommended_subgraph_size(19717, p).unwrap(), 1187);
        assert_eq!(recommended_subgraph_size(2708, p).unwrap(), 440);
        assert_eq!(recommended_subgraph_size(3327, p).unwrap(), 488);
    }
}
