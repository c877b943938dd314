use rand::seq::SliceRandom;

use super::{modularity, Partition};
use crate::error::{invalid, Result};
use crate::graph::SparseGraph;

/// Greedy two-phase modularity maximisation.
///
/// Nodes are visited in ascending order unless a shuffle seed is given. A
/// node only leaves its community for a strictly better one.
#[derive(Debug, Clone, Default)]
pub struct Louvain {
    shuffle_seed: Option<u64>,
}

impl Louvain {
    pub fn new() -> Louvain {
        Louvain::default()
    }

    pub fn shuffled(mut self, seed: u64) -> Louvain {
        self.shuffle_seed = Some(seed);
        self
    }

    /// Partitions of the original nodes, finest level first.
    pub fn run(&self, g: &SparseGraph) -> Result<Vec<Partition>> {
        let g = g.to_undirected();
        if g.m() == 0 {
            return invalid("Louvain needs at least one edge");
        }
        let n = g.n();
        let mut level = Level::from_graph(&g);
        let mut node_comm: Vec<usize> = (0..n).collect();
        let mut levels = Vec::new();
        let mut rng = crate::seeded_rng(self.shuffle_seed.unwrap_or(0), 0x6c_6f_75_76);
        loop {
            let mut order: Vec<usize> = (0..level.len()).collect();
            if self.shuffle_seed.is_some() {
                order.shuffle(&mut rng);
            }
            let (comm, moved) = level.local_moves(&order);
            if !moved {
                break;
            }
            let (dense, count) = densify(&comm);
            for c in node_comm.iter_mut() {
                *c = dense[*c];
            }
            levels.push(Partition::from_labels(&node_comm));
            if count == level.len() {
                break;
            }
            level = level.aggregate(&dense, count);
        }
        if levels.is_empty() {
            levels.push(Partition::singletons(n));
        }
        debug_assert!(levels.windows(2).all(|w| modularity(&g, &w[0]).unwrap() <= modularity(&g, &w[1]).unwrap() + 1e-12));
        Ok(levels)
    }
}

/// Louvain in ascending node order, or shuffled by `seed`.
pub fn louvain(g: &SparseGraph, seed: Option<u64>) -> Result<Vec<Partition>> {
    match seed {
        Some(s) => Louvain::new().shuffled(s).run(g),
        None => Louvain::new().run(g),
    }
}

fn densify(comm: &[usize]) -> (Vec<usize>, usize) {
    let mut map = vec![usize::MAX; comm.len()];
    let mut next = 0;
    let mut dense = vec![0; comm.len()];
    for (i, &c) in comm.iter().enumerate() {
        if map[c] == usize::MAX {
            map[c] = next;
            next += 1;
        }
        dense[i] = map[c];
    }
    (dense, next)
}

/// Weighted graph of one aggregation level. `adj` excludes self-loops,
/// whose weight is kept in `self_w` (ordered-pair total, so a community's
/// internal edges count twice).
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
    degree: Vec<f64>,
    two_m: f64,
}

impl Level {
    fn from_graph(g: &SparseGraph) -> Level {
        let n = g.n();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let (c, w) = g.neighbors(i);
                c.iter().copied().zip(w.iter().copied()).collect()
            })
            .collect();
        let degree: Vec<f64> = adj.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
        let two_m = degree.iter().sum();
        Level { adj, self_w: vec![0.0; n], degree, two_m }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Repeated sweeps of single-node moves until none improves modularity.
    fn local_moves(&self, order: &[usize]) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut weight_to = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &i in order {
                let ci = comm[i];
                let ki = self.degree[i];
                tot[ci] -= ki;
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if weight_to[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    weight_to[c] += w;
                }
                let gain = |c: usize, w_in: f64| w_in - ki * tot[c] / self.two_m;
                let mut best = ci;
                let mut best_gain = gain(ci, weight_to[ci]);
                touched.sort_unstable();
                for &c in &touched {
                    let g = gain(c, weight_to[c]);
                    if g > best_gain + 1e-12 {
                        best = c;
                        best_gain = g;
                    }
                }
                for &c in &touched {
                    weight_to[c] = 0.0;
                }
                weight_to[ci] = 0.0;
                touched.clear();
                tot[best] += ki;
                if best != ci {
                    comm[i] = best;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        (comm, moved_any)
    }

    fn aggregate(&self, comm: &[usize], count: usize) -> Level {
        let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); count];
        let mut self_w = vec![0.0; count];
        for i in 0..self.len() {
            let ci = comm[i];
            self_w[ci] += self.self_w[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if ci == cj {
                    self_w[ci] += w;
                } else {
                    *maps[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj: Vec<Vec<(usize, f64)>> = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        let degree: Vec<f64> = (0..count).map(|c| self_w[c] + adj[c].iter().map(|e| e.1).sum::<f64>()).collect();
        Level { adj, self_w, degree, two_m: self.two_m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::tests::two_triangles;
    use crate::graph::load_graph;

    #[test]
    fn two_triangles_split_at_the_bridge() {
        let g = two_triangles();
        let levels = louvain(&g, None).unwrap();
        let top = levels.last().unwrap();
        assert_eq!(top.k(), 2);
        assert_eq!(top.community(0), top.community(2));
        assert_ne!(top.community(2), top.community(3));
        assert!((modularity(&g, top).unwrap() - 5.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_is_one_community() {
        let k4 = load_graph("0 1\n0 2\n0 3\n1 2\n1 3\n2 3".as_bytes(), false).unwrap();
        assert_eq!(louvain(&k4, None).unwrap().last().unwrap().k(), 1);
    }

    #[test]
    fn levels_never_lose_modularity() {
        let mut s = String::new();
        for c in 0..4 {
            for i in 0..5 {
                for j in i + 1..5 {
                    if (i + j) % 3 != 0 {
                        s += &format!("{} {}\n", c * 5 + i, c * 5 + j);
                    }
                }
            }
            s += &format!("{} {}\n", c * 5, ((c + 1) % 4) * 5 + 1);
        }
        let g = load_graph(s.as_bytes(), false).unwrap();
        for seed in [None, Some(3)] {
            let levels = louvain(&g, seed).unwrap();
            let qs: Vec<f64> = levels.iter().map(|p| modularity(&g, p).unwrap()).collect();
            assert!(qs.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            assert!(qs[0] >= modularity(&g, &Partition::singletons(20)).unwrap());
        }
    }
}
