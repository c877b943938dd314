//! k-core decomposition and propagation of embeddings from a core to the
//! rest of the graph.
//!
//! Training on a small k-core and then propagating the learned vectors
//! outwards is one way to scale autoencoders: the model only sees the core,
//! and remaining nodes get the solution of a local averaging system.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{invalid, Result};
use crate::graph::SparseGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreDecomposition {
    pub core_number: Vec<usize>,
    pub degeneracy: usize,
}

impl CoreDecomposition {
    /// Nodes of the k-core, ascending.
    pub fn core_nodes(&self, k: usize) -> Vec<usize> {
        (0..self.core_number.len()).filter(|&i| self.core_number[i] >= k).collect()
    }
}

/// Core numbers by bucket-sorted peeling, O(n + m). Directions are ignored.
pub fn core_decomposition(g: &SparseGraph) -> CoreDecomposition {
    let und;
    let g = if g.is_directed() {
        und = g.to_undirected();
        &und
    } else {
        g
    };
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|i| g.neighbors(i).0.len()).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    // bin[d] = first position in `order` of nodes with current degree d
    let mut bin = vec![0usize; max_deg + 2];
    for &d in &deg {
        bin[d + 1] += 1;
    }
    for d in 0..=max_deg {
        bin[d + 1] += bin[d];
    }
    let mut pos = vec![0usize; n];
    let mut order = vec![0usize; n];
    let mut next = bin.clone();
    for v in 0..n {
        pos[v] = next[deg[v]];
        order[pos[v]] = v;
        next[deg[v]] += 1;
    }
    for i in 0..n {
        let v = order[i];
        for &u in g.neighbors(v).0 {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = order[pw];
                if u != w {
                    order.swap(pu, pw);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    let degeneracy = deg.iter().copied().max().unwrap_or(0);
    CoreDecomposition { core_number: deg, degeneracy }
}

/// Induced subgraph on `{i : core(i) ≥ k}` and the map from new to old ids.
pub fn extract_k_core(g: &SparseGraph, k: usize) -> (SparseGraph, Vec<usize>) {
    let nodes = core_decomposition(g).core_nodes(k);
    (g.induced_subgraph(&nodes), nodes)
}

/// One propagation wave: nodes adjacent to the embedded set, with their
/// row-normalised links to embedded nodes (`to_known`) and to each other
/// (`to_wave`, indices local to the wave).
struct Wave {
    nodes: Vec<usize>,
    to_known: Vec<Vec<(usize, f64)>>,
    to_wave: Vec<Vec<(usize, f64)>>,
}

impl Wave {
    fn build(g: &SparseGraph, embedded: &[bool], frontier: &[usize]) -> Wave {
        let n = g.n();
        let mut local = vec![usize::MAX; n];
        let mut nodes = Vec::new();
        for &v in frontier {
            for &u in g.neighbors(v).0 {
                if !embedded[u] && local[u] == usize::MAX {
                    local[u] = 0;
                    nodes.push(u);
                }
            }
        }
        nodes.sort_unstable();
        for (k, &u) in nodes.iter().enumerate() {
            local[u] = k;
        }
        let mut to_known = Vec::with_capacity(nodes.len());
        let mut to_wave = Vec::with_capacity(nodes.len());
        for &u in &nodes {
            let (c, w) = g.neighbors(u);
            let mut known = Vec::new();
            let mut wave = Vec::new();
            for (&v, &x) in c.iter().zip(w) {
                if embedded[v] {
                    known.push((v, x));
                } else if local[v] != usize::MAX {
                    wave.push((local[v], x));
                }
            }
            let total: f64 = known.iter().chain(&wave).map(|e| e.1).sum();
            if total > 0.0 {
                known.iter_mut().chain(wave.iter_mut()).for_each(|e| e.1 /= total);
            }
            to_known.push(known);
            to_wave.push(wave);
        }
        Wave { nodes, to_known, to_wave }
    }

    /// Constant term `Ã₁ Z₁`.
    fn known_part(&self, z: &Array2<f64>) -> Array2<f64> {
        let d = z.ncols();
        let mut out = Array2::zeros((self.nodes.len(), d));
        for (k, row) in self.to_known.iter().enumerate() {
            for &(v, w) in row {
                out.row_mut(k).scaled_add(w, &z.row(v));
            }
        }
        out
    }

    /// One Jacobi sweep `Z₂ ← Ã₁Z₁ + Ã₂Z₂`.
    fn step(&self, base: &Array2<f64>, z2: &Array2<f64>) -> Array2<f64> {
        let mut out = base.clone();
        for (k, row) in self.to_wave.iter().enumerate() {
            for &(l, w) in row {
                out.row_mut(k).scaled_add(w, &z2.row(l));
            }
        }
        out
    }

    /// Fixed point `(I − Ã₂)⁻¹ Ã₁ Z₁` by dense Gaussian elimination.
    fn solve(&self, base: &Array2<f64>) -> Result<Array2<f64>> {
        let k = self.nodes.len();
        let mut a = Array2::<f64>::eye(k);
        for (i, row) in self.to_wave.iter().enumerate() {
            for &(j, w) in row {
                a[[i, j]] -= w;
            }
        }
        solve_dense(a, base.clone())
    }
}

fn uniform_rows<R: Rng>(rows: usize, d: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, d), || rng.random_range(-1.0..=1.0))
}

/// Extends embeddings of the `embedded` nodes (rows of `z1`, same order) to
/// the whole graph, one neighbourhood wave at a time.
///
/// In every wave each new node is pulled towards the average of its
/// already-embedded and same-wave neighbours; the coupled system is solved by
/// exactly `t` Jacobi sweeps from a uniform `[-1, 1]` start. Nodes that no
/// wave reaches keep random uniform vectors. Embedded rows are copied through
/// unchanged.
pub fn propagate_embeddings(
    g: &SparseGraph,
    embedded: &[usize],
    z1: ArrayView2<f64>,
    t: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    if t < 1 {
        return invalid("propagation needs at least one iteration");
    }
    if embedded.is_empty() {
        return invalid("propagation needs a non-empty embedded set");
    }
    if z1.nrows() != embedded.len() {
        return invalid(format!("{} embedded nodes but {} embedding rows", embedded.len(), z1.nrows()));
    }
    let und;
    let g = if g.is_directed() {
        und = g.to_undirected();
        &und
    } else {
        g
    };
    let n = g.n();
    let d = z1.ncols();
    let mut rng = crate::seeded_rng(seed, 0x70_72_6f_70);
    let mut z = Array2::zeros((n, d));
    let mut done = vec![false; n];
    for (k, &v) in embedded.iter().enumerate() {
        if v >= n || done[v] {
            return invalid(format!("embedded node {v} is out of range or repeated"));
        }
        z.row_mut(v).assign(&z1.row(k));
        done[v] = true;
    }
    let mut frontier: Vec<usize> = embedded.to_vec();
    loop {
        let wave = Wave::build(g, &done, &frontier);
        if wave.nodes.is_empty() {
            break;
        }
        let base = wave.known_part(&z);
        let mut z2 = uniform_rows(wave.nodes.len(), d, &mut rng);
        for _ in 0..t {
            z2 = wave.step(&base, &z2);
        }
        for (k, &u) in wave.nodes.iter().enumerate() {
            z.row_mut(u).assign(&z2.row(k));
            done[u] = true;
        }
        frontier = wave.nodes;
    }
    for u in 0..n {
        if !done[u] {
            let r = uniform_rows(1, d, &mut rng);
            z.row_mut(u).assign(&r.row(0));
        }
    }
    Ok(z)
}

/// Frobenius distances `‖Z₂⁽ᵗ⁾ − Z₂*‖` for `t = 0..=t_max` on the first wave
/// around `embedded`, starting the sweeps from `init` (one row per wave
/// node, ascending node id).
pub fn propagation_error_curve(
    g: &SparseGraph,
    embedded: &[usize],
    z1: ArrayView2<f64>,
    init: ArrayView2<f64>,
    t_max: usize,
) -> Result<Vec<f64>> {
    let n = g.n();
    let mut z = Array2::zeros((n, z1.ncols()));
    let mut done = vec![false; n];
    for (k, &v) in embedded.iter().enumerate() {
        z.row_mut(v).assign(&z1.row(k));
        done[v] = true;
    }
    let wave = Wave::build(g, &done, embedded);
    if wave.nodes.is_empty() {
        return invalid("no unembedded node is adjacent to the embedded set");
    }
    if init.nrows() != wave.nodes.len() {
        return invalid(format!("wave has {} nodes, init has {} rows", wave.nodes.len(), init.nrows()));
    }
    let base = wave.known_part(&z);
    let fixed = wave.solve(&base)?;
    let mut cur = init.to_owned();
    let mut out = Vec::with_capacity(t_max + 1);
    for step in 0..=t_max {
        out.push((&cur - &fixed).iter().map(|v| v * v).sum::<f64>().sqrt());
        if step < t_max {
            cur = wave.step(&base, &cur);
        }
    }
    Ok(out)
}

/// Wave nodes (ascending) around `embedded`; rows of `init` for
/// [`propagation_error_curve`] follow this order.
pub fn first_wave(g: &SparseGraph, embedded: &[usize]) -> Vec<usize> {
    let mut done = vec![false; g.n()];
    for &v in embedded {
        done[v] = true;
    }
    Wave::build(g, &done, embedded).nodes
}

/// Solves `a · x = b` with partial pivoting.
pub(crate) fn solve_dense(mut a: Array2<f64>, mut b: Array2<f64>) -> Result<Array2<f64>> {
    let k = a.nrows();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[[x, col]].abs().total_cmp(&a[[y, col]].abs())).unwrap();
        if a[[piv, col]].abs() < 1e-14 {
            return Err(crate::Error::Numeric("singular propagation system".into()));
        }
        if piv != col {
            for c in 0..k {
                a.swap([piv, c], [col, c]);
            }
            for c in 0..b.ncols() {
                b.swap([piv, c], [col, c]);
            }
        }
        for r in col + 1..k {
            let f = a[[r, col]] / a[[col, col]];
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                a[[r, c]] -= f * a[[col, c]];
            }
            for c in 0..b.ncols() {
                b[[r, c]] -= f * b[[col, c]];
            }
        }
    }
    for r in (0..k).rev() {
        for c in 0..b.ncols() {
            let mut s = b[[r, c]];
            for j in r + 1..k {
                s -= a[[r, j]] * b[[j, c]];
            }
            b[[r, c]] = s / a[[r, r]];
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;
    use ndarray::array;

    fn g(s: &str) -> SparseGraph {
        load_graph(s.as_bytes(), false).unwrap()
    }

    #[test]
    fn triangle_cores() {
        let c = core_decomposition(&g("0 1\n1 2\n0 2"));
        assert_eq!(c.core_number, vec![2, 2, 2]);
        assert_eq!(c.degeneracy, 2);
    }

    #[test]
    fn star_cores() {
        let c = core_decomposition(&g("0 1\n0 2\n0 3\n0 4\n0 5"));
        assert_eq!(c.core_number, vec![1; 6]);
    }

    #[test]
    fn k_core_extraction() {
        let tp = g("0 1\n1 2\n0 2\n2 3");
        let (core, map) = extract_k_core(&tp, 2);
        assert_eq!(map, vec![0, 1, 2]);
        assert_eq!(core.m(), 3);
        assert_eq!(extract_k_core(&tp, 0).0, tp);
        assert_eq!(extract_k_core(&tp, 3).0.n(), 0);
    }

    #[test]
    fn isolated_nodes_have_core_zero() {
        let c = core_decomposition(&g("# nodes 3\n0 1"));
        assert_eq!(c.core_number, vec![1, 1, 0]);
    }

    #[test]
    fn nothing_to_propagate_returns_input() {
        let tri = g("0 1\n1 2\n0 2");
        let z1 = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let z = propagate_embeddings(&tri, &[0, 1, 2], z1.view(), 10, 1).unwrap();
        assert_eq!(z, z1);
        assert!(propagate_embeddings(&tri, &[0], z1.slice(ndarray::s![..1, ..]), 0, 1).is_err());
    }

    #[test]
    fn two_node_wave_matches_hand_solution() {
        // A, B, C embedded (0, 1, 2); D = 3 links to A and E; E = 4 links to B, C, D.
        let gr = g("0 3\n3 4\n1 4\n2 4\n0 1\n1 2");
        let z1 = array![[1.0], [4.0], [7.0]];
        let z = propagate_embeddings(&gr, &[0, 1, 2], z1.view(), 200, 3).unwrap();
        // z_D = (z_A + z_E)/2, z_E = (z_B + z_C + z_D)/3
        // => z_D = (1 + (11 + z_D)/3)/2 => 6 z_D = 3 + 11 + z_D => z_D = 14/5
        let zd = 14.0 / 5.0;
        let ze = (11.0 + zd) / 3.0;
        assert!((z[[3, 0]] - zd).abs() < 1e-12);
        assert!((z[[4, 0]] - ze).abs() < 1e-12);
    }

    #[test]
    fn unreachable_nodes_are_uniform_random() {
        let gr = g("# nodes 4\n0 1\n2 3");
        let z1 = array![[0.5, 0.5]];
        let z = propagate_embeddings(&gr, &[0], z1.view(), 5, 11).unwrap();
        assert_eq!(z[[1, 0]], 0.5);
        assert!(z.slice(ndarray::s![2.., ..]).iter().all(|v| (-1.0..=1.0).contains(v)));
        let again = propagate_embeddings(&gr, &[0], z1.view(), 5, 11).unwrap();
        assert_eq!(z, again);
    }

    #[test]
    fn error_curve_is_zero_at_the_fixed_point() {
        let gr = g("0 3\n3 4\n1 4\n2 4");
        let z1 = array![[1.0], [4.0], [7.0]];
        let zd = 14.0 / 5.0;
        let fixed = array![[zd], [(11.0 + zd) / 3.0]];
        let curve = propagation_error_curve(&gr, &[0, 1, 2], z1.view(), fixed.view(), 5).unwrap();
        assert!(curve.iter().all(|&e| e < 1e-12));
        let start = array![[0.0], [0.0]];
        let curve = propagation_error_curve(&gr, &[0, 1, 2], z1.view(), start.view(), 5).unwrap();
        assert!(curve[1] < curve[0]);
        let lone = g("# nodes 3\n0 1");
        assert!(propagation_error_curve(&lone, &[0, 1], array![[1.0], [1.0]].view(), array![[0.0]].view(), 3).is_err());
    }
}
