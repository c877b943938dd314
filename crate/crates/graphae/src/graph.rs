//! Sparse graphs, node features and normalized propagation operators.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use ndarray::{Array2, ArrayView2};

use crate::error::{invalid, Error, Result};

/// Compressed sparse rows with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from (row, col, value) triplets. Entries with equal (row, col)
    /// are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Csr {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n_rows, n_cols, row_ptr, cols, vals }
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    /// `self · m`.
    pub fn mul_dense(&self, m: ArrayView2<f64>) -> Array2<f64> {
        let m = m.as_standard_layout();
        let d = m.ncols();
        let src = m.as_slice().unwrap();
        let mut out = Array2::<f64>::zeros((self.n_rows, d));
        let dst = out.as_slice_mut().unwrap();
        for i in 0..self.n_rows {
            let acc = &mut dst[i * d..(i + 1) * d];
            let (c, v) = self.row(i);
            for (&j, &w) in c.iter().zip(v) {
                let r = &src[j * d..(j + 1) * d];
                for k in 0..d {
                    acc[k] += w * r[k];
                }
            }
        }
        out
    }

    /// `selfᵀ · m`.
    pub fn mul_dense_t(&self, m: ArrayView2<f64>) -> Array2<f64> {
        let m = m.as_standard_layout();
        let d = m.ncols();
        let src = m.as_slice().unwrap();
        let mut out = Array2::<f64>::zeros((self.n_cols, d));
        let dst = out.as_slice_mut().unwrap();
        for i in 0..self.n_rows {
            let r = &src[i * d..(i + 1) * d];
            let (c, v) = self.row(i);
            for (&j, &w) in c.iter().zip(v) {
                let acc = &mut dst[j * d..(j + 1) * d];
                for k in 0..d {
                    acc[k] += w * r[k];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &w) in c.iter().zip(v) {
                out[[i, j]] = w;
            }
        }
        out
    }
}

/// Immutable weighted adjacency matrix.
///
/// Undirected graphs store both (i, j) and (j, i); `m` counts each
/// undirected edge once.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    adj: Csr,
    directed: bool,
    m: usize,
}

impl SparseGraph {
    /// Builds a graph from `(src, dst, weight)` records with node ids in `0..n`.
    ///
    /// For undirected graphs a single direction is mirrored; giving both
    /// directions is accepted when the weights agree.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], directed: bool) -> Result<SparseGraph> {
        let mut seen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return invalid(format!("edge ({a}, {b}) references a node outside 0..{n}"));
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::WeightOutOfRange(a, b, w));
            }
            if seen.insert((a, b), w).is_some() {
                return Err(Error::DuplicateEdge(a, b));
            }
        }
        let mut triplets = Vec::with_capacity(if directed { seen.len() } else { 2 * seen.len() });
        if directed {
            triplets.extend(seen.iter().map(|(&(a, b), &w)| (a, b, w)));
        } else {
            for (&(a, b), &w) in &seen {
                match seen.get(&(b, a)) {
                    Some(&w2) if w2 != w => return Err(Error::AsymmetricWeight(a.min(b), a.max(b))),
                    Some(_) if a > b => {}
                    _ => {
                        triplets.push((a, b, w));
                        triplets.push((b, a, w));
                    }
                }
            }
        }
        let adj = Csr::from_triplets(n, n, triplets);
        let m = if directed { adj.nnz() } else { adj.nnz() / 2 };
        Ok(SparseGraph { adj, directed, m })
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize, directed: bool) -> SparseGraph {
        SparseGraph { adj: Csr::from_triplets(n, n, Vec::new()), directed, m: 0 }
    }

    pub fn n(&self) -> usize {
        self.adj.n_rows
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Out-neighbours of `i` (all neighbours when undirected) and the edge weights.
    pub fn neighbors(&self, i: usize) -> (&[usize], &[f64]) {
        self.adj.row(i)
    }

    /// Weighted out-degree.
    pub fn degree(&self, i: usize) -> f64 {
        self.adj.row(i).1.iter().sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj.get(i, j)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj.row(i).0.binary_search(&j).is_ok()
    }

    /// Every stored entry, i.e. both directions for undirected graphs.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            let (c, v) = self.adj.row(i);
            c.iter().zip(v).map(move |(&j, &w)| (i, j, w))
        })
    }

    /// Edge records: arcs for directed graphs, `i < j` pairs otherwise.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.entries().filter(|&(i, j, _)| self.directed || i < j).collect()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.adj.to_dense()
    }

    /// Forgets directions. Reciprocal arcs with different weights keep the larger one.
    pub fn to_undirected(&self) -> SparseGraph {
        if !self.directed {
            return self.clone();
        }
        let mut best: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in self.entries() {
            let e = best.entry((i.min(j), i.max(j))).or_insert(w);
            *e = e.max(w);
        }
        let edges: Vec<_> = best.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        SparseGraph::from_edges(self.n(), &edges, false).expect("valid by construction")
    }

    /// Subgraph induced by `nodes`; node `nodes[k]` becomes node `k`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> SparseGraph {
        let mut local = vec![usize::MAX; self.n()];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut triplets = Vec::new();
        for (k, &v) in nodes.iter().enumerate() {
            let (c, w) = self.adj.row(v);
            for (&u, &x) in c.iter().zip(w) {
                if local[u] != usize::MAX {
                    triplets.push((k, local[u], x));
                }
            }
        }
        let adj = Csr::from_triplets(nodes.len(), nodes.len(), triplets);
        let m = if self.directed { adj.nnz() } else { adj.nnz() / 2 };
        SparseGraph { adj, directed: self.directed, m }
    }

    /// Same node set with some edge records removed (both directions when undirected).
    pub fn without_edges(&self, removed: &[(usize, usize)]) -> SparseGraph {
        let mut drop: std::collections::HashSet<(usize, usize)> = removed.iter().copied().collect();
        if !self.directed {
            drop.extend(removed.iter().map(|&(a, b)| (b, a)));
        }
        let triplets: Vec<_> = self.entries().filter(|&(i, j, _)| !drop.contains(&(i, j))).collect();
        let adj = Csr::from_triplets(self.n(), self.n(), triplets);
        let m = if self.directed { adj.nnz() } else { adj.nnz() / 2 };
        SparseGraph { adj, directed: self.directed, m }
    }

    /// Writes the edge-list format read by [`load_graph`], including the node count.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# nodes {}", self.n())?;
        writeln!(w, "# src dst weight")?;
        for (i, j, x) in self.edges() {
            writeln!(w, "{i} {j} {x:.16e}")?;
        }
        Ok(())
    }
}

/// Reads a whitespace-separated edge list: `src dst [weight]` per line.
///
/// Lines starting with `#` are comments, except that a comment of the form
/// `# nodes N` declares the node count so that isolated nodes can exist.
/// Without it, every id in `0..=max` must appear in some edge.
pub fn load_graph<R: BufRead>(reader: R, directed: bool) -> Result<SparseGraph> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if it.next() == Some("nodes") {
                let n = it.next().and_then(|s| s.parse().ok()).ok_or(Error::Parse {
                    line: lineno + 1,
                    msg: "expected '# nodes <count>'".into(),
                })?;
                declared = Some(n);
            }
            continue;
        }
        let parse_err = |msg: &str| Error::Parse { line: lineno + 1, msg: msg.to_string() };
        let mut it = t.split_whitespace();
        let a: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad source id"))?;
        let b: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad target id"))?;
        let w: f64 = match it.next() {
            Some(s) => s.parse().map_err(|_| parse_err("bad weight"))?,
            None => 1.0,
        };
        if it.next().is_some() {
            return Err(parse_err("too many fields"));
        }
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        edges.push((a, b, w));
    }
    let max_id = edges.iter().map(|&(a, b, _)| a.max(b) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < max_id => return invalid(format!("declared {n} nodes but id {} appears", max_id - 1)),
        Some(n) => n,
        None => {
            let mut seen = vec![false; max_id];
            for &(a, b, _) in &edges {
                seen[a] = true;
                seen[b] = true;
            }
            if let Some(gap) = seen.iter().position(|s| !s) {
                return Err(Error::IdGap(gap));
            }
            max_id
        }
    };
    SparseGraph::from_edges(n, &edges, directed)
}

/// Dense node features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Result<FeatureMatrix> {
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("feature matrix contains non-finite values");
        }
        Ok(FeatureMatrix { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn f(&self) -> usize {
        self.values.ncols()
    }

    /// Header line `n f`, then `n` rows of `f` values.
    pub fn read<R: BufRead>(reader: R) -> Result<FeatureMatrix> {
        let mut lines = reader.lines().enumerate().filter(|(_, l)| match l {
            Ok(s) => !s.trim().is_empty() && !s.trim_start().starts_with('#'),
            Err(_) => true,
        });
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let header = header?;
        let dims: Vec<usize> = header.split_whitespace().filter_map(|s| s.parse().ok()).collect();
        let [n, f] = dims[..] else {
            return Err(Error::Parse { line: 1, msg: "header must be 'n f'".into() });
        };
        let mut values = Array2::zeros((n, f));
        for r in 0..n {
            let (lineno, line) = lines.next().ok_or(Error::Parse { line: r + 2, msg: "missing row".into() })?;
            let line = line?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse { line: lineno + 1, msg: format!("bad value '{s}'") }))
                .collect::<Result<_>>()?;
            if row.len() != f {
                return Err(Error::Parse { line: lineno + 1, msg: format!("expected {f} values, got {}", row.len()) });
            }
            values.row_mut(r).assign(&ndarray::ArrayView1::from(&row));
        }
        FeatureMatrix::new(values)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.n(), self.f())?;
        for row in self.values.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Encoder input: real features, or the identity for featureless graphs.
///
/// The identity is never materialised; `X · W` is just `W`.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Identity(usize),
    Dense(FeatureMatrix),
}

impl Features {
    pub fn n(&self) -> usize {
        match self {
            Features::Identity(n) => *n,
            Features::Dense(x) => x.n(),
        }
    }

    /// Input dimension seen by the first weight matrix.
    pub fn dim(&self) -> usize {
        match self {
            Features::Identity(n) => *n,
            Features::Dense(x) => x.f(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Features::Identity(_))
    }

    /// `X · w`.
    pub fn times(&self, w: &Array2<f64>) -> Array2<f64> {
        match self {
            Features::Identity(_) => w.clone(),
            Features::Dense(x) => x.values.dot(w),
        }
    }

    /// `Xᵀ · g`.
    pub fn t_times(&self, g: &Array2<f64>) -> Array2<f64> {
        match self {
            Features::Identity(_) => g.clone(),
            Features::Dense(x) => x.values.t().dot(g),
        }
    }

    /// Rows restricted to `nodes`, in that order.
    pub fn select(&self, nodes: &[usize]) -> Features {
        match self {
            Features::Identity(_) => Features::Identity(nodes.len()),
            Features::Dense(x) => Features::Dense(FeatureMatrix { values: x.values.select(ndarray::Axis(0), nodes) }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Symmetric,
    OutDegree,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Symmetric => "symmetric",
            OperatorKind::OutDegree => "out_degree",
        }
    }

    pub fn parse(s: &str) -> Result<OperatorKind> {
        match s {
            "symmetric" => Ok(OperatorKind::Symmetric),
            "out_degree" => Ok(OperatorKind::OutDegree),
            _ => invalid(format!("unknown operator kind '{s}' (expected symmetric or out_degree)")),
        }
    }
}

/// Normalized adjacency with self-loops, applied to dense node matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    kind: OperatorKind,
    mat: Csr,
}

impl Operator {
    pub fn identity(n: usize) -> Operator {
        Operator {
            kind: OperatorKind::Symmetric,
            mat: Csr::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect()),
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.mat.n_rows
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.mat.row(i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    /// `self · m`, linear in stored entries.
    pub fn apply(&self, m: ArrayView2<f64>) -> Result<Array2<f64>> {
        if m.nrows() != self.mat.n_cols {
            return Err(Error::Dimension(format!("operator has {} columns, matrix has {} rows", self.mat.n_cols, m.nrows())));
        }
        Ok(self.mat.mul_dense(m))
    }

    /// `selfᵀ · m`.
    pub fn apply_transpose(&self, m: ArrayView2<f64>) -> Result<Array2<f64>> {
        if m.nrows() != self.mat.n_rows {
            return Err(Error::Dimension(format!("operator has {} rows, matrix has {} rows", self.mat.n_rows, m.nrows())));
        }
        Ok(self.mat.mul_dense_t(m))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.mat.to_dense()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.mat.row(i).1.iter().sum()).collect()
    }
}

/// `(D+I)^{-1/2} (A+I) (D+I)^{-1/2}` for an undirected graph.
pub fn symmetric_normalize(g: &SparseGraph) -> Result<Operator> {
    if g.is_directed() {
        return invalid("symmetric normalization needs an undirected graph; use out_degree_normalize");
    }
    Ok(symmetric_from(g.n(), g.entries().collect()))
}

/// Symmetric normalization of `A + λ·A_s`, the first-layer operator of
/// modularity-aware encoders. `extra` must be undirected on the same nodes.
pub fn symmetric_normalize_with(g: &SparseGraph, extra: &SparseGraph, lambda: f64) -> Result<Operator> {
    if g.is_directed() || extra.is_directed() {
        return invalid("symmetric normalization needs undirected graphs");
    }
    if extra.n() != g.n() {
        return Err(Error::Dimension(format!("community graph has {} nodes, graph has {}", extra.n(), g.n())));
    }
    if lambda < 0.0 {
        return invalid("lambda must be non-negative");
    }
    let mut t: Vec<_> = g.entries().collect();
    if lambda > 0.0 {
        t.extend(extra.entries().map(|(i, j, w)| (i, j, lambda * w)));
    }
    Ok(symmetric_from(g.n(), t))
}

fn symmetric_from(n: usize, mut t: Vec<(usize, usize, f64)>) -> Operator {
    t.extend((0..n).map(|i| (i, i, 1.0)));
    let mut mat = Csr::from_triplets(n, n, t);
    let deg: Vec<f64> = (0..n).map(|i| mat.row(i).1.iter().sum::<f64>()).collect();
    for i in 0..n {
        let (a, b) = (mat.row_ptr[i], mat.row_ptr[i + 1]);
        for k in a..b {
            let j = mat.cols[k];
            mat.vals[k] /= (deg[i] * deg[j]).sqrt();
        }
    }
    Operator { kind: OperatorKind::Symmetric, mat }
}

/// `(D_out+I)^{-1} (A+I)`: every row sums to one.
pub fn out_degree_normalize(g: &SparseGraph) -> Operator {
    let n = g.n();
    let mut t: Vec<_> = g.entries().collect();
    t.extend((0..n).map(|i| (i, i, 1.0)));
    let mut mat = Csr::from_triplets(n, n, t);
    for i in 0..n {
        let (a, b) = (mat.row_ptr[i], mat.row_ptr[i + 1]);
        let s: f64 = mat.vals[a..b].iter().sum();
        for v in &mut mat.vals[a..b] {
            *v /= s;
        }
    }
    Operator { kind: OperatorKind::OutDegree, mat }
}

/// Builds the operator of the given kind.
pub fn normalize(g: &SparseGraph, kind: OperatorKind) -> Result<Operator> {
    match kind {
        OperatorKind::Symmetric => symmetric_normalize(g),
        OperatorKind::OutDegree => Ok(out_degree_normalize(g)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn load(s: &str, directed: bool) -> Result<SparseGraph> {
        load_graph(s.as_bytes(), directed)
    }

    #[test]
    fn undirected_load_is_symmetric() {
        let g = load("0 1\n1 2", false).unwrap();
        assert_eq!((g.n(), g.m()), (3, 2));
        let a = g.to_dense();
        assert_eq!(a, a.t());
        assert_eq!(a[[1, 0]], 1.0);
    }

    #[test]
    fn directed_load_keeps_direction() {
        let g = load("0 1", true).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 0), 0.0);
    }

    #[test]
    fn load_rejects_bad_records() {
        assert!(matches!(load("0 1 1.5", false), Err(Error::WeightOutOfRange(0, 1, _))));
        assert!(matches!(load("0 1\n0 1", true), Err(Error::DuplicateEdge(0, 1))));
        assert!(matches!(load("1 1", false), Err(Error::SelfLoop(1))));
        assert!(matches!(load("0 2", false), Err(Error::IdGap(1))));
        assert!(matches!(load("0 1 0.5\n1 0 0.25", false), Err(Error::AsymmetricWeight(0, 1))));
        assert!(load("0 1 0.5\n1 0 0.5", false).is_ok());
    }

    #[test]
    fn declared_node_count_allows_isolated_nodes() {
        let g = load("# nodes 4\n# comment\n0 2\n", false).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.neighbors(3).0.len(), 0);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = load("0 1 0.3\n2 1 0.7\n3 0", true).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(load_graph(&buf[..], true).unwrap(), g);
    }

    #[test]
    fn symmetric_normalization_hand_values() {
        let empty = SparseGraph::empty(3, false);
        assert_eq!(symmetric_normalize(&empty).unwrap().to_dense(), Array2::<f64>::eye(3));

        let edge = load("0 1", false).unwrap();
        let op = symmetric_normalize(&edge).unwrap().to_dense();
        assert_eq!(op, array![[0.5, 0.5], [0.5, 0.5]]);

        let tri = load("0 1\n1 2\n0 2", false).unwrap();
        let op = symmetric_normalize(&tri).unwrap().to_dense();
        for v in op.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(symmetric_normalize(&load("0 1", true).unwrap()).is_err());
    }

    #[test]
    fn out_degree_normalization_hand_values() {
        let g = load("# nodes 3\n0 1", true).unwrap();
        let op = out_degree_normalize(&g).to_dense();
        assert_eq!(op.row(0).to_vec(), vec![0.5, 0.5, 0.0]);
        assert_eq!(op.row(2).to_vec(), vec![0.0, 0.0, 1.0]);
        let ones = Array2::ones((3, 1));
        assert_eq!(out_degree_normalize(&g).apply(ones.view()).unwrap(), ones);
    }

    #[test]
    fn apply_matches_dense_product() {
        let g = load("0 1 0.5\n1 2\n2 3 0.25\n3 4\n0 4 0.75\n1 3", false).unwrap();
        let op = symmetric_normalize(&g).unwrap();
        let m = Array2::from_shape_fn((5, 3), |(i, j)| (i as f64 + 1.0) * (j as f64 - 0.7));
        let dense = op.to_dense();
        let diff = &op.apply(m.view()).unwrap() - &dense.dot(&m);
        assert!(diff.iter().all(|v| v.abs() < 1e-12));
        let diff = &op.apply_transpose(m.view()).unwrap() - &dense.t().dot(&m);
        assert!(diff.iter().all(|v| v.abs() < 1e-12));
        assert!(op.apply(Array2::<f64>::zeros((4, 1)).view()).is_err());
    }

    #[test]
    fn identity_operator_is_neutral() {
        let m = Array2::from_shape_fn((4, 2), |(i, j)| (i * 2 + j) as f64);
        assert_eq!(Operator::identity(4).apply(m.view()).unwrap(), m);
    }

    #[test]
    fn features_round_trip() {
        let x = FeatureMatrix::new(array![[0.1, 1.0 / 3.0], [2.0, -1e-300]]).unwrap();
        let mut buf = Vec::new();
        x.write(&mut buf).unwrap();
        assert_eq!(FeatureMatrix::read(&buf[..]).unwrap(), x);
        assert!(FeatureMatrix::read("2 2\n1 2\n3".as_bytes()).is_err());
    }

    #[test]
    fn induced_subgraph_keeps_inner_edges() {
        let g = load("0 1\n1 2\n2 3\n3 0", false).unwrap();
        let s = g.induced_subgraph(&[2, 1, 3]);
        assert_eq!(s.m(), 2);
        assert!(s.has_edge(0, 1) && s.has_edge(0, 2) && !s.has_edge(1, 2));
    }
}
