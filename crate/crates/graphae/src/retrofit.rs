//! Ontology-constrained refinement of concept embeddings.
//!
//! Concepts (multi-word tags) get an initial vector composed from word
//! embeddings, or none at all. Retrofitting then pulls every vector towards
//! its initial value and towards its neighbours in a relation graph, which
//! also fills in the concepts that had no initial vector.

use std::collections::HashMap;
use std::io::BufRead;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{invalid, Error, Result};

/// How word vectors are combined into a concept vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Composition {
    Avg,
    /// Smooth inverse frequency with constant `a`; word frequency is
    /// estimated from its rank as `1 / (rank + 2.7)`.
    Sif { a: f64 },
}

impl Composition {
    pub fn parse(s: &str, a: f64) -> Result<Composition> {
        match s {
            "avg" => Ok(Composition::Avg),
            "sif" => Ok(Composition::Sif { a }),
            _ => invalid(format!("unknown composition '{s}'")),
        }
    }
}

/// Mean of the known word vectors, weighted by `a / (a + f)` under SIF.
/// Unknown words are skipped; with no known word the result is zero.
pub fn compose_embedding(words: &[(Option<ArrayView1<f64>>, f64)], dim: usize, mode: Composition) -> Result<Array1<f64>> {
    if words.is_empty() {
        return invalid("cannot compose an empty word list");
    }
    let mut out = Array1::zeros(dim);
    let mut known = 0usize;
    for (v, rank) in words {
        let Some(v) = v else { continue };
        if v.len() != dim {
            return Err(Error::Dimension(format!("word vector of length {} in a {dim}-dimensional space", v.len())));
        }
        let w = match mode {
            Composition::Avg => 1.0,
            Composition::Sif { a } => a / (a + 1.0 / (rank + 2.7)),
        };
        out.scaled_add(w, v);
        known += 1;
    }
    if known > 0 {
        out /= known as f64;
    }
    Ok(out)
}

/// Projects the first right singular vector of the non-zero rows out of
/// those rows. Zero rows (unknown concepts) are left untouched.
pub fn remove_first_component(q: &mut Array2<f64>) {
    let d = q.ncols();
    let rows: Vec<usize> = (0..q.nrows()).filter(|&i| q.row(i).iter().any(|&v| v != 0.0)).collect();
    if rows.is_empty() || d == 0 {
        return;
    }
    let mut gram = nalgebra::DMatrix::<f64>::zeros(d, d);
    for &i in &rows {
        let r = q.row(i);
        for a in 0..d {
            for b in 0..d {
                gram[(a, b)] += r[a] * r[b];
            }
        }
    }
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let u = Array1::from_iter(eig.eigenvectors.column(top).iter().copied());
    for &i in &rows {
        let proj = q.row(i).dot(&u);
        q.row_mut(i).scaled_add(-proj, &u);
    }
}

/// Word vectors with their frequency rank (line order of the file).
#[derive(Debug, Clone)]
pub struct WordVectors {
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
}

impl WordVectors {
    /// One `word v1 … vd` line per word, most frequent first.
    pub fn read<R: BufRead>(r: R) -> Result<WordVectors> {
        let (names, vectors) = read_vectors(r, ' ')?;
        let index = names.into_iter().enumerate().map(|(k, w)| (w, k)).collect();
        Ok(WordVectors { index, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Composes every tag from its whitespace-separated words.
    pub fn compose_tags(&self, tags: &[String], mode: Composition) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((tags.len(), self.dim()));
        for (t, tag) in tags.iter().enumerate() {
            let words: Vec<(Option<ArrayView1<f64>>, f64)> = tag
                .split_whitespace()
                .map(|w| match self.index.get(&w.to_lowercase()).or_else(|| self.index.get(w)) {
                    Some(&k) => (Some(self.vectors.row(k)), k as f64),
                    None => (None, 0.0),
                })
                .collect();
            if !words.is_empty() {
                out.row_mut(t).assign(&compose_embedding(&words, self.dim(), mode)?);
            }
        }
        if matches!(mode, Composition::Sif { .. }) {
            remove_first_component(&mut out);
        }
        Ok(out)
    }
}

/// Rows of `name<sep>v1 v2 …`.
fn read_vectors<R: BufRead>(r: R, sep: char) -> Result<(Vec<String>, Array2<f64>)> {
    let mut names = Vec::new();
    let mut values = Vec::new();
    let mut dim = None;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: k + 1, msg };
        let (name, rest) = if sep == '\t' {
            line.split_once('\t').ok_or_else(|| parse_err("expected 'tag<TAB>values'".into()))?
        } else {
            line.trim().split_once(char::is_whitespace).ok_or_else(|| parse_err("expected 'word values'".into()))?
        };
        let row: Vec<f64> = rest
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(format!("bad number '{t}'"))))
            .collect::<Result<_>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(parse_err("non-finite value".into()));
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => return Err(parse_err(format!("expected {d} values, found {}", row.len()))),
            _ => {}
        }
        names.push(name.trim().to_string());
        values.extend(row);
    }
    let d = dim.unwrap_or(0);
    let vectors = Array2::from_shape_vec((names.len(), d), values).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok((names, vectors))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationKind {
    Equivalence,
    Related,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub source: usize,
    pub target: usize,
    pub kind: RelationKind,
    /// Weight for related pairs; defaults to one over the source degree.
    pub weight: Option<f64>,
}

/// Concepts, their initial vectors and the relation graph between them.
#[derive(Debug, Clone)]
pub struct ConceptSpace {
    pub concepts: Vec<String>,
    /// Initial vectors; rows of unknown concepts are zero.
    pub initial: Array2<f64>,
    pub known: Vec<bool>,
    pub relations: Vec<Relation>,
}

impl ConceptSpace {
    pub fn new(concepts: Vec<String>, initial: Array2<f64>, known: Vec<bool>, relations: Vec<Relation>) -> Result<ConceptSpace> {
        let n = concepts.len();
        if initial.nrows() != n || known.len() != n {
            return Err(Error::Dimension(format!("{n} concepts, {} vectors, {} known flags", initial.nrows(), known.len())));
        }
        for r in &relations {
            if r.source >= n || r.target >= n {
                return invalid(format!("relation {} -> {} outside the {n} concepts", r.source, r.target));
            }
            if r.source == r.target {
                return invalid(format!("concept '{}' is related to itself", concepts[r.source]));
            }
            if r.weight.is_some_and(|w| !(w >= 0.0 && w.is_finite())) {
                return invalid("relation weights must be finite and non-negative");
            }
        }
        Ok(ConceptSpace { concepts, initial, known, relations })
    }

    /// Loads `tag<TAB>v1 v2 …` vectors and `source<TAB>target<TAB>kind[<TAB>weight]`
    /// relations, `kind` being `equi` or `rel`. Tags that only appear in
    /// relations are unknown.
    pub fn load<V: BufRead, E: BufRead>(vectors: V, edges: E) -> Result<ConceptSpace> {
        let (mut names, vecs) = read_vectors(vectors, '\t')?;
        let mut index: HashMap<String, usize> = names.iter().cloned().enumerate().map(|(k, t)| (t, k)).collect();
        let mut relations = Vec::new();
        for (k, line) in edges.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() < 3 {
                return Err(Error::Parse { line: k + 1, msg: "expected 'source<TAB>target<TAB>kind'".into() });
            }
            let mut id = |t: &str| {
                let next = index.len();
                *index.entry(t.trim().to_string()).or_insert_with(|| {
                    names.push(t.trim().to_string());
                    next
                })
            };
            let (source, target) = (id(f[0]), id(f[1]));
            let kind = match f[2].trim() {
                "equi" => RelationKind::Equivalence,
                "rel" => RelationKind::Related,
                other => return Err(Error::Parse { line: k + 1, msg: format!("unknown relation kind '{other}'") }),
            };
            let weight = match f.get(3) {
                Some(w) => Some(w.trim().parse().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad weight '{w}'") })?),
                None => None,
            };
            relations.push(Relation { source, target, kind, weight });
        }
        let n = names.len();
        let mut initial = Array2::zeros((n, vecs.ncols()));
        initial.slice_mut(ndarray::s![..vecs.nrows(), ..]).assign(&vecs);
        let known = (0..n).map(|i| i < vecs.nrows()).collect();
        ConceptSpace::new(names, initial, known, relations)
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c == tag)
    }

    /// Symmetric coupling `β_ij + β_ji` per neighbour, merged over repeated
    /// relations.
    fn couplings(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.concepts.len();
        let mut degree = vec![0usize; n];
        for r in &self.relations {
            degree[r.source] += 1;
        }
        let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
        for r in &self.relations {
            let beta = match r.kind {
                RelationKind::Equivalence => 1.0,
                RelationKind::Related => r.weight.unwrap_or(1.0 / degree[r.source] as f64),
            };
            *maps[r.source].entry(r.target).or_insert(0.0) += beta;
            *maps[r.target].entry(r.source).or_insert(0.0) += beta;
        }
        maps.into_iter().map(|m| m.into_iter().collect()).collect()
    }

    /// Errors if some connected component has no known vector, in which
    /// case the objective has no unique minimiser.
    fn check_components(&self) -> Result<()> {
        let n = self.concepts.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for r in &self.relations {
            let (a, b) = (find(&mut parent, r.source), find(&mut parent, r.target));
            parent[a] = b;
        }
        let mut anchored = vec![false; n];
        for i in 0..n {
            if self.known[i] {
                let root = find(&mut parent, i);
                anchored[root] = true;
            }
        }
        for i in 0..n {
            if !anchored[find(&mut parent, i)] {
                return invalid(format!("the component containing '{}' has no known vector; its retrofitted vectors are not unique", self.concepts[i]));
            }
        }
        Ok(())
    }
}

/// `Σ_i α_i ‖q_i − q̂_i‖² + Σ_(i,j) β_ij ‖q_i − q_j‖²`.
pub fn retrofit_loss(space: &ConceptSpace, q: &Array2<f64>) -> f64 {
    let sq = |a: ArrayView1<f64>, b: ArrayView1<f64>| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut total = 0.0;
    for i in 0..q.nrows() {
        if space.known[i] {
            total += sq(q.row(i), space.initial.row(i));
        }
    }
    for (i, nb) in space.couplings().iter().enumerate() {
        for &(j, c) in nb {
            if i < j {
                total += c * sq(q.row(i), q.row(j));
            }
        }
    }
    total
}

fn update_row(space: &ConceptSpace, nb: &[(usize, f64)], prev: &Array2<f64>, i: usize) -> Array1<f64> {
    let alpha = if space.known[i] { 1.0 } else { 0.0 };
    let mut num = space.initial.row(i).to_owned() * alpha;
    let mut den = alpha;
    for &(j, c) in nb {
        num.scaled_add(c, &prev.row(j));
        den += c;
    }
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Jacobi iteration of the retrofitting update, from the initial vectors
/// (zero for unknown concepts), until the largest coordinate change drops
/// below `tol` or `max_iters` sweeps ran.
pub fn retrofit(space: &ConceptSpace, max_iters: usize, tol: f64) -> Result<Array2<f64>> {
    space.check_components()?;
    let nb = space.couplings();
    let mut q = space.initial.clone();
    for _ in 0..max_iters {
        let mut next = q.clone();
        for i in 0..q.nrows() {
            next.row_mut(i).assign(&update_row(space, &nb[i], &q, i));
        }
        let change = (&next - &q).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        q = next;
        if change < tol {
            break;
        }
    }
    Ok(q)
}

/// In-place variant updating concepts in the given order within a sweep.
pub fn retrofit_in_order(space: &ConceptSpace, order: &[usize], max_iters: usize, tol: f64) -> Result<Array2<f64>> {
    space.check_components()?;
    let n = space.concepts.len();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return invalid("order must be a permutation of the concepts");
    }
    let nb = space.couplings();
    let mut q = space.initial.clone();
    for _ in 0..max_iters {
        let mut change = 0.0f64;
        for &i in order {
            let row = update_row(space, &nb[i], &q, i);
            change = (&row - &q.row(i)).iter().fold(change, |m, v| m.max(v.abs()));
            q.row_mut(i).assign(&row);
        }
        if change < tol {
            break;
        }
    }
    Ok(q)
}

fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let (na, nb) = (a.dot(&a).sqrt(), b.dot(&b).sqrt());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

/// For every target concept, the sum of its cosine similarities to the
/// source concepts. Zero vectors have cosine 0 with everything.
pub fn annotation_scores(sources: &[usize], targets: &[usize], q: &Array2<f64>) -> Result<Vec<f64>> {
    if sources.is_empty() {
        return invalid("annotation scoring needs at least one source concept");
    }
    if let Some(&bad) = sources.iter().chain(targets).find(|&&i| i >= q.nrows()) {
        return invalid(format!("concept {bad} is not in the embedding"));
    }
    Ok(targets.iter().map(|&t| sources.iter().map(|&s| cosine(q.row(s), q.row(t))).sum()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn space(initial: Array2<f64>, known: Vec<bool>, rel: &[(usize, usize)]) -> ConceptSpace {
        let names = (0..initial.nrows()).map(|i| format!("c{i}")).collect();
        let relations = rel.iter().map(|&(s, t)| Relation { source: s, target: t, kind: RelationKind::Equivalence, weight: None }).collect();
        ConceptSpace::new(names, initial, known, relations).unwrap()
    }

    #[test]
    fn composition_hand_values() {
        let v = array![1.0, -2.0];
        assert_eq!(compose_embedding(&[(Some(v.view()), 3.0)], 2, Composition::Avg).unwrap(), v);
        assert_eq!(compose_embedding(&[(None, 0.0), (None, 1.0)], 2, Composition::Avg).unwrap(), Array1::<f64>::zeros(2));
        let (x, y) = (array![1.0, 0.0], array![0.0, 1.0]);
        let a = 1e-3;
        let out = compose_embedding(&[(Some(x.view()), 0.0), (Some(y.view()), 9997.3)], 2, Composition::Sif { a }).unwrap();
        let (w0, w1) = (a / (a + 1.0 / 2.7), a / (a + 1e-4));
        assert!((out[0] - w0 / 2.0).abs() < 1e-15 && (out[1] - w1 / 2.0).abs() < 1e-15);
        assert!((out[1] / out[0] - w1 / w0).abs() < 1e-9);
    }

    #[test]
    fn first_component_removal_skips_zero_rows() {
        let mut q = array![[3.0, 0.1], [0.0, 0.0], [-2.0, 0.05], [4.0, -0.1]];
        remove_first_component(&mut q);
        assert_eq!(q.row(1).to_vec(), vec![0.0, 0.0]);
        assert!(q.column(0).iter().all(|v| v.abs() < 0.1));
    }

    #[test]
    fn retrofit_fixed_points() {
        let s = space(array![[0.0], [3.0]], vec![true, true], &[(0, 1)]);
        let q = retrofit(&s, 200, 1e-12).unwrap();
        assert!((q[[0, 0]] - 1.0).abs() < 1e-9 && (q[[1, 0]] - 2.0).abs() < 1e-9);

        let lone = space(array![[1.0, 2.0], [5.0, 6.0]], vec![true, true], &[]);
        assert_eq!(retrofit(&lone, 10, 1e-6).unwrap(), lone.initial);

        let unknown = space(array![[1.5, -2.0], [0.0, 0.0]], vec![true, false], &[(1, 0)]);
        let q = retrofit(&unknown, 100, 1e-9).unwrap();
        assert!((&q.row(1) - &array![1.5, -2.0]).iter().all(|v| v.abs() < 1e-9));

        let orphan = space(array![[1.0], [0.0], [0.0]], vec![true, false, false], &[(1, 2)]);
        let err = retrofit(&orphan, 10, 1e-6).unwrap_err().to_string();
        assert!(err.contains("'c1'") && err.contains("no known vector"));
    }

    #[test]
    fn annotation_scores_sum_cosines() {
        let q = array![[1.0, 0.0], [0.0, 1.0], [0.6, 0.8], [0.0, 0.0], [0.2, (1.0f64 - 0.04).sqrt()]];
        assert!((annotation_scores(&[0], &[0], &q).unwrap()[0] - 1.0).abs() < 1e-15);
        assert_eq!(annotation_scores(&[0], &[1, 3], &q).unwrap(), vec![0.0, 0.0]);
        // cos(q2, q0) = 0.6, cos(q4, q0) = 0.2
        assert!((annotation_scores(&[2, 4], &[0], &q).unwrap()[0] - 0.8).abs() < 1e-15);
        assert!(annotation_scores(&[], &[0], &q).is_err());
    }

    #[test]
    fn loads_vectors_and_relations() {
        let vectors = "red apple\t1 0\ngreen apple\t0 1\n";
        let edges = "red apple\tgreen apple\trel\napple\tred apple\tequi\napple\tgreen apple\trel\t0.5\n";
        let s = ConceptSpace::load(vectors.as_bytes(), edges.as_bytes()).unwrap();
        assert_eq!(s.concepts, vec!["red apple", "green apple", "apple"]);
        assert_eq!(s.known, vec![true, true, false]);
        let q = retrofit(&s, 100, 1e-8).unwrap();
        assert!(q.row(2).iter().all(|&v| v > 0.0));
        assert!(ConceptSpace::load(vectors.as_bytes(), "a\tb\tsynonym\n".as_bytes()).is_err());
    }

    #[test]
    fn word_vectors_compose_tags() {
        let wv = WordVectors::read("the 1 1\nred 2 0\napple 0 4\n".as_bytes()).unwrap();
        let q = wv.compose_tags(&["red apple".into(), "unknown thing".into()], Composition::Avg).unwrap();
        assert_eq!(q.row(0).to_vec(), vec![1.0, 2.0]);
        assert_eq!(q.row(1).to_vec(), vec![0.0, 0.0]);
    }
}
