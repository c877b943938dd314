use ndarray::{Array2, ArrayView2};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;

use super::Partition;
use crate::error::{invalid, Error, Result};

/// Lloyd's k-means with k-means++ seeding and several restarts; the fit
/// with the lowest inertia wins.
#[derive(Debug, Clone)]
pub struct KMeans {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub partition: Partition,
    pub centroids: Array2<f64>,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_trace.last().unwrap()
    }
}

impl KMeans {
    pub fn new(k: usize) -> KMeans {
        KMeans { k, restarts: 10, max_iter: 300 }
    }

    pub fn fit(&self, z: ArrayView2<f64>, seed: u64) -> Result<KMeansFit> {
        let n = z.nrows();
        if self.k == 0 || self.k > n {
            return invalid(format!("k = {} must be in 1..={n}", self.k));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("embedding contains non-finite values".into()));
        }
        let mut rng = crate::seeded_rng(seed, 0x6b_6d);
        let mut best: Option<KMeansFit> = None;
        for _ in 0..self.restarts.max(1) {
            let fit = self.lloyd(z, &mut rng);
            if best.as_ref().is_none_or(|b| fit.inertia() < b.inertia()) {
                best = Some(fit);
            }
        }
        Ok(best.unwrap())
    }

    fn lloyd<R: Rng>(&self, z: ArrayView2<f64>, rng: &mut R) -> KMeansFit {
        let (n, d) = z.dim();
        let k = self.k;
        let mut centroids = plus_plus(z, k, rng);
        let mut assign = vec![usize::MAX; n];
        let mut dist = vec![0.0; n];
        let mut trace = Vec::new();
        for _ in 0..self.max_iter {
            let mut changed = false;
            for i in 0..n {
                let (mut c, mut dd) = nearest(z.row(i), &centroids);
                // Ties keep the current cluster.
                if assign[i] != usize::MAX && c != assign[i] {
                    let cur = sq_dist(z, i, &centroids, assign[i]);
                    if cur <= dd {
                        (c, dd) = (assign[i], cur);
                    }
                }
                dist[i] = dd;
                if assign[i] != c {
                    assign[i] = c;
                    changed = true;
                }
            }
            trace.push(dist.iter().sum());
            if !changed {
                break;
            }
            let mut sums = Array2::<f64>::zeros((k, d));
            let mut counts = vec![0usize; k];
            for i in 0..n {
                sums.row_mut(assign[i]).scaled_add(1.0, &z.row(i));
                counts[assign[i]] += 1;
            }
            for c in 0..k {
                if counts[c] == 0 {
                    // Take the point farthest from its centroid.
                    let far = (0..n).filter(|&i| counts[assign[i]] > 1).max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                    if let Some(i) = far {
                        let old = assign[i];
                        sums.row_mut(old).scaled_add(-1.0, &z.row(i));
                        counts[old] -= 1;
                        sums.row_mut(c).assign(&z.row(i));
                        counts[c] = 1;
                        assign[i] = c;
                        dist[i] = 0.0;
                    }
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    let row = sums.row(c).mapv(|v| v / counts[c] as f64);
                    centroids.row_mut(c).assign(&row);
                }
            }
        }
        KMeansFit { partition: Partition::from_labels(&assign), centroids, inertia_trace: trace }
    }
}

fn nearest(x: ndarray::ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d: f64 = row.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus<R: Rng>(z: ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let (n, d) = z.dim();
    let mut centroids = Array2::zeros((k, d));
    centroids.row_mut(0).assign(&z.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z, i, &centroids, 0)).collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // All points coincide with chosen centroids.
            Err(_) => rng.random_range(0..n),
        };
        centroids.row_mut(c).assign(&z.row(pick));
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(z, i, &centroids, c));
        }
    }
    centroids
}

fn sq_dist(z: ArrayView2<f64>, i: usize, centroids: &Array2<f64>, c: usize) -> f64 {
    z.row(i).iter().zip(centroids.row(c)).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// k-means++ / Lloyd with the default number of restarts.
pub fn kmeans(z: ArrayView2<f64>, k: usize, seed: u64) -> Result<Partition> {
    Ok(KMeans::new(k).fit(z, seed)?.partition)
}
