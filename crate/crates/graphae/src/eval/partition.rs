use std::collections::HashMap;

use crate::clustering::Partition;
use crate::error::{invalid, Error, Result};

struct Contingency {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    cells: HashMap<(usize, usize), usize>,
}

impl Contingency {
    fn new(a: &Partition, b: &Partition) -> Result<Contingency> {
        if a.n() != b.n() {
            return Err(Error::Dimension(format!("partitions cover {} and {} nodes", a.n(), b.n())));
        }
        if a.n() < 2 {
            return invalid("partition comparison needs at least two nodes");
        }
        let mut cells = HashMap::new();
        for (&x, &y) in a.assignment().iter().zip(b.assignment()) {
            *cells.entry((x, y)).or_insert(0) += 1;
        }
        Ok(Contingency { n: a.n(), rows: a.sizes(), cols: b.sizes(), cells })
    }
}

fn entropy(sizes: &[usize], n: f64) -> f64 {
    sizes.iter().filter(|&&s| s > 0).map(|&s| {
        let p = s as f64 / n;
        -p * p.ln()
    }).sum()
}

/// Adjusted mutual information with arithmetic-mean normalisation and the
/// hypergeometric expected-MI model.
pub fn ami(a: &Partition, b: &Partition) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let n = t.n;
    if (t.rows.len() == 1 && t.cols.len() == 1) || (t.rows.len() == n && t.cols.len() == n) {
        return Ok(1.0);
    }
    let nf = n as f64;
    let mi: f64 = t.cells.iter().map(|(&(i, j), &c)| {
        let c = c as f64;
        c / nf * (nf * c / (t.rows[i] as f64 * t.cols[j] as f64)).ln()
    }).sum();
    let mut ln_fact = vec![0.0; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let mut emi = 0.0;
    for &ai in &t.rows {
        for &bj in &t.cols {
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            let fixed = ln_fact[ai] + ln_fact[bj] + ln_fact[n - ai] + ln_fact[n - bj] - ln_fact[n];
            for nij in lo..=hi {
                let log_p = fixed - ln_fact[nij] - ln_fact[ai - nij] - ln_fact[bj - nij] - ln_fact[n + nij - ai - bj];
                let x = nij as f64;
                emi += x / nf * (nf * x / (ai as f64 * bj as f64)).ln() * log_p.exp();
            }
        }
    }
    let mean_h = (entropy(&t.rows, nf) + entropy(&t.cols, nf)) / 2.0;
    let denom = mean_h - emi;
    let denom = if denom.abs() < f64::EPSILON { f64::EPSILON.copysign(denom) } else { denom };
    Ok((mi - emi) / denom)
}

/// Adjusted Rand index.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let pairs = |k: usize| (k * k.saturating_sub(1) / 2) as f64;
    let index: f64 = t.cells.values().map(|&c| pairs(c)).sum();
    let sa: f64 = t.rows.iter().map(|&k| pairs(k)).sum();
    let sb: f64 = t.cols.iter().map(|&k| pairs(k)).sum();
    let expected = sa * sb / pairs(t.n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
