use ndarray::{s, Array2, ArrayView2};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    /// `σ(z_iᵀ z_j)`; symmetric.
    InnerProduct,
    /// First half of `z` is a source vector, second half a target vector:
    /// `σ(s_iᵀ t_j)`.
    SourceTarget,
    /// `σ(m_j − λ log ‖z_i − z_j‖²)`, where the last column of `z` is the
    /// mass `m`.
    Gravity,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::InnerProduct => "inner_product",
            DecoderKind::SourceTarget => "source_target",
            DecoderKind::Gravity => "gravity",
        }
    }

    pub fn parse(s: &str) -> Result<DecoderKind> {
        match s {
            "inner_product" => Ok(DecoderKind::InnerProduct),
            "source_target" => Ok(DecoderKind::SourceTarget),
            "gravity" => Ok(DecoderKind::Gravity),
            _ => invalid(format!("unknown decoder '{s}' (expected inner_product, source_target or gravity)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub kind: DecoderKind,
    /// Weight of the distance term (gravity only).
    pub lambda: f64,
    /// Floor on squared distances before the logarithm (gravity only).
    pub dist_floor: f64,
}

impl DecoderConfig {
    pub fn inner_product() -> DecoderConfig {
        DecoderConfig { kind: DecoderKind::InnerProduct, lambda: 1.0, dist_floor: 1e-16 }
    }

    pub fn source_target() -> DecoderConfig {
        DecoderConfig { kind: DecoderKind::SourceTarget, ..DecoderConfig::inner_product() }
    }

    pub fn gravity(lambda: f64) -> DecoderConfig {
        DecoderConfig { kind: DecoderKind::Gravity, lambda, dist_floor: 1e-16 }
    }

    /// Encoder output width for embedding dimension `d`.
    pub fn output_dim(&self, d: usize) -> usize {
        match self.kind {
            DecoderKind::Gravity => d + 1,
            _ => d,
        }
    }

    pub(crate) fn validate(&self, out_dim: usize) -> Result<()> {
        match self.kind {
            DecoderKind::SourceTarget if out_dim % 2 != 0 => {
                invalid(format!("source/target decoding needs an even dimension, got {out_dim}"))
            }
            DecoderKind::Gravity if out_dim < 2 => invalid("gravity decoding needs at least one coordinate plus the mass"),
            DecoderKind::Gravity if self.lambda < 0.0 || self.dist_floor <= 0.0 => {
                invalid("gravity decoding needs lambda >= 0 and a positive distance floor")
            }
            _ => Ok(()),
        }
    }

    /// Columns of `z` that live in the metric/inner-product space (drops the mass).
    pub(crate) fn space_dim(&self, out_dim: usize) -> usize {
        match self.kind {
            DecoderKind::Gravity => out_dim - 1,
            _ => out_dim,
        }
    }
}

/// Logit of the edge `i → j`.
pub fn pair_logit(z: ArrayView2<f64>, i: usize, j: usize, cfg: &DecoderConfig) -> f64 {
    let d = z.ncols();
    match cfg.kind {
        DecoderKind::InnerProduct => z.row(i).dot(&z.row(j)),
        DecoderKind::SourceTarget => {
            let h = d / 2;
            z.slice(s![i, ..h]).dot(&z.slice(s![j, h..]))
        }
        DecoderKind::Gravity => {
            let e = d - 1;
            let dist: f64 = if i == j {
                0.0
            } else {
                z.slice(s![i, ..e]).iter().zip(z.slice(s![j, ..e])).map(|(a, b)| (a - b) * (a - b)).sum()
            };
            z[[j, e]] - cfg.lambda * dist.max(cfg.dist_floor).ln()
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Edge probabilities for the given ordered pairs.
pub fn decode(z: ArrayView2<f64>, pairs: &[(usize, usize)], cfg: &DecoderConfig) -> Result<Vec<f64>> {
    cfg.validate(z.ncols())?;
    let n = z.nrows();
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= n || j >= n) {
        return invalid(format!("pair ({i}, {j}) out of range for {n} nodes"));
    }
    Ok(pairs.iter().map(|&(i, j)| sigmoid(pair_logit(z, i, j, cfg))).collect())
}

/// Logits of every pair between `rows` and `cols` (given as gathered
/// embedding rows). `diag_offset` marks where the global diagonal falls:
/// row `r` and column `r + diag_offset` are the same node.
pub(crate) fn logits_block(
    zr: ArrayView2<f64>,
    zc: ArrayView2<f64>,
    cfg: &DecoderConfig,
    sq_r: &[f64],
    sq_c: &[f64],
    diag_offset: Option<usize>,
) -> Array2<f64> {
    let d = zr.ncols();
    match cfg.kind {
        DecoderKind::InnerProduct => zr.dot(&zc.t()),
        DecoderKind::SourceTarget => {
            let h = d / 2;
            zr.slice(s![.., ..h]).dot(&zc.slice(s![.., h..]).t())
        }
        DecoderKind::Gravity => {
            let e = d - 1;
            let mut out = zr.slice(s![.., ..e]).dot(&zc.slice(s![.., ..e]).t());
            let mass = zc.column(e);
            let (lam, floor) = (cfg.lambda, cfg.dist_floor);
            for (r, mut row) in out.rows_mut().into_iter().enumerate() {
                let diag = diag_offset.map(|o| r + o);
                for (c, v) in row.iter_mut().enumerate() {
                    let dist = if diag == Some(c) { 0.0 } else { (sq_r[r] + sq_c[c] - 2.0 * *v).max(0.0) };
                    *v = mass[c] - lam * dist.max(floor).ln();
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn orthogonal_inner_product_is_half() {
        let z = array![[1.0, 0.0], [0.0, 2.0]];
        assert_eq!(decode(z.view(), &[(0, 1)], &DecoderConfig::inner_product()).unwrap(), vec![0.5]);
    }

    #[test]
    fn gravity_hand_values() {
        let z = array![[0.0, 0.0, 0.0], [1.0, 0.0, 2.0]];
        let p = decode(z.view(), &[(0, 1), (1, 0)], &DecoderConfig::gravity(1.0)).unwrap();
        assert!((p[0] - 0.880_797_077_977_882_3).abs() < 1e-12);
        assert_eq!(p[1], 0.5);
        let unit = array![[0.0, 0.0, 5.0], [0.6, 0.8, 0.0]];
        assert_eq!(decode(unit.view(), &[(0, 1)], &DecoderConfig::gravity(1.0)).unwrap(), vec![0.5]);
    }

    #[test]
    fn source_target_needs_even_width() {
        let z = array![[1.0, 2.0, 3.0]];
        assert!(decode(z.view(), &[(0, 0)], &DecoderConfig::source_target()).is_err());
        let z = array![[1.0, 0.0], [0.0, 1.0]];
        let p = decode(z.view(), &[(0, 1), (1, 0)], &DecoderConfig::source_target()).unwrap();
        assert_eq!(p, vec![sigmoid(1.0), 0.5]);
    }

    #[test]
    fn block_logits_match_pairwise() {
        let z = Array2::from_shape_fn((5, 5), |(i, j)| ((i * 5 + j) as f64 * 0.37).sin());
        let sq: Vec<f64> = z.rows().into_iter().map(|r| r.slice(s![..4]).dot(&r.slice(s![..4]))).collect();
        for cfg in [DecoderConfig::inner_product(), DecoderConfig::gravity(0.7)] {
            let block = logits_block(z.slice(s![1..3, ..]), z.view(), &cfg, &sq[1..3], &sq, Some(1));
            for r in 0..2 {
                for c in 0..5 {
                    assert!((block[[r, c]] - pair_logit(z.view(), r + 1, c, &cfg)).abs() < 1e-9);
                }
            }
        }
    }
}
