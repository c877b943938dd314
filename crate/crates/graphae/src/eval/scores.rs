use crate::error::{invalid, Error, Result};

fn check(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    Ok(())
}

/// Indices sorted by descending score.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Area under the ROC curve as the Mann–Whitney statistic; tied
/// positive/negative pairs count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return invalid("AUC needs both positive and negative examples");
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of midranks of the positives.
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < idx.len() {
        let mut end = k;
        while end + 1 < idx.len() && scores[idx[end + 1]] == scores[idx[k]] {
            end += 1;
        }
        let mid = (k + end) as f64 / 2.0 + 1.0;
        rank_sum += mid * idx[k..=end].iter().filter(|&&i| labels[i]).count() as f64;
        k = end + 1;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Step-wise average precision over the score-sorted list. Equal scores
/// form one threshold, so tied items share a precision value.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 {
        return invalid("average precision needs at least one positive");
    }
    let idx = descending(scores);
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut k = 0;
    while k < idx.len() {
        let mut end = k;
        while end + 1 < idx.len() && scores[idx[end + 1]] == scores[idx[k]] {
            end += 1;
        }
        let hits = idx[k..=end].iter().filter(|&&i| labels[i]).count();
        tp += hits;
        seen += end - k + 1;
        ap += hits as f64 * (tp as f64 / seen as f64);
        k = end + 1;
    }
    Ok(ap / pos as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingMetrics {
    pub recall: f64,
    pub map: f64,
    pub ndcg: f64,
}

/// Recall, MAP and NDCG of the first `k` predictions against weighted
/// ground truth (use weight 1 for binary relevance).
pub fn ranking_metrics(predicted: &[usize], truth: &[(usize, f64)], k: usize) -> Result<RankingMetrics> {
    if k == 0 {
        return invalid("K must be at least 1");
    }
    if truth.is_empty() {
        return invalid("ranking metrics need a non-empty ground truth");
    }
    let gain: std::collections::HashMap<usize, f64> = truth.iter().copied().collect();
    let top = &predicted[..k.min(predicted.len())];
    let (mut hits, mut prec_sum, mut dcg) = (0usize, 0.0, 0.0);
    for (r, item) in top.iter().enumerate() {
        if let Some(&g) = gain.get(item) {
            hits += 1;
            prec_sum += hits as f64 / (r + 1) as f64;
            dcg += g / ((r + 2) as f64).log2();
        }
    }
    let mut ideal: Vec<f64> = gain.values().copied().collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(r, g)| g / ((r + 2) as f64).log2()).sum();
    Ok(RankingMetrics {
        recall: hits as f64 / gain.len() as f64,
        map: if hits == 0 { 0.0 } else { prec_sum / hits as f64 },
        ndcg: if idcg > 0.0 { dcg / idcg } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_auc(s: &[f64], l: &[bool]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..s.len() {
            for j in 0..s.len() {
                if l[i] && !l[j] {
                    den += 1.0;
                    num += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        num / den
    }

    #[test]
    fn pairs_tied_with_their_reversal_give_exactly_one_half() {
        let k = 543;
        let scores: Vec<f64> = (0..2 * k).map(|i| ((i % k) as f64 * 0.37).sin()).collect();
        let labels: Vec<bool> = (0..2 * k).map(|i| i < k).collect();
        assert_eq!(auc(&scores, &labels).unwrap(), 0.5);
        assert_eq!(average_precision(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn auc_hand_values() {
        assert_eq!(auc(&[0.9, 0.8, 0.2], &[true, true, false]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3, 0.3], &[true, false]).unwrap(), 0.5);
        assert_eq!(auc(&[0.9, 0.8, 0.7, 0.1], &[true, false, true, false]).unwrap(), 0.75);
        assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
        let s = [0.1, 0.4, 0.4, 0.4, 0.9, 0.2, 0.2, 0.7];
        let l = [true, false, true, true, false, false, true, true];
        assert!((auc(&s, &l).unwrap() - brute_auc(&s, &l)).abs() < 1e-15);
    }

    #[test]
    fn ap_hand_values() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(), 1.0);
        assert!((average_precision(&[0.9, 0.5, 0.1], &[true, false, true]).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(average_precision(&[0.1, 0.5], &[true, true]).unwrap(), 1.0);
        // Each positive tied with one negative.
        assert_eq!(average_precision(&[0.9, 0.9, 0.3, 0.3], &[true, false, false, true]).unwrap(), 0.5);
        assert!(average_precision(&[0.1], &[false]).is_err());
    }

    #[test]
    fn ranking_hand_values() {
        let truth: Vec<(usize, f64)> = (0..20).map(|i| (i, 1.0)).collect();
        let pred: Vec<usize> = (15..35).collect();
        assert_eq!(ranking_metrics(&pred, &truth, 20).unwrap().recall, 0.25);
        let m = ranking_metrics(&[9, 1], &[(1, 1.0)], 2).unwrap();
        assert_eq!((m.map, m.recall), (0.5, 1.0));
        let graded = [(4, 3.0), (2, 2.0), (7, 1.0)];
        assert!((ranking_metrics(&[4, 2, 7], &graded, 3).unwrap().ndcg - 1.0).abs() < 1e-15);
        assert!(ranking_metrics(&[7, 2, 4], &graded, 3).unwrap().ndcg < 1.0);
        assert!(ranking_metrics(&[1], &[], 1).is_err());
    }
}
