//! Threshold-free ranking metrics. Tied scores form a single threshold
//! block, so results never depend on input order.

use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Precondition(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    Ok((positives, labels.len() - positives))
}

/// Indices sorted by descending score, split into runs of equal score.
fn tie_blocks(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
        .chunk_by(|&a, &b| scores[a] == scores[b])
        .map(<[usize]>::to_vec)
        .collect()
}

/// Area under the ROC curve as the Mann-Whitney statistic
/// `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (positives, negatives) = check(scores, labels)?;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric("AUROC needs both classes".into()));
    }
    // walk from the highest score down, counting negatives still below
    let mut negatives_below = negatives as f64;
    let mut wins = 0.0;
    for block in tie_blocks(scores) {
        let pos = block.iter().filter(|&&i| labels[i]).count() as f64;
        let neg = block.len() as f64 - pos;
        negatives_below -= neg;
        wins += pos * (negatives_below + 0.5 * neg);
    }
    Ok(wins / (positives as f64 * negatives as f64))
}

/// Step-wise area under the precision-recall curve: the sum of
/// `Δrecall * precision` over descending score thresholds.
pub fn aupr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (positives, _) = check(scores, labels)?;
    if positives == 0 {
        return Err(Error::UndefinedMetric("AUPR needs at least one positive".into()));
    }
    let total = positives as f64;
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut area = 0.0;
    for block in tie_blocks(scores) {
        let hits = block.iter().filter(|&&i| labels[i]).count();
        tp += hits;
        seen += block.len();
        if hits > 0 {
            area += (hits as f64 / total) * (tp as f64 / seen as f64);
        }
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation() {
        let scores = [0.9, 0.8, 0.1];
        let labels = [true, false, false];
        assert_eq!(auroc(&scores, &labels).unwrap(), 1.0);
        assert_eq!(aupr(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn all_ties() {
        let scores = [0.3; 5];
        let labels = [true, false, true, false, false];
        assert_eq!(auroc(&scores, &labels).unwrap(), 0.5);
        assert!((aupr(&scores, &labels).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn positive_ranked_last() {
        let scores = [4.0, 3.0, 2.0, 1.0];
        let labels = [false, false, false, true];
        assert!((aupr(&scores, &labels).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(auroc(&scores, &labels).unwrap(), 0.0);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(
            auroc(&[1.0, 2.0], &[true, true]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(
            aupr(&[1.0, 2.0], &[false, false]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(aupr(&[f64::NAN], &[true]), Err(Error::NonFiniteScore(0))));
        assert!(auroc(&[1.0], &[true, false]).is_err());
    }
}
