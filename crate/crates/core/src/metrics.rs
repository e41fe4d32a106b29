//! Evaluation and agreement statistics.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Average (fractional) ranks, 1-based; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant sequence".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson over average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Undefined(format!("Spearman needs at least 3 points, got {}", x.len())));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub rho: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub beta: f64,
    pub n: usize,
}

/// `(1 + β²) P R / (β² P + R)`, or 0 when `P + R = 0`.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if precision + recall == 0.0 || denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Precision, recall and F_β over the keys both maps share.
pub fn precision_recall_fbeta(
    pred: &BTreeMap<String, bool>,
    gold: &BTreeMap<String, bool>,
    beta: f64,
) -> Result<EvalResult> {
    let (mut tp, mut fp, mut fn_, mut n) = (0usize, 0usize, 0usize, 0usize);
    for (k, &p) in pred {
        let Some(&g) = gold.get(k) else { continue };
        n += 1;
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if n == 0 {
        return Err(Error::InvalidInput("predictions and gold share no keys".into()));
    }
    if tp + fn_ == 0 {
        return Err(Error::Undefined("gold has no positive labels".into()));
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(EvalResult {
        rho: None,
        precision,
        recall,
        f_beta: f_beta(precision, recall, beta),
        beta,
        n,
    })
}

/// Difference function for Krippendorff's α.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlphaMetric {
    Nominal,
    #[default]
    Ordinal,
    Interval,
}

/// Ratings as annotators × items; `None` marks a missing rating.
pub type RatingMatrix = [Vec<Option<f64>>];

fn check_rectangular(ratings: &RatingMatrix) -> Result<usize> {
    let items = ratings.first().map_or(0, Vec::len);
    if ratings.iter().any(|r| r.len() != items) {
        return Err(Error::InvalidInput("rating matrix rows differ in length".into()));
    }
    Ok(items)
}

/// Krippendorff's α with the ordinal difference function.
pub fn krippendorff_alpha(ratings: &RatingMatrix) -> Result<f64> {
    krippendorff_alpha_with(ratings, AlphaMetric::Ordinal)
}

/// Krippendorff's α from the coincidence matrix of pairable values.
pub fn krippendorff_alpha_with(ratings: &RatingMatrix, metric: AlphaMetric) -> Result<f64> {
    let items = check_rectangular(ratings)?;
    let mut values: Vec<f64> = ratings.iter().flatten().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let index = |v: f64| values.binary_search_by(|x| x.total_cmp(&v)).unwrap();
    let m = values.len();

    let mut coincidence = vec![vec![0.0; m]; m];
    let mut pairable_units = 0;
    for item in 0..items {
        let unit: Vec<usize> = ratings.iter().filter_map(|r| r[item]).map(index).collect();
        if unit.len() < 2 {
            continue;
        }
        pairable_units += 1;
        let w = 1.0 / (unit.len() - 1) as f64;
        for (i, &c) in unit.iter().enumerate() {
            for (j, &k) in unit.iter().enumerate() {
                if i != j {
                    coincidence[c][k] += w;
                }
            }
        }
    }
    if pairable_units == 0 {
        return Err(Error::Undefined("no item has two or more ratings".into()));
    }
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let total: f64 = marginals.iter().sum();

    let delta = |c: usize, k: usize| -> f64 {
        match metric {
            AlphaMetric::Nominal => f64::from(u8::from(c != k)),
            AlphaMetric::Interval => (values[c] - values[k]).powi(2),
            AlphaMetric::Ordinal => {
                let (lo, hi) = if c <= k { (c, k) } else { (k, c) };
                let s: f64 = marginals[lo..=hi].iter().sum::<f64>() - (marginals[lo] + marginals[hi]) / 2.0;
                s * s
            }
        }
    };
    let (mut observed, mut expected) = (0.0, 0.0);
    for c in 0..m {
        for k in 0..m {
            let d = delta(c, k);
            observed += coincidence[c][k] * d;
            expected += marginals[c] * marginals[k] * d;
        }
    }
    if expected == 0.0 {
        return Err(Error::Undefined("all pairable ratings share one value".into()));
    }
    Ok(1.0 - (total - 1.0) * observed / expected)
}

/// Mean of per-annotator-pair Spearman ρ over commonly rated items, weighted by overlap.
///
/// Pairs with fewer than 3 common items or constant ratings are skipped.
pub fn pairwise_spearman_mean(ratings: &RatingMatrix) -> Result<f64> {
    let items = check_rectangular(ratings)?;
    let (mut weighted, mut weight) = (0.0, 0.0);
    for a in 0..ratings.len() {
        for b in a + 1..ratings.len() {
            let (x, y): (Vec<f64>, Vec<f64>) = (0..items)
                .filter_map(|i| Some((ratings[a][i]?, ratings[b][i]?)))
                .unzip();
            if x.len() < 3 {
                continue;
            }
            if let Ok(rho) = spearman_rho(&x, &y) {
                weighted += rho * x.len() as f64;
                weight += x.len() as f64;
            }
        }
    }
    if weight == 0.0 {
        return Err(Error::Undefined("no annotator pair with 3 or more common non-constant ratings".into()));
    }
    Ok(weighted / weight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, bool)]) -> BTreeMap<String, bool> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn spearman_extremes() {
        let x = [1.0, 5.0, 2.0, 8.0];
        assert!((spearman_rho(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((spearman_rho(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_with_ties_hand_computed() {
        // ranks x: 1, 2.5, 2.5, 4; y: 1, 3, 2, 4
        // deviations from 2.5: x (-1.5, 0, 0, 1.5), y (-1.5, 0.5, -0.5, 1.5)
        // sxy = 4.5, sxx = 4.5, syy = 5  ->  4.5 / sqrt(22.5)
        let rho = spearman_rho(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 4.5 / 22.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn fbeta_definitions() {
        assert_eq!(f_beta(0.0, 0.0, 0.5), 0.0);
        assert!((f_beta(1.0, 1.0, 0.5) - 1.0).abs() < 1e-12);
        let gold = map(&[("a", true), ("b", false), ("c", true), ("d", false)]);
        let r = precision_recall_fbeta(&gold, &gold, 0.5).unwrap();
        assert_eq!((r.precision, r.recall, r.f_beta, r.n), (1.0, 1.0, 1.0, 4));
        let none = map(&[("a", false), ("b", false), ("c", false), ("d", false)]);
        let r = precision_recall_fbeta(&none, &gold, 0.5).unwrap();
        assert_eq!((r.precision, r.f_beta), (0.0, 0.0));
        assert!(precision_recall_fbeta(&gold, &none, 0.5).is_err());
        assert!(precision_recall_fbeta(&map(&[("z", true)]), &gold, 0.5).is_err());
    }

    #[test]
    fn alpha_perfect_agreement() {
        let r = vec![
            vec![Some(1.0), Some(2.0), Some(4.0), None],
            vec![Some(1.0), Some(2.0), Some(4.0), Some(3.0)],
            vec![None, Some(2.0), Some(4.0), Some(3.0)],
        ];
        assert!((krippendorff_alpha(&r).unwrap() - 1.0).abs() < 1e-12);
        assert!(krippendorff_alpha(&[vec![Some(1.0), None], vec![None, Some(2.0)]]).is_err());
    }

    #[test]
    fn pairwise_spearman_rules() {
        let a = vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0), None, None];
        let r = vec![a.clone(), a.clone()];
        assert!((pairwise_spearman_mean(&r).unwrap() - 1.0).abs() < 1e-12);
        // third annotator shares nothing with the first two
        let c = vec![None, None, None, None, Some(1.0), Some(2.0)];
        let r = vec![a.clone(), a, c];
        assert!((pairwise_spearman_mean(&r).unwrap() - 1.0).abs() < 1e-12);
        assert!(pairwise_spearman_mean(&[vec![Some(1.0)], vec![Some(1.0)]]).is_err());
    }
}
