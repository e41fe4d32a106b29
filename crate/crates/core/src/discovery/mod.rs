//! Graded ranking, `mu + t * sigma` binarization, threshold tuning and the
//! end-to-end discovery pipeline.

mod backend;
mod io;
mod population;
mod report;

pub use backend::{ChangeBackend, SkipReason, TokenBackend, TokenMeasure, TypeBackend};
pub use io::{read_labels, read_scores, write_labels, write_scores};
pub use population::{full_population, sample_population, AreaSummary, Population, PopulationSource, FREQUENCY_AREAS};
pub use report::{discover, subsample, DiscoveryConfig, DiscoveryReport, PopulationSpec, ReportRow, ThresholdSpec};

use crate::metrics::precision_recall_fbeta;
use crate::numeric;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    /// Cosine distance of aligned type vectors.
    Cd,
    /// Average pairwise distance of usage vectors.
    Apd,
    /// Cosine distance of usage-vector centroids.
    Cos,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Cd => "CD",
            Measure::Apd => "APD",
            Measure::Cos => "COS",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cd" => Ok(Measure::Cd),
            "apd" => Ok(Measure::Apd),
            "cos" => Ok(Measure::Cos),
            other => Err(Error::InvalidInput(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradedRanking {
    pub scores: BTreeMap<String, f64>,
    pub measure: Measure,
}

impl GradedRanking {
    pub fn new(scores: BTreeMap<String, f64>, measure: Measure) -> Result<Self> {
        if let Some((w, s)) = scores.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("score of `{w}` is not finite ({s})")));
        }
        Ok(GradedRanking { scores, measure })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Lemmas by descending score, ties by lemma.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.scores.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn restricted_to<'a>(&self, lemmas: impl IntoIterator<Item = &'a String>) -> GradedRanking {
        let scores = lemmas
            .into_iter()
            .filter_map(|l| self.scores.get(l).map(|s| (l.clone(), *s)))
            .collect();
        GradedRanking {
            scores,
            measure: self.measure,
        }
    }
}

/// Result of grading a population: scores plus lemmas the backend could not score.
#[derive(Clone, Debug, PartialEq)]
pub struct Graded {
    pub ranking: GradedRanking,
    pub skipped: Vec<(String, SkipReason)>,
}

pub fn grade_population(population: &Population, backend: &dyn ChangeBackend) -> Result<Graded> {
    let outcomes: Vec<(String, std::result::Result<f64, SkipReason>)> = population
        .lemmas
        .par_iter()
        .map(|l| (l.clone(), backend.score(l)))
        .collect();
    let mut scores = BTreeMap::new();
    let mut skipped = Vec::new();
    for (lemma, outcome) in outcomes {
        match outcome {
            Ok(s) if s.is_finite() => {
                scores.insert(lemma, s);
            }
            Ok(s) => skipped.push((lemma, SkipReason::Failed(format!("non-finite score {s}")))),
            Err(reason) => skipped.push((lemma, reason)),
        }
    }
    Ok(Graded {
        ranking: GradedRanking::new(scores, backend.measure())?,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryPrediction {
    pub labels: BTreeMap<String, bool>,
    pub threshold: f64,
    pub t: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl BinaryPrediction {
    pub fn positives(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().filter(|(_, &v)| v).map(|(k, _)| k.as_str())
    }
}

/// Label a lemma as changed iff its score is at least `mu + t * sigma`,
/// with mean and population standard deviation taken over the ranking.
pub fn binarize(ranking: &GradedRanking, t: f64) -> Result<BinaryPrediction> {
    if ranking.is_empty() {
        return Err(Error::InvalidInput("cannot binarize an empty ranking".into()));
    }
    let values: Vec<f64> = ranking.scores.values().copied().collect();
    let mu = numeric::mean(&values);
    let sigma = numeric::population_std(&values, mu);
    let threshold = mu + t * sigma;
    let labels = ranking
        .scores
        .iter()
        .map(|(k, &s)| (k.clone(), s >= threshold))
        .collect();
    Ok(BinaryPrediction {
        labels,
        threshold,
        t,
        mu,
        sigma,
    })
}

/// The tuning grid: -2.0 to 2.0 in steps of 0.1 (41 points).
pub fn threshold_grid() -> Vec<f64> {
    (-20..=20).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: f64,
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub positives: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub t_best: f64,
    pub f05: f64,
    pub grid: Vec<GridPoint>,
}

/// Grid-search `t` for the best F0.5; ties go to the larger `t`.
pub fn tune_threshold(ranking: &GradedRanking, gold: &BTreeMap<String, bool>) -> Result<Tuning> {
    if let Some(missing) = ranking.scores.keys().find(|k| !gold.contains_key(*k)) {
        return Err(Error::InvalidInput(format!("gold has no label for `{missing}`")));
    }
    let gold: BTreeMap<String, bool> = ranking
        .scores
        .keys()
        .map(|k| (k.clone(), gold[k]))
        .collect();
    if !gold.values().any(|&g| g) {
        return Err(Error::Undefined("gold has no positive labels".into()));
    }
    let mut grid = Vec::with_capacity(41);
    for t in threshold_grid() {
        let pred = binarize(ranking, t)?;
        let eval = precision_recall_fbeta(&pred.labels, &gold, 0.5)?;
        grid.push(GridPoint {
            t,
            precision: eval.precision,
            recall: eval.recall,
            f05: eval.f_beta,
            positives: pred.positives().count(),
        });
    }
    let best = grid
        .iter()
        .fold(None::<&GridPoint>, |best, p| match best {
            Some(b) if b.f05 > p.f05 => Some(b),
            _ => Some(p),
        })
        .expect("non-empty grid");
    Ok(Tuning {
        t_best: best.t,
        f05: best.f05,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(pairs: &[(&str, f64)]) -> GradedRanking {
        GradedRanking::new(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(), Measure::Cd).unwrap()
    }

    #[test]
    fn binarize_inclusive_threshold() {
        let r = ranking(&[("a", 0.1), ("b", 0.2), ("c", 0.3)]);
        let p = binarize(&r, 0.0).unwrap();
        assert!((p.threshold - 0.2).abs() < 1e-15);
        assert_eq!(p.labels.values().copied().collect::<Vec<_>>(), vec![false, true, true]);
        let p = binarize(&r, 10.0).unwrap();
        assert!(p.labels.values().all(|v| !v));
        assert!(binarize(&ranking(&[]), 0.0).is_err());
    }

    #[test]
    fn grid_has_41_points() {
        let g = threshold_grid();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[40], 2.0);
        assert_eq!(g[30], 1.0);
    }

    #[test]
    fn tuning_recovers_realizable_gold() {
        let r = ranking(&[("a", 0.05), ("b", 0.1), ("c", 0.15), ("d", 0.3), ("e", 0.32), ("f", 0.6), ("g", 0.2)]);
        let gold = binarize(&r, 0.5).unwrap().labels;
        let tuning = tune_threshold(&r, &gold).unwrap();
        assert_eq!(tuning.grid.len(), 41);
        assert_eq!(tuning.f05, 1.0);
        let at_half = tuning.grid.iter().find(|g| (g.t - 0.5).abs() < 1e-12).unwrap();
        assert_eq!(at_half.f05, 1.0);
        // ties go to the largest t
        assert!(tuning.grid.iter().all(|g| g.f05 < 1.0 || g.t <= tuning.t_best));
        let again = binarize(&r, tuning.t_best).unwrap();
        assert_eq!(again.labels, gold);
    }

    #[test]
    fn tuning_needs_positive_gold() {
        let r = ranking(&[("a", 0.1), ("b", 0.2)]);
        let gold: BTreeMap<String, bool> = [("a".into(), false), ("b".into(), false)].into();
        assert!(matches!(tune_threshold(&r, &gold), Err(Error::Undefined(_))));
        let partial: BTreeMap<String, bool> = [("a".into(), true)].into();
        assert!(tune_threshold(&r, &partial).is_err());
    }

    #[test]
    fn non_finite_scores_rejected() {
        let scores: BTreeMap<String, f64> = [("a".to_string(), f64::NAN)].into();
        assert!(GradedRanking::new(scores, Measure::Apd).is_err());
    }
}
