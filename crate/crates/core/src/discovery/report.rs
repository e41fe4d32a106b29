use super::{binarize, grade_population, tune_threshold, BinaryPrediction, ChangeBackend, GradedRanking, Measure, Tuning};
use super::{full_population, sample_population, Population};
use crate::corpus::{build_vocabulary, extract_usages, filter_candidate, Corpus, FilterConfig, FilterVerdict};
use crate::{seed, Error, Result};
use rand::seq::index;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub enum PopulationSpec {
    FullVocabulary,
    Sample { size: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ThresholdSpec {
    Fixed(f64),
    /// Tune `t` on these labelled lemmas (scored with the same backend), then apply it.
    Tune(BTreeMap<String, bool>),
}

#[derive(Clone, Debug)]
pub struct DiscoveryConfig {
    pub population: PopulationSpec,
    pub exclude: BTreeSet<String>,
    pub seed: u64,
    pub threshold: ThresholdSpec,
    pub filter: FilterConfig,
    /// Usages drawn per period when filtering a positive.
    pub filter_usages: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            population: PopulationSpec::Sample { size: 500 },
            exclude: BTreeSet::new(),
            seed: 0,
            threshold: ThresholdSpec::Fixed(1.0),
            filter: FilterConfig::default(),
            filter_usages: 100,
        }
    }
}

/// Per-lemma provenance through grade, binarize and filter.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub lemma: String,
    pub score: Option<f64>,
    pub label: Option<bool>,
    /// Present only for predicted positives.
    pub verdict: Option<FilterVerdict>,
    pub skipped: Option<String>,
}

impl ReportRow {
    pub fn survives(&self) -> bool {
        self.label == Some(true) && self.verdict.as_ref().is_some_and(FilterVerdict::passed)
    }
}

#[derive(Clone, Debug)]
pub struct DiscoveryReport {
    pub measure: Measure,
    pub population: Population,
    pub ranking: GradedRanking,
    pub prediction: Option<BinaryPrediction>,
    pub tuning: Option<Tuning>,
    /// Scored rows by descending score, then skipped rows.
    pub rows: Vec<ReportRow>,
}

impl DiscoveryReport {
    /// Positives that passed the filter.
    pub fn survivors(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.survives())
    }

    pub fn write_tsv_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lemma\tscore\tlabel\tfilter_verdict\tstage_skipped_reason")?;
        for r in &self.rows {
            let score = r.score.map_or("-".to_string(), |s| s.to_string());
            let label = r.label.map_or("-", |l| if l { "1" } else { "0" });
            let verdict = r.verdict.as_ref().map_or("-".to_string(), ToString::to_string);
            let skipped = r.skipped.as_deref().unwrap_or("-");
            writeln!(w, "{}\t{score}\t{label}\t{verdict}\t{skipped}", r.lemma)?;
        }
        Ok(())
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_tsv_to(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
    }
}

/// Uniform seeded subsample of `n` lemmas (all of them when fewer), sorted.
pub fn subsample(lemmas: &[String], n: usize, seed_value: u64) -> Vec<String> {
    if lemmas.len() <= n {
        let mut all = lemmas.to_vec();
        all.sort();
        return all;
    }
    let mut rng = seed::rng(seed_value, &["subsample"]);
    let mut out: Vec<String> = index::sample(&mut rng, lemmas.len(), n).into_iter().map(|i| lemmas[i].clone()).collect();
    out.sort();
    out
}

/// Population → grading → binarization at a fixed or tuned `t` → filtering of positives.
pub fn discover(c1: &Corpus, c2: &Corpus, backend: &dyn ChangeBackend, config: &DiscoveryConfig) -> Result<DiscoveryReport> {
    let vocab = build_vocabulary(c1, c2);
    let population = match config.population {
        PopulationSpec::FullVocabulary => full_population(&vocab, &config.exclude),
        PopulationSpec::Sample { size } => sample_population(&vocab, size, &config.exclude, config.seed)?,
    };
    let graded = grade_population(&population, backend)?;

    let (t, tuning) = match &config.threshold {
        ThresholdSpec::Fixed(t) => (*t, None),
        ThresholdSpec::Tune(gold) => {
            let scores = gold
                .keys()
                .filter_map(|l| backend.score(l).ok().map(|s| (l.clone(), s)))
                .collect();
            let tuning_ranking = GradedRanking::new(scores, backend.measure())?;
            let tuning = tune_threshold(&tuning_ranking, gold)?;
            (tuning.t_best, Some(tuning))
        }
    };

    let prediction = if graded.ranking.is_empty() {
        None
    } else {
        Some(binarize(&graded.ranking, t)?)
    };

    let mut rows: Vec<ReportRow> = Vec::new();
    for (lemma, score) in graded.ranking.ranked() {
        let label = prediction.as_ref().map(|p| p.labels[lemma]);
        let verdict = if label == Some(true) {
            let mut usages = extract_usages(c1, lemma, config.filter_usages, config.seed)?;
            usages.extend(extract_usages(c2, lemma, config.filter_usages, config.seed)?);
            let entry = vocab.get(lemma).expect("population lemma in vocabulary");
            Some(filter_candidate(lemma, &usages, entry, &config.filter))
        } else {
            None
        };
        rows.push(ReportRow {
            lemma: lemma.to_owned(),
            score: Some(score),
            label,
            verdict,
            skipped: None,
        });
    }
    for (lemma, reason) in &graded.skipped {
        rows.push(ReportRow {
            lemma: lemma.clone(),
            score: None,
            label: None,
            verdict: None,
            skipped: Some(format!("grade:{reason}")),
        });
    }
    Ok(DiscoveryReport {
        measure: backend.measure(),
        population,
        ranking: graded.ranking,
        prediction,
        tuning,
        rows,
    })
}
