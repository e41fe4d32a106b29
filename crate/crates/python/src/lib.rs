//! Python module `lscd`: corpora, SGNS spaces and alignment, token measures,
//! thresholding, metrics, and WUG clustering/labelling.

use lscd_core::discovery::{self, GradedRanking, Measure};
use lscd_core::static_embed::SgnsConfig;
use lscd_core::token_embed::{self, ApdMode};
use lscd_core::wug::{self as core_wug, Rating, SolverConfig};
use lscd_core::{align, corpus, metrics, static_embed, Period};
use pyo3::exceptions::{PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;
use std::collections::BTreeMap;

fn err(e: lscd_core::Error) -> PyErr {
    match e {
        lscd_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        lscd_core::Error::Unknown { .. } => PyKeyError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn period(p: u8) -> PyResult<Period> {
    match p {
        1 => Ok(Period::C1),
        2 => Ok(Period::C2),
        _ => Err(PyValueError::new_err("period must be 1 or 2")),
    }
}

#[pyclass(frozen)]
struct Corpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl Corpus {
    /// Load a one-sentence-per-line corpus (optionally `surface<TAB>lemmas<TAB>pos`).
    #[staticmethod]
    fn load(path: &str, period_: u8) -> PyResult<Self> {
        Ok(Corpus { inner: corpus::Corpus::load(path, period(period_)?).map_err(err)? })
    }

    /// Build a corpus from raw sentences.
    #[staticmethod]
    fn from_sentences(sentences: Vec<String>, period_: u8) -> PyResult<Self> {
        let s = sentences.iter().map(|t| corpus::Sentence::from_text(t)).collect();
        Ok(Corpus { inner: corpus::Corpus::new("py", period(period_)?, s).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.sentences.len()
    }

    fn token_count(&self) -> usize {
        self.inner.token_count()
    }

    /// Usages as `(usage_id, context, target_index)` tuples.
    fn usages(&self, lemma: &str, max_n: usize, seed: u64) -> PyResult<Vec<(String, String, usize)>> {
        let us = corpus::extract_usages(&self.inner, lemma, max_n, seed).map_err(err)?;
        Ok(us.into_iter().map(|u| (u.usage_id, u.context, u.target_index)).collect())
    }
}

#[pyclass(frozen)]
struct VectorSpace {
    inner: static_embed::VectorSpace,
}

#[pymethods]
impl VectorSpace {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(VectorSpace { inner: static_embed::VectorSpace::load(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    fn words(&self) -> Vec<String> {
        self.inner.words().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, word: &str) -> bool {
        self.inner.contains(word)
    }

    fn vector(&self, word: &str) -> PyResult<Vec<f64>> {
        self.inner
            .vector(word)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| PyKeyError::new_err(word.to_owned()))
    }
}

#[pyfunction]
#[pyo3(signature = (corpus, *, window=10, dim=300, epochs=5, negatives=5, subsample=Some(0.001), min_count=39, learning_rate=0.025, seed=0, workers=1))]
#[allow(clippy::too_many_arguments)]
fn train_sgns(
    corpus: &Corpus,
    window: usize,
    dim: usize,
    epochs: usize,
    negatives: usize,
    subsample: Option<f64>,
    min_count: usize,
    learning_rate: f64,
    seed: u64,
    workers: usize,
) -> PyResult<VectorSpace> {
    let cfg = SgnsConfig { window, dim, epochs, negatives, subsample, min_count, learning_rate, seed, workers };
    let space = static_embed::train_sgns(&corpus.inner, &cfg).map_err(err)?;
    Ok(VectorSpace { inner: space.with_meta(Some(cfg), Some(corpus.inner.period)) })
}

/// Align two spaces and return `{word: cosine distance}` over the shared vocabulary.
#[pyfunction]
fn align_and_score(space1: &VectorSpace, space2: &VectorSpace) -> PyResult<BTreeMap<String, f64>> {
    let pair = align::align_spaces(&space1.inner, &space2.inner).map_err(err)?;
    pair.shared_words
        .iter()
        .map(|w| Ok((w.clone(), pair.distance(w).expect("shared word").map_err(err)?)))
        .collect()
}

#[pyfunction]
fn cosine_distance(u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    align::cosine_distance(&u, &v).map_err(err)
}

fn usage_set(lemma: &str, p: Period, vectors: Vec<Vec<f64>>) -> PyResult<token_embed::UsageVectorSet> {
    let entries = vectors.into_iter().enumerate().map(|(i, v)| (format!("{lemma}_{}_{i}", p.grouping()), v));
    token_embed::UsageVectorSet::new(lemma, p, entries).map_err(err)
}

/// Average pairwise cosine distance between two sets of usage vectors.
#[pyfunction]
#[pyo3(signature = (vectors1, vectors2, pairs=None, seed=0))]
fn apd(vectors1: Vec<Vec<f64>>, vectors2: Vec<Vec<f64>>, pairs: Option<usize>, seed: u64) -> PyResult<f64> {
    let s1 = usage_set("w", Period::C1, vectors1)?;
    let s2 = usage_set("w", Period::C2, vectors2)?;
    let mode = pairs.map_or(ApdMode::Full, |pairs| ApdMode::Sampled { pairs, seed });
    token_embed::apd(&s1, &s2, mode).map_err(err)
}

/// Cosine distance between the centroids of two sets of usage vectors.
#[pyfunction]
fn cos(vectors1: Vec<Vec<f64>>, vectors2: Vec<Vec<f64>>) -> PyResult<f64> {
    let s1 = usage_set("w", Period::C1, vectors1)?;
    let s2 = usage_set("w", Period::C2, vectors2)?;
    token_embed::com_distance(&s1, &s2).map_err(err)
}

/// Labels at `mu + t * sigma`.
#[pyfunction]
fn binarize(scores: BTreeMap<String, f64>, t: f64) -> PyResult<BTreeMap<String, bool>> {
    let ranking = GradedRanking::new(scores, Measure::Cd).map_err(err)?;
    Ok(discovery::binarize(&ranking, t).map_err(err)?.labels)
}

/// Best `(t, F0.5)` over the -2..2 grid.
#[pyfunction]
fn tune_threshold(scores: BTreeMap<String, f64>, gold: BTreeMap<String, bool>) -> PyResult<(f64, f64)> {
    let ranking = GradedRanking::new(scores, Measure::Cd).map_err(err)?;
    let tuning = discovery::tune_threshold(&ranking, &gold).map_err(err)?;
    Ok((tuning.t_best, tuning.f05))
}

#[pyfunction]
#[pyo3(signature = (precision, recall, beta=0.5))]
fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    metrics::f_beta(precision, recall, beta)
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    metrics::spearman_rho(&x, &y).map_err(err)
}

/// Krippendorff's alpha over an annotators × items matrix; `None` marks a missing rating.
#[pyfunction]
#[pyo3(signature = (ratings, metric="ordinal"))]
fn krippendorff_alpha(ratings: Vec<Vec<Option<f64>>>, metric: &str) -> PyResult<f64> {
    let metric = match metric {
        "nominal" => metrics::AlphaMetric::Nominal,
        "ordinal" => metrics::AlphaMetric::Ordinal,
        "interval" => metrics::AlphaMetric::Interval,
        other => return Err(PyValueError::new_err(format!("unknown metric `{other}`"))),
    };
    metrics::krippendorff_alpha_with(&ratings, metric).map_err(err)
}

/// `(k, n)` for a period with `usages` usages.
#[pyfunction]
fn kn_thresholds(usages: usize) -> PyResult<(f64, f64)> {
    let t = core_wug::KnThresholds::for_count(usages).map_err(err)?;
    Ok((t.k, t.n))
}

/// A Word Usage Graph built from `(usage_id, period)` nodes and judgments.
#[pyclass]
struct Wug {
    inner: core_wug::Wug,
}

#[pymethods]
impl Wug {
    #[new]
    fn new(lemma: &str, nodes: Vec<(String, u8)>) -> PyResult<Self> {
        let usages = nodes
            .into_iter()
            .map(|(id, p)| {
                Ok(corpus::UsageSample {
                    context: lemma.to_owned(),
                    usage_id: id,
                    lemma: lemma.to_owned(),
                    target_index: 0,
                    period: period(p)?,
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Wug { inner: core_wug::Wug::new(lemma, usages).map_err(err)? })
    }

    /// Add a judgment; rating 0 means "cannot decide".
    fn judge(&mut self, usage_1: &str, usage_2: &str, annotator: &str, rating: i64) -> PyResult<()> {
        let rating = Rating::from_code(rating).map_err(err)?;
        self.inner
            .add_judgment(core_wug::Judgment::new(usage_1, usage_2, annotator, rating))
            .map_err(err)?;
        self.inner.apply_comprehensibility_rule();
        Ok(())
    }

    /// Median edge weights keyed by usage-id pair.
    fn edges(&self) -> BTreeMap<(String, String), f64> {
        self.inner.edges().into_iter().map(|(p, w)| ((p.0, p.1), w)).collect()
    }

    /// Cluster and store the result; returns `(clusters, loss)`.
    #[pyo3(signature = (seed=0, restarts=20))]
    fn cluster(&mut self, seed: u64, restarts: usize) -> (BTreeMap<String, usize>, f64) {
        let config = SolverConfig { seed, restarts, ..SolverConfig::default() };
        let (c, loss) = core_wug::cluster_wug(&self.inner, &config);
        self.inner.clustering = Some(c.clone());
        (c, loss)
    }

    /// `{"binary", "graded", "gained", "lost", "loss_normalized"}` from the stored clustering.
    fn change(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let c = self
            .inner
            .clustering
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("cluster() first"))?;
        let r = core_wug::change_labels(&self.inner, c).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("binary", r.binary)?;
        d.set_item("graded", r.graded)?;
        d.set_item("gained", r.gained)?;
        d.set_item("lost", r.lost)?;
        d.set_item("loss_normalized", r.loss_normalized)?;
        Ok(d.into_any().unbind())
    }
}

#[pymodule]
fn lscd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Corpus>()?;
    m.add_class::<VectorSpace>()?;
    m.add_class::<Wug>()?;
    m.add_function(wrap_pyfunction!(train_sgns, m)?)?;
    m.add_function(wrap_pyfunction!(align_and_score, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_distance, m)?)?;
    m.add_function(wrap_pyfunction!(apd, m)?)?;
    m.add_function(wrap_pyfunction!(cos, m)?)?;
    m.add_function(wrap_pyfunction!(binarize, m)?)?;
    m.add_function(wrap_pyfunction!(tune_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(f_beta, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(krippendorff_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(kn_thresholds, m)?)?;
    m.add("__version__", lscd_core::VERSION)?;
    Ok(())
}
