//! Word Usage Graphs: usages as nodes, median relatedness judgments as edges.
//!
//! Graphs are clustered with a weighted correlation-clustering objective
//! around the scale midpoint 2.5, split by period, and labelled for binary
//! and graded change.

mod cluster;
mod io;
mod layout;

pub use cluster::{cluster_graph, cluster_wug, normalized_loss, solve_annealing, solve_exact, SolverConfig, WeightedGraph, EDGE_THRESHOLD};
pub use io::{read_clusters, read_judgments, write_clusters, write_judgments};
pub use layout::{layout, Layout, LayoutEdge, LayoutNode};

use crate::corpus::UsageSample;
use crate::{Error, Period, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// DURel relatedness scale, highest first.
pub const SCALE: [(u8, &str); 4] = [
    (4, "Identical"),
    (3, "Closely Related"),
    (2, "Distantly Related"),
    (1, "Unrelated"),
];

/// A usage judged incomprehensible by this many distinct annotators leaves the graph.
pub const ABSTAIN_EXCLUSION: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rating {
    /// "Cannot decide"; stored as `0`.
    Abstain,
    Score(u8),
}

impl Rating {
    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            0 => Ok(Rating::Abstain),
            1..=4 => Ok(Rating::Score(code as u8)),
            other => Err(Error::InvalidInput(format!("rating {other} outside 0..=4"))),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Rating::Abstain => 0,
            Rating::Score(s) => s,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Rating::Abstain => None,
            Rating::Score(s) => Some(f64::from(s)),
        }
    }
}

/// Unordered usage pair, stored with the smaller id first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey(pub String, pub String);

impl PairKey {
    pub fn new(a: &str, b: &str) -> Result<Self> {
        match a.cmp(b) {
            std::cmp::Ordering::Less => Ok(PairKey(a.to_owned(), b.to_owned())),
            std::cmp::Ordering::Greater => Ok(PairKey(b.to_owned(), a.to_owned())),
            std::cmp::Ordering::Equal => Err(Error::InvalidInput(format!("usage `{a}` paired with itself"))),
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0 == id || self.1 == id
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub usage_id_1: String,
    pub usage_id_2: String,
    pub annotator: String,
    pub rating: Rating,
    pub comment: Option<String>,
}

impl Judgment {
    pub fn new(u1: impl Into<String>, u2: impl Into<String>, annotator: impl Into<String>, rating: Rating) -> Self {
        Judgment {
            usage_id_1: u1.into(),
            usage_id_2: u2.into(),
            annotator: annotator.into(),
            rating,
            comment: None,
        }
    }

    pub fn pair(&self) -> Result<PairKey> {
        PairKey::new(&self.usage_id_1, &self.usage_id_2)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Median non-abstain rating per unordered pair; even counts average the two central values.
pub fn aggregate_edges(judgments: &[Judgment]) -> BTreeMap<PairKey, f64> {
    let mut ratings: BTreeMap<PairKey, Vec<f64>> = BTreeMap::new();
    for j in judgments {
        if let (Ok(pair), Some(v)) = (j.pair(), j.rating.value()) {
            ratings.entry(pair).or_default().push(v);
        }
    }
    ratings
        .into_iter()
        .map(|(pair, mut values)| (pair, median(&mut values)))
        .collect()
}

/// Usage id → cluster id.
pub type Clustering = BTreeMap<String, usize>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wug {
    pub lemma: String,
    pub nodes: Vec<UsageSample>,
    pub judgments: Vec<Judgment>,
    pub clustering: Option<Clustering>,
    /// Usages removed as incomprehensible.
    pub excluded: BTreeSet<String>,
}

impl Wug {
    pub fn new(lemma: impl Into<String>, nodes: Vec<UsageSample>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.usage_id.as_str()) {
                return Err(Error::duplicate("usage", &n.usage_id));
            }
        }
        Ok(Wug {
            lemma: lemma.into(),
            nodes,
            judgments: Vec::new(),
            clustering: None,
            excluded: BTreeSet::new(),
        })
    }

    /// Build a graph from stored parts and apply the comprehensibility rule.
    pub fn from_parts(lemma: impl Into<String>, nodes: Vec<UsageSample>, judgments: Vec<Judgment>) -> Result<Self> {
        let mut wug = Self::new(lemma, nodes)?;
        for j in judgments {
            wug.add_judgment(j)?;
        }
        wug.apply_comprehensibility_rule();
        Ok(wug)
    }

    pub fn node(&self, usage_id: &str) -> Option<&UsageSample> {
        self.nodes.iter().find(|n| n.usage_id == usage_id)
    }

    pub fn add_judgment(&mut self, judgment: Judgment) -> Result<()> {
        judgment.pair()?;
        for id in [&judgment.usage_id_1, &judgment.usage_id_2] {
            if self.node(id).is_none() {
                return Err(Error::unknown("usage", id.as_str()));
            }
        }
        self.judgments.push(judgment);
        Ok(())
    }

    /// Exclude usages that at least [`ABSTAIN_EXCLUSION`] distinct annotators abstained on.
    pub fn apply_comprehensibility_rule(&mut self) {
        let mut abstainers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for j in &self.judgments {
            if j.rating == Rating::Abstain {
                for id in [&j.usage_id_1, &j.usage_id_2] {
                    abstainers.entry(id).or_default().insert(&j.annotator);
                }
            }
        }
        let excluded: BTreeSet<String> = abstainers
            .into_iter()
            .filter(|(_, who)| who.len() >= ABSTAIN_EXCLUSION)
            .map(|(id, _)| id.to_owned())
            .collect();
        if let Some(c) = &mut self.clustering {
            c.retain(|id, _| !excluded.contains(id));
        }
        self.excluded = excluded;
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = &UsageSample> {
        self.nodes.iter().filter(|n| !self.excluded.contains(&n.usage_id))
    }

    pub fn active_count(&self, period: Period) -> usize {
        self.active_nodes().filter(|n| n.period == period).count()
    }

    /// Median edges between active nodes.
    pub fn edges(&self) -> BTreeMap<PairKey, f64> {
        let mut edges = aggregate_edges(&self.judgments);
        edges.retain(|p, _| !self.excluded.contains(&p.0) && !self.excluded.contains(&p.1));
        edges
    }

    /// Judgments as an annotator × pair matrix, for agreement statistics.
    pub fn rating_matrix(&self) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
        let annotators: Vec<String> = self
            .judgments
            .iter()
            .map(|j| j.annotator.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pairs: Vec<PairKey> = self.edges().into_keys().collect();
        let col: BTreeMap<&PairKey, usize> = pairs.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let row: BTreeMap<&str, usize> = annotators.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let mut m = vec![vec![None; pairs.len()]; annotators.len()];
        for j in &self.judgments {
            let (Ok(pair), Some(v)) = (j.pair(), j.rating.value()) else { continue };
            if let Some(&c) = col.get(&pair) {
                m[row[j.annotator.as_str()]][c] = Some(v);
            }
        }
        (annotators, m)
    }
}

/// Node-induced subgraphs for the two periods; cross-period judgments drop out.
pub fn split_by_period(wug: &Wug) -> (Wug, Wug) {
    let sub = |period: Period| {
        let ids: BTreeSet<&str> = wug
            .nodes
            .iter()
            .filter(|n| n.period == period)
            .map(|n| n.usage_id.as_str())
            .collect();
        Wug {
            lemma: wug.lemma.clone(),
            nodes: wug.nodes.iter().filter(|n| n.period == period).cloned().collect(),
            judgments: wug
                .judgments
                .iter()
                .filter(|j| ids.contains(j.usage_id_1.as_str()) && ids.contains(j.usage_id_2.as_str()))
                .cloned()
                .collect(),
            clustering: wug
                .clustering
                .as_ref()
                .map(|c| c.iter().filter(|(id, _)| ids.contains(id.as_str())).map(|(k, v)| (k.clone(), *v)).collect()),
            excluded: wug.excluded.iter().filter(|id| ids.contains(id.as_str())).cloned().collect(),
        }
    };
    (sub(Period::C1), sub(Period::C2))
}

/// Lower frequency thresholds for one period; real-valued, compared unrounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnThresholds {
    pub k: f64,
    pub n: f64,
}

impl KnThresholds {
    /// `k = clamp(0.01 |U|, 1, 3)`, `n = clamp(0.1 |U|, 3, 5)`.
    pub fn for_count(usages: usize) -> Result<Self> {
        if usages == 0 {
            return Err(Error::InvalidInput("a period has no usages".into()));
        }
        let u = usages as f64;
        Ok(KnThresholds {
            k: (0.01 * u).clamp(1.0, 3.0),
            n: (0.1 * u).clamp(3.0, 5.0),
        })
    }
}

pub fn kn_thresholds(u1: usize, u2: usize) -> Result<(KnThresholds, KnThresholds)> {
    Ok((KnThresholds::for_count(u1)?, KnThresholds::for_count(u2)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeResult {
    /// Per period (C1, C2).
    pub k: [f64; 2],
    pub n: [f64; 2],
    pub binary: bool,
    /// Jensen-Shannon distance between the periods' cluster distributions.
    pub graded: f64,
    pub cluster_freqs_c1: BTreeMap<usize, usize>,
    pub cluster_freqs_c2: BTreeMap<usize, usize>,
    pub gained: Vec<usize>,
    pub lost: Vec<usize>,
    pub loss_normalized: f64,
}

/// Jensen-Shannon distance (square root of the base-2 divergence), in `[0, 1]`.
pub fn jensen_shannon_distance(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], m: &[f64]| -> f64 {
        a.iter()
            .zip(m)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, y)| x * (x / y).log2())
            .sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    let js = 0.5 * kl(p, &m) + 0.5 * kl(q, &m);
    js.max(0.0).sqrt().min(1.0)
}

/// Per-period cluster frequencies under the given clustering, before thresholding.
pub fn cluster_frequencies(wug: &Wug, clustering: &Clustering) -> Result<[BTreeMap<usize, usize>; 2]> {
    let mut freqs = [BTreeMap::new(), BTreeMap::new()];
    let clusters: BTreeSet<usize> = wug
        .active_nodes()
        .filter_map(|n| clustering.get(&n.usage_id).copied())
        .collect();
    for f in &mut freqs {
        for &c in &clusters {
            f.insert(c, 0);
        }
    }
    for node in wug.active_nodes() {
        let c = *clustering
            .get(&node.usage_id)
            .ok_or_else(|| Error::InvalidInput(format!("usage `{}` has no cluster", node.usage_id)))?;
        *freqs[node.period as usize].get_mut(&c).expect("cluster listed") += 1;
    }
    Ok(freqs)
}

/// Binary change: some cluster is gained (`≤ k₁` in C1, `≥ n₂` in C2) or lost (`≥ n₁`, `≤ k₂`).
pub fn change_labels(wug: &Wug, clustering: &Clustering) -> Result<ChangeResult> {
    let [f1, f2] = cluster_frequencies(wug, clustering)?;
    let (u1, u2) = (f1.values().sum::<usize>(), f2.values().sum::<usize>());
    let (t1, t2) = kn_thresholds(u1, u2)?;
    let mut gained = Vec::new();
    let mut lost = Vec::new();
    for (&c, &a) in &f1 {
        let b = f2[&c];
        let (a, b) = (a as f64, b as f64);
        if a <= t1.k && b >= t2.n {
            gained.push(c);
        }
        if a >= t1.n && b <= t2.k {
            lost.push(c);
        }
    }
    let p: Vec<f64> = f1.values().map(|&c| c as f64 / u1 as f64).collect();
    let q: Vec<f64> = f2.values().map(|&c| c as f64 / u2 as f64).collect();
    Ok(ChangeResult {
        k: [t1.k, t2.k],
        n: [t1.n, t2.n],
        binary: !gained.is_empty() || !lost.is_empty(),
        graded: jensen_shannon_distance(&p, &q),
        cluster_freqs_c1: f1,
        cluster_freqs_c2: f2,
        gained,
        lost,
        loss_normalized: normalized_loss(wug, clustering),
    })
}
