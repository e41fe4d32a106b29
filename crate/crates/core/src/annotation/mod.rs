//! Annotation projects: usage sampling, randomized pair serving, judgment
//! collection and connectivity-driven scheduling rounds.
//!
//! A project is an immutable [`ProjectSpec`] plus an append-only log of
//! [`Event`]s. Every state change goes through [`AnnotationProject::execute`],
//! so replaying the log reproduces the state exactly.

mod store;

pub use store::ProjectStore;

use crate::corpus::{extract_usages, write_usages_to, Corpus, UsageSample};
use crate::wug::{
    self, change_labels, cluster_wug, layout, ChangeResult, Clustering, Judgment, Layout, PairKey, SolverConfig, Wug,
};
use crate::{seed, Error, Period, Result};
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectConfig {
    /// Usages sampled per target and period.
    pub sample_size: usize,
    pub seed: u64,
    /// Initial random pairs per target, as a multiple of its node count.
    pub pair_density: f64,
    pub solver: SolverConfig,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig { sample_size: 25, seed: 0, pair_density: 2.0, solver: SolverConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetIssue {
    Missing { period: Period },
    UnderSampled { period: Period, found: usize, requested: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub lemma: String,
    pub usages: Vec<UsageSample>,
    pub issues: Vec<TargetIssue>,
}

/// The immutable part of a project, fixed at creation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectSpec {
    pub id: String,
    pub config: ProjectConfig,
    pub targets: Vec<TargetSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Annotator { name: String },
    Judgment { lemma: String, judgment: Judgment },
    /// Close the current round; `force` closes it even with unjudged pairs.
    Advance { force: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledPair {
    pub round: usize,
    pub pair: PairKey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetStatus {
    pub complete: bool,
    /// `None` until the target has been clustered once.
    pub unconnected_multicluster_pairs: Option<usize>,
    pub judged_pairs: usize,
    pub total_scheduled: usize,
    pub excluded_usages: usize,
    pub issues: Vec<TargetIssue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionStatus {
    pub round: usize,
    pub targets: BTreeMap<String, TargetStatus>,
}

impl CompletionStatus {
    pub fn all_complete(&self) -> bool {
        self.targets.values().all(|t| t.complete)
    }
}

/// A pair served to an annotator, with both usages and the rating scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NextPair {
    pub lemma: String,
    pub round: usize,
    pub usage_1: UsageSample,
    pub usage_2: UsageSample,
    pub scale: Vec<(u8, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Registered,
    Recorded,
    Advanced(CompletionStatus),
}

/// Files written for one target: `uses.tsv`, `judgments.tsv`, `clusters.tsv` (once clustered) and `layout.json`.
#[derive(Clone, Debug, PartialEq)]
pub struct WugExport {
    pub files: BTreeMap<String, String>,
}

impl WugExport {
    pub fn write_dir(&self, dir: impl AsRef<std::path::Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, content) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct TargetState {
    wug: Wug,
    issues: Vec<TargetIssue>,
    schedule: Vec<ScheduledPair>,
    scheduled: BTreeSet<PairKey>,
    judged_by: BTreeMap<PairKey, BTreeSet<String>>,
    /// From the latest advance.
    unconnected: Option<usize>,
    complete: bool,
}

impl TargetState {
    fn schedule(&mut self, round: usize, pair: PairKey) {
        if self.scheduled.insert(pair.clone()) {
            self.schedule.push(ScheduledPair { round, pair });
        }
    }

    fn is_open(&self, pair: &PairKey) -> bool {
        !self.judged_by.contains_key(pair) && !self.wug.excluded.contains(&pair.0) && !self.wug.excluded.contains(&pair.1)
    }

    fn status(&self) -> TargetStatus {
        TargetStatus {
            complete: self.complete,
            unconnected_multicluster_pairs: self.unconnected,
            judged_pairs: self.judged_by.len(),
            total_scheduled: self.schedule.len(),
            excluded_usages: self.wug.excluded.len(),
            issues: self.issues.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationProject {
    spec: ProjectSpec,
    annotators: BTreeSet<String>,
    round: usize,
    targets: BTreeMap<String, TargetState>,
    log: Vec<Event>,
}

pub fn valid_project_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Sample usages for each target from both corpora and open a project.
///
/// Targets absent from a period or with fewer usages than requested are kept and flagged.
pub fn create_project(
    id: &str,
    targets: &[String],
    c1: &Corpus,
    c2: &Corpus,
    config: ProjectConfig,
) -> Result<AnnotationProject> {
    if config.sample_size == 0 {
        return Err(Error::Config("sample_size must be at least 1".into()));
    }
    let mut specs = Vec::new();
    for lemma in targets.iter().collect::<BTreeSet<_>>() {
        let mut usages = Vec::new();
        let mut issues = Vec::new();
        for corpus in [c1, c2] {
            let found = extract_usages(corpus, lemma, config.sample_size, config.seed)?;
            if found.is_empty() {
                issues.push(TargetIssue::Missing { period: corpus.period });
            } else if found.len() < config.sample_size {
                issues.push(TargetIssue::UnderSampled {
                    period: corpus.period,
                    found: found.len(),
                    requested: config.sample_size,
                });
            }
            usages.extend(found);
        }
        specs.push(TargetSpec { lemma: lemma.clone(), usages, issues });
    }
    AnnotationProject::new(ProjectSpec { id: id.to_owned(), config, targets: specs })
}

/// Open a project over usages sampled elsewhere, grouped by lemma.
///
/// `targets` may list lemmas without usages; they are kept and flagged as missing.
pub fn project_from_usages(
    id: &str,
    targets: &[String],
    usages: Vec<UsageSample>,
    config: ProjectConfig,
) -> Result<AnnotationProject> {
    let mut by_lemma: BTreeMap<String, Vec<UsageSample>> = targets.iter().map(|t| (t.clone(), Vec::new())).collect();
    for u in usages {
        by_lemma.entry(u.lemma.clone()).or_default().push(u);
    }
    let specs = by_lemma
        .into_iter()
        .map(|(lemma, usages)| {
            let mut issues = Vec::new();
            for period in Period::BOTH {
                let found = usages.iter().filter(|u| u.period == period).count();
                if found == 0 {
                    issues.push(TargetIssue::Missing { period });
                } else if found < config.sample_size {
                    issues.push(TargetIssue::UnderSampled { period, found, requested: config.sample_size });
                }
            }
            TargetSpec { lemma, usages, issues }
        })
        .collect();
    AnnotationProject::new(ProjectSpec { id: id.to_owned(), config, targets: specs })
}

impl AnnotationProject {
    /// Open a project from its spec and schedule the initial random pair pool.
    pub fn new(spec: ProjectSpec) -> Result<Self> {
        if !valid_project_id(&spec.id) {
            return Err(Error::InvalidInput(format!("invalid project id `{}`", spec.id)));
        }
        if !(spec.config.pair_density > 0.0) {
            return Err(Error::Config("pair_density must be positive".into()));
        }
        let mut targets = BTreeMap::new();
        for t in &spec.targets {
            if t.usages.iter().any(|u| u.lemma != t.lemma) {
                return Err(Error::InvalidInput(format!("target `{}` holds usages of another lemma", t.lemma)));
            }
            for period in Period::BOTH {
                let count = t.usages.iter().filter(|u| u.period == period).count();
                if count > spec.config.sample_size {
                    return Err(Error::InvalidInput(format!(
                        "target `{}` has {count} usages in {period}, above the sample size",
                        t.lemma
                    )));
                }
            }
            let mut state = TargetState {
                wug: Wug::new(&t.lemma, t.usages.clone())?,
                issues: t.issues.clone(),
                schedule: Vec::new(),
                scheduled: BTreeSet::new(),
                judged_by: BTreeMap::new(),
                unconnected: None,
                complete: false,
            };
            for pair in initial_pool(&t.usages, spec.config.pair_density, spec.config.seed, &t.lemma) {
                state.schedule(0, pair);
            }
            if targets.insert(t.lemma.clone(), state).is_some() {
                return Err(Error::duplicate("target", &t.lemma));
            }
        }
        Ok(AnnotationProject { spec, annotators: BTreeSet::new(), round: 0, targets, log: Vec::new() })
    }

    /// Rebuild a project by re-executing its log.
    pub fn replay(spec: ProjectSpec, events: impl IntoIterator<Item = Event>) -> Result<Self> {
        let mut project = Self::new(spec)?;
        for event in events {
            project.execute(event)?;
        }
        Ok(project)
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn spec(&self) -> &ProjectSpec {
        &self.spec
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn annotators(&self) -> &BTreeSet<String> {
        &self.annotators
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.targets.keys().map(String::as_str)
    }

    pub fn wug(&self, lemma: &str) -> Result<&Wug> {
        Ok(&self.target(lemma)?.wug)
    }

    pub fn schedule(&self, lemma: &str) -> Result<&[ScheduledPair]> {
        Ok(&self.target(lemma)?.schedule)
    }

    fn target(&self, lemma: &str) -> Result<&TargetState> {
        self.targets.get(lemma).ok_or_else(|| Error::unknown("target", lemma))
    }

    fn require_annotator(&self, name: &str) -> Result<()> {
        if self.annotators.contains(name) {
            Ok(())
        } else {
            Err(Error::unknown("annotator", name))
        }
    }

    /// Check an event against the current state without applying it.
    pub fn validate(&self, event: &Event) -> Result<()> {
        match event {
            Event::Annotator { name } => {
                if name.trim().is_empty() || name.contains(['\t', '\n', '\r']) {
                    return Err(Error::InvalidInput(format!("invalid annotator name `{name}`")));
                }
                if self.annotators.contains(name) {
                    return Err(Error::duplicate("annotator", name));
                }
            }
            Event::Judgment { lemma, judgment } => {
                self.require_annotator(&judgment.annotator)?;
                let target = self.target(lemma)?;
                let pair = judgment.pair()?;
                if !target.scheduled.contains(&pair) {
                    return Err(Error::Annotation(format!(
                        "pair ({}, {}) of `{lemma}` was never scheduled",
                        pair.0, pair.1
                    )));
                }
                if target.judged_by.get(&pair).is_some_and(|who| who.contains(&judgment.annotator)) {
                    return Err(Error::duplicate("judgment", &format!("{}/{}/{}", judgment.annotator, pair.0, pair.1)));
                }
                if let Some(comment) = &judgment.comment {
                    if comment.contains(['\t', '\n', '\r']) {
                        return Err(Error::InvalidInput("comment contains a tab or newline".into()));
                    }
                }
            }
            Event::Advance { force } => {
                let open: usize = self
                    .targets
                    .values()
                    .filter(|t| !t.complete)
                    .map(|t| t.schedule.iter().filter(|s| s.round == self.round && t.is_open(&s.pair)).count())
                    .sum();
                if open > 0 && !force {
                    return Err(Error::Annotation(format!(
                        "round {} still has {open} unjudged pairs; advance with force to close it",
                        self.round
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validate, apply and log an event.
    pub fn execute(&mut self, event: Event) -> Result<Outcome> {
        self.validate(&event)?;
        let outcome = self.apply(&event);
        self.log.push(event);
        Ok(outcome)
    }

    fn apply(&mut self, event: &Event) -> Outcome {
        match event {
            Event::Annotator { name } => {
                self.annotators.insert(name.clone());
                Outcome::Registered
            }
            Event::Judgment { lemma, judgment } => {
                let target = self.targets.get_mut(lemma).expect("validated");
                let pair = judgment.pair().expect("validated");
                target.judged_by.entry(pair).or_default().insert(judgment.annotator.clone());
                target.wug.add_judgment(judgment.clone()).expect("validated");
                target.wug.apply_comprehensibility_rule();
                Outcome::Recorded
            }
            Event::Advance { .. } => Outcome::Advanced(self.advance()),
        }
    }

    fn advance(&mut self) -> CompletionStatus {
        let next = self.round + 1;
        let seed = self.spec.config.seed;
        let solver = &self.spec.config.solver;
        for (lemma, target) in self.targets.iter_mut().filter(|(_, t)| !t.complete) {
            let config = SolverConfig { seed: seed::derive(solver.seed, &["cluster", lemma, &seed.to_string()]), ..solver.clone() };
            let (clustering, _) = cluster_wug(&target.wug, &config);
            let gaps = unconnected_multicluster_pairs(&target.wug, &clustering);
            let mut rng = seed::rng(seed, &["advance", lemma, &next.to_string()]);
            for (a, b) in &gaps {
                let fresh: Vec<PairKey> = a
                    .iter()
                    .flat_map(|x| b.iter().map(move |y| PairKey::new(x, y).expect("distinct clusters")))
                    .filter(|p| !target.scheduled.contains(p))
                    .collect();
                if let Some(pair) = fresh.choose(&mut rng) {
                    target.schedule(next, pair.clone());
                }
            }
            target.unconnected = Some(gaps.len());
            target.complete = gaps.is_empty();
            target.wug.clustering = Some(clustering);
        }
        self.round = next;
        self.status()
    }

    pub fn status(&self) -> CompletionStatus {
        CompletionStatus {
            round: self.round,
            targets: self.targets.iter().map(|(l, t)| (l.clone(), t.status())).collect(),
        }
    }

    /// The first pair of this round's per-annotator permutation not yet judged by them.
    pub fn next_pair(&self, annotator: &str) -> Result<Option<NextPair>> {
        self.require_annotator(annotator)?;
        let mut queue: Vec<(&str, &PairKey)> = self
            .targets
            .iter()
            .filter(|(_, t)| !t.complete)
            .flat_map(|(l, t)| {
                t.schedule
                    .iter()
                    .filter(|s| s.round == self.round)
                    .filter(|s| !t.wug.excluded.contains(&s.pair.0) && !t.wug.excluded.contains(&s.pair.1))
                    .map(move |s| (l.as_str(), &s.pair))
            })
            .collect();
        let mut rng = seed::rng(self.spec.config.seed, &["serve", annotator, &self.round.to_string()]);
        queue.shuffle(&mut rng);
        let Some((lemma, pair)) = queue.into_iter().find(|(l, p)| {
            !self.targets[*l].judged_by.get(*p).is_some_and(|who| who.contains(annotator))
        }) else {
            return Ok(None);
        };
        let wug = &self.targets[lemma].wug;
        // randomize which usage is shown first
        let (first, second) = if rng.random_bool(0.5) { (&pair.0, &pair.1) } else { (&pair.1, &pair.0) };
        Ok(Some(NextPair {
            lemma: lemma.to_owned(),
            round: self.round,
            usage_1: wug.node(first).expect("scheduled usage").clone(),
            usage_2: wug.node(second).expect("scheduled usage").clone(),
            scale: wug::SCALE.iter().map(|(v, s)| (*v, (*s).to_owned())).collect(),
        }))
    }

    pub fn register_annotator(&mut self, name: &str) -> Result<()> {
        self.execute(Event::Annotator { name: name.to_owned() }).map(drop)
    }

    pub fn submit_judgment(&mut self, lemma: &str, judgment: Judgment) -> Result<()> {
        self.execute(Event::Judgment { lemma: lemma.to_owned(), judgment }).map(drop)
    }

    pub fn advance_round(&mut self, force: bool) -> Result<CompletionStatus> {
        match self.execute(Event::Advance { force })? {
            Outcome::Advanced(status) => Ok(status),
            _ => unreachable!("advance yields a status"),
        }
    }

    /// Change labels from the latest clustering of a target.
    pub fn change(&self, lemma: &str) -> Result<ChangeResult> {
        let wug = self.wug(lemma)?;
        let clustering = wug
            .clustering
            .as_ref()
            .ok_or_else(|| Error::Annotation(format!("`{lemma}` has not been clustered yet")))?;
        change_labels(wug, clustering)
    }

    pub fn layout(&self, lemma: &str) -> Result<Layout> {
        let wug = self.wug(lemma)?;
        Ok(layout(wug, wug.clustering.as_ref(), self.spec.config.seed))
    }

    pub fn export_wug(&self, lemma: &str) -> Result<WugExport> {
        let wug = self.wug(lemma)?;
        if wug.judgments.is_empty() {
            return Err(Error::Annotation(format!("`{lemma}` has no judgments to export")));
        }
        let mut files = BTreeMap::new();
        let mut buf = Vec::new();
        write_usages_to(&mut buf, &wug.nodes)?;
        files.insert("uses.tsv".to_owned(), String::from_utf8(buf).expect("utf-8 tsv"));
        let mut buf = Vec::new();
        wug::write_judgments(&mut buf, &wug.judgments)?;
        files.insert("judgments.tsv".to_owned(), String::from_utf8(buf).expect("utf-8 tsv"));
        if let Some(c) = &wug.clustering {
            let mut buf = Vec::new();
            wug::write_clusters(&mut buf, c)?;
            files.insert("clusters.tsv".to_owned(), String::from_utf8(buf).expect("utf-8 tsv"));
        }
        files.insert("layout.json".to_owned(), serde_json::to_string_pretty(&self.layout(lemma)?)?);
        Ok(WugExport { files })
    }
}

/// `2 * |nodes|` distinct uniformly random pairs (capped at all pairs).
fn initial_pool(usages: &[UsageSample], density: f64, seed: u64, lemma: &str) -> Vec<PairKey> {
    let n = usages.len();
    let total = n * n.saturating_sub(1) / 2;
    let want = ((density * n as f64).round() as usize).min(total);
    if want == 0 {
        return Vec::new();
    }
    let mut rng = seed::rng(seed, &["pool", lemma]);
    let mut picked = index::sample(&mut rng, total, want).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|k| {
            let (i, j) = unrank_pair(k, n);
            PairKey::new(&usages[i].usage_id, &usages[j].usage_id).expect("distinct usages")
        })
        .collect()
}

/// Index `k` of the lexicographic enumeration of pairs `i < j < n`.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    while k >= n - 1 - i {
        k -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + k)
}

/// Pairs of multi-clusters (more than one usage) with no non-abstain judgment between them.
pub fn unconnected_multicluster_pairs(wug: &Wug, clustering: &Clustering) -> Vec<(Vec<String>, Vec<String>)> {
    let mut members: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (id, &c) in clustering {
        members.entry(c).or_default().push(id.clone());
    }
    let multi: Vec<(usize, Vec<String>)> = members.into_iter().filter(|(_, m)| m.len() > 1).collect();
    let mut linked = BTreeSet::new();
    for p in wug.edges().keys() {
        if let (Some(&a), Some(&b)) = (clustering.get(&p.0), clustering.get(&p.1)) {
            linked.insert((a.min(b), a.max(b)));
        }
    }
    let mut out = Vec::new();
    for (i, (ca, a)) in multi.iter().enumerate() {
        for (cb, b) in &multi[i + 1..] {
            if !linked.contains(&(*ca.min(cb), *ca.max(cb))) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
