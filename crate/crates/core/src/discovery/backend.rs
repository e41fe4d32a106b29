use super::Measure;
use crate::align::AlignedPair;
use crate::token_embed::{apd, com_distance, ApdMode, UsageVectorSet};
use crate::{Error, Period, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    /// No representation in one period (e.g. below `min_count`).
    Missing(Vec<Period>),
    Failed(String),
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::Missing(periods) => {
                let names: Vec<String> = periods.iter().map(Period::to_string).collect();
                write!(f, "missing_in_{}", names.join("_"))
            }
            SkipReason::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

/// Scores one lemma's change between the two periods.
pub trait ChangeBackend: Sync {
    fn measure(&self) -> Measure;
    fn score(&self, lemma: &str) -> std::result::Result<f64, SkipReason>;
}

/// Cosine distance between aligned type vectors.
pub struct TypeBackend<'a> {
    pub pair: &'a AlignedPair,
}

impl ChangeBackend for TypeBackend<'_> {
    fn measure(&self) -> Measure {
        Measure::Cd
    }

    fn score(&self, lemma: &str) -> std::result::Result<f64, SkipReason> {
        let missing: Vec<Period> = [
            (Period::C1, self.pair.space1.contains(lemma)),
            (Period::C2, self.pair.space2.contains(lemma)),
        ]
        .into_iter()
        .filter(|(_, present)| !present)
        .map(|(p, _)| p)
        .collect();
        if !missing.is_empty() {
            return Err(SkipReason::Missing(missing));
        }
        match self.pair.distance(lemma) {
            Some(Ok(d)) => Ok(d),
            Some(Err(e)) => Err(SkipReason::Failed(e.to_string())),
            None => Err(SkipReason::Missing(vec![Period::C1, Period::C2])),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenMeasure {
    Apd(ApdMode),
    Cos,
}

/// APD or COS over per-lemma usage-vector sets.
#[derive(Clone, Debug)]
pub struct TokenBackend {
    pub measure: TokenMeasure,
    sets: BTreeMap<String, [Option<UsageVectorSet>; 2]>,
}

impl TokenBackend {
    pub fn new(measure: TokenMeasure) -> Self {
        TokenBackend {
            measure,
            sets: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, set: UsageVectorSet) -> Result<()> {
        let slot = &mut self.sets.entry(set.lemma.clone()).or_default()[set.period as usize];
        if slot.is_some() {
            return Err(Error::duplicate("usage vector set", format!("{} {}", set.lemma, set.period)));
        }
        *slot = Some(set);
        Ok(())
    }

    /// Load every `*.vec` file in a directory.
    pub fn load_dir(measure: TokenMeasure, dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "vec"))
            .collect();
        paths.sort();
        let mut backend = Self::new(measure);
        for p in paths {
            backend.insert(UsageVectorSet::load(&p)?)?;
        }
        Ok(backend)
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(String::as_str)
    }
}

impl ChangeBackend for TokenBackend {
    fn measure(&self) -> Measure {
        match self.measure {
            TokenMeasure::Apd(_) => Measure::Apd,
            TokenMeasure::Cos => Measure::Cos,
        }
    }

    fn score(&self, lemma: &str) -> std::result::Result<f64, SkipReason> {
        let (s1, s2) = match self.sets.get(lemma) {
            Some([Some(a), Some(b)]) => (a, b),
            Some([None, Some(_)]) => return Err(SkipReason::Missing(vec![Period::C1])),
            Some([Some(_), None]) => return Err(SkipReason::Missing(vec![Period::C2])),
            _ => return Err(SkipReason::Missing(vec![Period::C1, Period::C2])),
        };
        let result = match self.measure {
            TokenMeasure::Apd(mode) => apd(s1, s2, mode),
            TokenMeasure::Cos => com_distance(s1, s2),
        };
        result.map_err(|e| SkipReason::Failed(e.to_string()))
    }
}
