use crate::corpus::{VocabEntry, Vocabulary};
use crate::{seed, Error, Result};
use rand::seq::index;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const FREQUENCY_AREAS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PopulationSource {
    FullVocabulary,
    StratifiedSample,
}

/// One equal-width frequency band of the eligible vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaSummary {
    pub lower: f64,
    pub upper: f64,
    pub eligible: usize,
    pub drawn: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    /// Sorted lemmas.
    pub lemmas: Vec<String>,
    pub source: PopulationSource,
    pub seed: u64,
    pub excluded: BTreeSet<String>,
    pub areas: Vec<AreaSummary>,
}

fn eligible<'a>(vocab: &'a Vocabulary, exclude: &BTreeSet<String>) -> Vec<&'a VocabEntry> {
    vocab
        .intersection()
        .filter(|e| !exclude.contains(&e.lemma))
        .collect()
}

/// Every lemma of the vocabulary intersection not in `exclude`.
pub fn full_population(vocab: &Vocabulary, exclude: &BTreeSet<String>) -> Population {
    Population {
        lemmas: eligible(vocab, exclude).into_iter().map(|e| e.lemma.clone()).collect(),
        source: PopulationSource::FullVocabulary,
        seed: 0,
        excluded: exclude.clone(),
        areas: Vec::new(),
    }
}

/// Largest-remainder apportionment of `size` over `counts`; sums exactly to `size`.
fn allocate(size: usize, counts: &[usize]) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let mut alloc: Vec<usize> = counts.iter().map(|&c| size * c / total).collect();
    let mut remainders: Vec<(usize, usize)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (size * c % total, i))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = size - alloc.iter().sum::<usize>();
    for &(_, i) in remainders.iter().take(missing) {
        alloc[i] += 1;
    }
    alloc
}

/// Draw `size` lemmas stratified over five equal-width bands of combined frequency,
/// each band contributing in proportion to the lemmas it holds.
pub fn sample_population(
    vocab: &Vocabulary,
    size: usize,
    exclude: &BTreeSet<String>,
    seed_value: u64,
) -> Result<Population> {
    let pool = eligible(vocab, exclude);
    if size > pool.len() {
        return Err(Error::InvalidInput(format!(
            "population size {size} exceeds the {} eligible lemmas",
            pool.len()
        )));
    }
    let freqs: Vec<f64> = pool.iter().map(|e| e.total() as f64).collect();
    let lo = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = freqs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if pool.is_empty() { 0.0 } else { (hi - lo) / FREQUENCY_AREAS as f64 };

    let mut members: Vec<Vec<&VocabEntry>> = vec![Vec::new(); FREQUENCY_AREAS];
    for (entry, f) in pool.iter().zip(&freqs) {
        let area = if width > 0.0 {
            (((f - lo) / width).floor() as usize).min(FREQUENCY_AREAS - 1)
        } else {
            0
        };
        members[area].push(entry);
    }
    let counts: Vec<usize> = members.iter().map(Vec::len).collect();
    let alloc = allocate(size, &counts);

    let mut lemmas = Vec::with_capacity(size);
    let mut areas = Vec::with_capacity(FREQUENCY_AREAS);
    for (i, (area, &take)) in members.iter().zip(&alloc).enumerate() {
        let mut rng = seed::rng(seed_value, &["population", &i.to_string()]);
        for j in index::sample(&mut rng, area.len(), take) {
            lemmas.push(area[j].lemma.clone());
        }
        areas.push(AreaSummary {
            lower: lo + width * i as f64,
            upper: if i + 1 == FREQUENCY_AREAS { hi } else { lo + width * (i + 1) as f64 },
            eligible: area.len(),
            drawn: take,
        });
    }
    lemmas.sort();
    Ok(Population {
        lemmas,
        source: PopulationSource::StratifiedSample,
        seed: seed_value,
        excluded: exclude.clone(),
        areas,
    })
}
