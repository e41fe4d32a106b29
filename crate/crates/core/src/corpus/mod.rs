//! Corpus ingestion, vocabulary counting, usage sampling and candidate filtering.
//!
//! A corpus file holds one sentence per line. Each line carries up to three
//! tab-separated fields, each a space-joined token sequence: surface forms,
//! lemmas, POS tags. The lemma and POS fields are optional.

mod filter;
mod usage;

pub use filter::{
    filter_candidate, AcceptAllLanguage, FilterConfig, FilterVerdict, LanguageDetector, NoTagger,
    PosClass, PosTagger, RejectReason, WordlistDetector,
};
pub use usage::{extract_usages, read_usages, read_usages_from, write_usages, write_usages_to, UsageSample};
pub(crate) use usage::tsv_reader;

use crate::{Error, Period, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub surface: Vec<String>,
    pub lemmas: Option<Vec<String>>,
    pub pos: Option<Vec<String>>,
}

impl Sentence {
    pub fn new(
        surface: Vec<String>,
        lemmas: Option<Vec<String>>,
        pos: Option<Vec<String>>,
    ) -> Result<Self> {
        for (name, layer) in [("lemma", &lemmas), ("POS", &pos)] {
            if let Some(layer) = layer {
                if layer.len() != surface.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} tokens but {} {name} entries",
                        surface.len(),
                        layer.len()
                    )));
                }
            }
        }
        Ok(Sentence {
            surface,
            lemmas,
            pos,
        })
    }

    /// Sentence with only a surface layer, split on whitespace.
    pub fn from_text(text: &str) -> Self {
        Sentence {
            surface: text.split_whitespace().map(str::to_owned).collect(),
            lemmas: None,
            pos: None,
        }
    }

    pub fn len(&self) -> usize {
        self.surface.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surface.is_empty()
    }

    /// Lemma of token `i`, falling back to the lowercased surface form.
    pub fn lemma(&self, i: usize) -> std::borrow::Cow<'_, str> {
        match &self.lemmas {
            Some(l) => std::borrow::Cow::Borrowed(l[i].as_str()),
            None => std::borrow::Cow::Owned(self.surface[i].to_lowercase()),
        }
    }

    pub fn pos(&self, i: usize) -> Option<&str> {
        self.pos.as_ref().map(|p| p[i].as_str())
    }

    pub fn text(&self) -> String {
        self.surface.join(" ")
    }

    fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() > 3 {
            return Err(format!("expected at most 3 tab-separated fields, found {}", fields.len()));
        }
        let split = |s: &str| s.split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect::<Vec<_>>();
        let surface = split(fields[0]);
        let lemmas = fields.get(1).map(|f| split(f));
        let pos = fields.get(2).map(|f| split(f));
        Sentence::new(surface, lemmas, pos).map_err(|e| match e {
            Error::InvalidInput(m) => m,
            other => other.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub id: String,
    pub period: Period,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(id: impl Into<String>, period: Period, sentences: Vec<Sentence>) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::InvalidInput("a corpus needs at least one sentence".into()));
        }
        Ok(Corpus {
            id: id.into(),
            period,
            sentences,
        })
    }

    /// Load a corpus file; the corpus id is the file stem.
    pub fn load(path: impl AsRef<Path>, period: Period) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| period.to_string());
        Self::from_reader(std::io::BufReader::new(file), id, period, path)
    }

    pub fn from_reader(
        reader: impl BufRead,
        id: impl Into<String>,
        period: Period,
        origin: &Path,
    ) -> Result<Self> {
        let lines = reader
            .lines()
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(origin, e))?;
        let parsed: Vec<Option<Sentence>> = lines
            .par_iter()
            .enumerate()
            .map(|(i, line)| {
                let line = line.trim_end_matches('\r');
                if line.trim().is_empty() {
                    return Ok(None);
                }
                Sentence::parse_line(line).map(Some).map_err(|message| Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    message,
                })
            })
            .collect::<Result<_>>()?;
        let sentences: Vec<Sentence> = parsed.into_iter().flatten().collect();
        if sentences.is_empty() {
            return Err(Error::EmptyFile(origin.to_path_buf()));
        }
        Ok(Corpus {
            id: id.into(),
            period,
            sentences,
        })
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn has_lemmas(&self) -> bool {
        self.sentences.iter().all(|s| s.lemmas.is_some())
    }

    /// Lemma frequencies over the lemma layer (lowercased surface when absent).
    pub fn lemma_counts(&self) -> HashMap<String, usize> {
        self.sentences
            .par_iter()
            .fold(HashMap::new, |mut acc: HashMap<String, usize>, s| {
                for i in 0..s.len() {
                    *acc.entry(s.lemma(i).into_owned()).or_default() += 1;
                }
                acc
            })
            .reduce(HashMap::new, merge_counts)
    }

    fn pos_counts(&self) -> HashMap<String, HashMap<String, usize>> {
        let mut out: HashMap<String, HashMap<String, usize>> = HashMap::new();
        for s in &self.sentences {
            if s.pos.is_none() {
                continue;
            }
            for i in 0..s.len() {
                let tag = s.pos(i).unwrap_or_default();
                *out.entry(s.lemma(i).into_owned())
                    .or_default()
                    .entry(tag.to_owned())
                    .or_default() += 1;
            }
        }
        out
    }
}

fn merge_counts(mut a: HashMap<String, usize>, b: HashMap<String, usize>) -> HashMap<String, usize> {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub lemma: String,
    pub freq_c1: usize,
    pub freq_c2: usize,
    /// Majority POS tag over the lemma's occurrences in both corpora.
    pub pos: Option<String>,
}

impl VocabEntry {
    pub fn total(&self) -> usize {
        self.freq_c1 + self.freq_c2
    }

    pub fn freq(&self, period: Period) -> usize {
        match period {
            Period::C1 => self.freq_c1,
            Period::C2 => self.freq_c2,
        }
    }

    pub fn in_both(&self) -> bool {
        self.freq_c1 >= 1 && self.freq_c2 >= 1
    }
}

/// Joint vocabulary of a corpus pair, sorted by lemma.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
}

impl Vocabulary {
    pub fn from_entries(mut entries: Vec<VocabEntry>) -> Self {
        entries.sort_by(|a, b| a.lemma.cmp(&b.lemma));
        Vocabulary { entries }
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, lemma: &str) -> Option<&VocabEntry> {
        self.entries
            .binary_search_by(|e| e.lemma.as_str().cmp(lemma))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Lemmas attested in both corpora.
    pub fn intersection(&self) -> impl Iterator<Item = &VocabEntry> {
        self.entries.iter().filter(|e| e.in_both())
    }
}

/// Count every lemma occurring in either corpus.
pub fn build_vocabulary(c1: &Corpus, c2: &Corpus) -> Vocabulary {
    let (counts1, counts2) = rayon::join(|| c1.lemma_counts(), || c2.lemma_counts());
    let mut tags = c1.pos_counts();
    for (lemma, per_tag) in c2.pos_counts() {
        let slot = tags.entry(lemma).or_default();
        for (tag, n) in per_tag {
            *slot.entry(tag).or_default() += n;
        }
    }
    let mut merged: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (lemma, n) in counts1 {
        merged.entry(lemma).or_default().0 += n;
    }
    for (lemma, n) in counts2 {
        merged.entry(lemma).or_default().1 += n;
    }
    let entries = merged
        .into_iter()
        .map(|(lemma, (freq_c1, freq_c2))| {
            let pos = tags.get(&lemma).and_then(majority_tag);
            VocabEntry {
                lemma,
                freq_c1,
                freq_c2,
                pos,
            }
        })
        .collect();
    Vocabulary { entries }
}

fn majority_tag(counts: &HashMap<String, usize>) -> Option<String> {
    // Ties resolve to the lexicographically smallest tag.
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(tag, _)| tag.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<Corpus> {
        Corpus::from_reader(Cursor::new(text), "t", Period::C1, Path::new("t.txt"))
    }

    pub(crate) fn raw(period: Period, lines: &[&str]) -> Corpus {
        Corpus::new("raw", period, lines.iter().map(|l| Sentence::from_text(l)).collect()).unwrap()
    }

    #[test]
    fn parses_three_lines() {
        let c = parse("A b\ta b\tDT NN\nC d\tc d\tNN VV\n\nE\te\tNN\n").unwrap();
        assert_eq!(c.sentences.len(), 3);
        assert_eq!(c.sentences[1].lemma(1), "d");
        assert_eq!(c.sentences[2].pos(0), Some("NN"));
    }

    #[test]
    fn column_mismatch_names_line() {
        let err = parse("a b\ta b\nx y z w v\tx y z w\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn raw_only_file_has_no_lemmas() {
        let c = parse("Das Haus\nein Baum\n").unwrap();
        assert!(c.sentences.iter().all(|s| s.lemmas.is_none()));
        assert_eq!(c.sentences[0].lemma(0), "das");
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse("\n\n"), Err(Error::EmptyFile(_))));
        assert!(matches!(parse(""), Err(Error::EmptyFile(_))));
    }

    #[test]
    fn vocabulary_counts_and_intersection() {
        let c1 = raw(Period::C1, &["a b"]);
        let c2 = raw(Period::C2, &["b c"]);
        let v = build_vocabulary(&c1, &c2);
        let got: Vec<_> = v.entries().iter().map(|e| (e.lemma.as_str(), e.freq_c1, e.freq_c2)).collect();
        assert_eq!(got, vec![("a", 1, 0), ("b", 1, 1), ("c", 0, 1)]);
        let inter: Vec<_> = v.intersection().map(|e| e.lemma.as_str()).collect();
        assert_eq!(inter, vec!["b"]);
    }

    #[test]
    fn identical_corpora_intersect_fully() {
        let c1 = raw(Period::C1, &["x y z", "z y"]);
        let c2 = raw(Period::C2, &["x y z", "z y"]);
        let v = build_vocabulary(&c1, &c2);
        assert_eq!(v.intersection().count(), v.len());
    }

    #[test]
    fn repeated_lemma_counted_per_token() {
        let c1 = raw(Period::C1, &["a x a y a"]);
        let c2 = raw(Period::C2, &["q"]);
        let v = build_vocabulary(&c1, &c2);
        // brute force over tokens
        let brute = c1.sentences[0].surface.iter().filter(|t| *t == "a").count();
        assert_eq!(v.get("a").unwrap().freq_c1, brute);
        assert_eq!(brute, 3);
    }

    #[test]
    fn majority_pos_tag() {
        let c1 = parse("a b\ta b\tNN VV\na\ta\tNN\na\ta\tNE\n").unwrap();
        let c2 = parse("a\ta\tNE").unwrap();
        let c2 = Corpus { period: Period::C2, ..c2 };
        let v = build_vocabulary(&c1, &c2);
        // NN: 2, NE: 2 -> tie resolves to NE (lexicographically smaller)
        assert_eq!(v.get("a").unwrap().pos.as_deref(), Some("NE"));
        assert_eq!(v.get("b").unwrap().pos.as_deref(), Some("VV"));
    }
}
