use super::Corpus;
use crate::{seed, Error, Period, Result};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// One sentence containing a target lemma, with the target's token offset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UsageSample {
    pub usage_id: String,
    pub lemma: String,
    /// Full sentence in surface form, tokens joined by single spaces.
    pub context: String,
    pub target_index: usize,
    pub period: Period,
}

impl UsageSample {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.context.split(' ')
    }

    pub fn target_token(&self) -> Option<&str> {
        self.tokens().nth(self.target_index)
    }
}

/// Sample up to `max_n` sentences containing `lemma`.
///
/// Sentences are the sampling unit: a sentence with several occurrences
/// yields one usage whose target is picked uniformly among them. Returned
/// usages follow corpus order.
pub fn extract_usages(corpus: &Corpus, lemma: &str, max_n: usize, seed: u64) -> Result<Vec<UsageSample>> {
    if max_n == 0 {
        return Err(Error::InvalidInput("max_n must be at least 1".into()));
    }
    let hits: Vec<(usize, Vec<usize>)> = corpus
        .sentences
        .iter()
        .enumerate()
        .filter_map(|(si, s)| {
            let positions: Vec<usize> = (0..s.len()).filter(|&i| s.lemma(i) == lemma).collect();
            (!positions.is_empty()).then_some((si, positions))
        })
        .collect();
    let mut rng = seed::rng(seed, &["usages", lemma, &corpus.period.to_string()]);
    let chosen: Vec<usize> = if hits.len() <= max_n {
        (0..hits.len()).collect()
    } else {
        let mut picked = index::sample(&mut rng, hits.len(), max_n).into_vec();
        picked.sort_unstable();
        picked
    };
    Ok(chosen
        .into_iter()
        .map(|h| {
            let (si, positions) = &hits[h];
            let target_index = positions[rng.random_range(0..positions.len())];
            UsageSample {
                usage_id: format!("{lemma}_{}_{si}", corpus.period.grouping()),
                lemma: lemma.to_owned(),
                context: corpus.sentences[*si].text(),
                target_index,
                period: corpus.period,
            }
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct UsageRow {
    lemma: String,
    identifier: String,
    context: String,
    indexes_target_token: usize,
    grouping: u8,
}

fn tsv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(w)
}

pub(crate) fn tsv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .from_reader(r)
}

pub fn write_usages_to<W: Write>(w: W, usages: &[UsageSample]) -> Result<()> {
    let mut out = tsv_writer(w);
    for u in usages {
        if u.context.contains('\t') {
            return Err(Error::InvalidInput(format!("usage `{}` contains a tab", u.usage_id)));
        }
        out.serialize(UsageRow {
            lemma: u.lemma.clone(),
            identifier: u.usage_id.clone(),
            context: u.context.clone(),
            indexes_target_token: u.target_index,
            grouping: u.period.grouping(),
        })?;
    }
    out.flush().map_err(|e| Error::io("<usages>", e))?;
    Ok(())
}

/// Write a usage TSV with header `lemma identifier context indexes_target_token grouping`.
pub fn write_usages(path: impl AsRef<Path>, usages: &[UsageSample]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    if usages.is_empty() {
        // csv only emits the header with the first record
        let mut file = file;
        writeln!(file, "lemma\tidentifier\tcontext\tindexes_target_token\tgrouping")
            .map_err(|e| Error::io(path, e))?;
        return Ok(());
    }
    write_usages_to(file, usages)
}

pub fn read_usages_from<R: Read>(r: R) -> Result<Vec<UsageSample>> {
    let mut out = Vec::new();
    for row in tsv_reader(r).deserialize::<UsageRow>() {
        let row = row?;
        let period = match row.grouping {
            1 => Period::C1,
            2 => Period::C2,
            g => return Err(Error::InvalidInput(format!("grouping must be 1 or 2, got {g}"))),
        };
        let usage = UsageSample {
            usage_id: row.identifier,
            lemma: row.lemma,
            context: row.context,
            target_index: row.indexes_target_token,
            period,
        };
        if usage.target_token().is_none() {
            return Err(Error::InvalidInput(format!(
                "usage `{}`: target index {} out of bounds",
                usage.usage_id, usage.target_index
            )));
        }
        out.push(usage);
    }
    Ok(out)
}

pub fn read_usages(path: impl AsRef<Path>) -> Result<Vec<UsageSample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_usages_from(file)
}
