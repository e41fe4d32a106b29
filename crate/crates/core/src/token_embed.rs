//! Per-usage contextual vectors and the APD / COS change measures.
//!
//! Vectors come from an external provider. The expected recipe feeds raw
//! sentences with the target token replaced by its lemma and averages the
//! first and last transformer layers; nothing here depends on that choice.
//!
//! File format: a header `<count> <dim> <lemma> <period> [provider notes...]`
//! followed by `<usage_id> <v1> ... <v_dim>` per line.

use crate::align::cosine_distance;
use crate::{seed, Error, Period, Result};
use rand::Rng;
use std::collections::HashSet;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct UsageVectorSet {
    pub lemma: String,
    pub period: Period,
    pub provider_meta: String,
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl UsageVectorSet {
    pub fn new(
        lemma: impl Into<String>,
        period: Period,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        let mut seen = HashSet::new();
        let mut dim = None;
        for (id, v) in entries {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                    context: format!("usage `{id}`"),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::duplicate("usage id", id));
            }
            ids.push(id);
            data.extend(v);
        }
        let dim = match dim {
            Some(0) => return Err(Error::InvalidInput("usage vectors must have dimension ≥ 1".into())),
            Some(d) => d,
            None => return Err(Error::InvalidInput("usage vector set is empty".into())),
        };
        Ok(UsageVectorSet {
            lemma: lemma.into(),
            period,
            provider_meta: String::new(),
            ids,
            dim,
            data,
        })
    }

    pub fn with_provider_meta(mut self, meta: impl Into<String>) -> Self {
        self.provider_meta = meta.into();
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn get(&self, usage_id: &str) -> Option<&[f64]> {
        self.ids
            .iter()
            .position(|i| i == usage_id)
            .map(|i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for v in self.vectors() {
            for (a, b) in c.iter_mut().zip(v) {
                *a += b;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|a| *a /= n);
        c
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), path)
    }

    pub fn from_reader(reader: impl BufRead, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = reader.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let header = match lines.next() {
            None => return Err(Error::EmptyFile(origin.to_path_buf())),
            Some((_, l)) => l.map_err(|e| Error::io(origin, e))?,
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(parse_err(1, "header must be `<count> <dim> <lemma> <period>`".into()));
        }
        let count: usize = fields[0].parse().map_err(|e| parse_err(1, format!("bad count: {e}")))?;
        let dim: usize = fields[1].parse().map_err(|e| parse_err(1, format!("bad dimension: {e}")))?;
        let lemma = fields[2].to_owned();
        let period: Period = fields[3].parse()?;
        let provider_meta = fields[4..].join(" ");

        let mut entries = Vec::with_capacity(count);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let mut parts = line.split_whitespace();
            let id = parts.next().unwrap_or_default().to_owned();
            let v = parts
                .map(|p| p.parse::<f64>().map_err(|e| parse_err(i + 1, format!("bad value `{p}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                    context: format!("usage `{id}`"),
                });
            }
            entries.push((id, v));
        }
        if entries.is_empty() {
            return Err(Error::EmptyFile(origin.to_path_buf()));
        }
        if entries.len() != count {
            return Err(parse_err(1, format!("header declares {count} usages, file has {}", entries.len())));
        }
        Ok(Self::new(lemma, period, entries)?.with_provider_meta(provider_meta))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let io = |e| Error::io(path, e);
        let mut out = BufWriter::new(file);
        write!(out, "{} {} {} {}", self.len(), self.dim, self.lemma, self.period.grouping()).map_err(io)?;
        if !self.provider_meta.is_empty() {
            write!(out, " {}", self.provider_meta).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
        for (id, v) in self.ids.iter().zip(self.vectors()) {
            write!(out, "{id}").map_err(io)?;
            for x in v {
                write!(out, " {x}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ApdMode {
    /// Every cross pair of the two sets.
    #[default]
    Full,
    /// `pairs` cross pairs drawn uniformly with replacement.
    Sampled { pairs: usize, seed: u64 },
}

fn check_compatible(set1: &UsageVectorSet, set2: &UsageVectorSet) -> Result<()> {
    if set1.dim != set2.dim {
        return Err(Error::DimensionMismatch {
            expected: set1.dim,
            found: set2.dim,
            context: format!("usage sets of `{}`", set1.lemma),
        });
    }
    if set1.lemma != set2.lemma {
        return Err(Error::InvalidInput(format!(
            "comparing usage sets of different lemmas `{}` and `{}`",
            set1.lemma, set2.lemma
        )));
    }
    Ok(())
}

/// Average pairwise cosine distance between the two sets.
///
/// Unlike [`com_distance`], `apd(S, S)` is positive whenever `S` holds more
/// than one distinct direction, since self-comparison averages over distinct pairs too.
pub fn apd(set1: &UsageVectorSet, set2: &UsageVectorSet, mode: ApdMode) -> Result<f64> {
    check_compatible(set1, set2)?;
    let cd = |u: &[f64], v: &[f64], a: usize, b: usize| {
        cosine_distance(u, v).map_err(|_| Error::ZeroVector(format!("{} / {}", set1.ids[a], set2.ids[b])))
    };
    match mode {
        ApdMode::Full => {
            let mut total = 0.0;
            for (a, u) in set1.vectors().enumerate() {
                for (b, v) in set2.vectors().enumerate() {
                    total += cd(u, v, a, b)?;
                }
            }
            Ok(total / (set1.len() * set2.len()) as f64)
        }
        ApdMode::Sampled { pairs, seed: s } => {
            if pairs == 0 {
                return Err(Error::InvalidInput("sampled APD needs at least one pair".into()));
            }
            let mut rng = seed::rng(s, &["apd", &set1.lemma]);
            let mut total = 0.0;
            for _ in 0..pairs {
                let a = rng.random_range(0..set1.len());
                let b = rng.random_range(0..set2.len());
                let u = &set1.data[a * set1.dim..(a + 1) * set1.dim];
                let v = &set2.data[b * set2.dim..(b + 1) * set2.dim];
                total += cd(u, v, a, b)?;
            }
            Ok(total / pairs as f64)
        }
    }
}

/// Cosine distance between the two set centroids.
pub fn com_distance(set1: &UsageVectorSet, set2: &UsageVectorSet) -> Result<f64> {
    check_compatible(set1, set2)?;
    let (c1, c2) = (set1.centroid(), set2.centroid());
    cosine_distance(&c1, &c2).map_err(|_| Error::ZeroVector(format!("centroid of `{}`", set1.lemma)))
}
