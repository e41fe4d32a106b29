use super::SgnsConfig;
use crate::{Error, Period, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Dense word vectors for one period, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSpace {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
    pub config: Option<SgnsConfig>,
    pub period: Option<Period>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: Option<SgnsConfig>,
    period: Option<Period>,
}

impl VectorSpace {
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("vector dimension must be at least 1".into()));
        }
        if data.len() != words.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: words.len() * dim,
                found: data.len(),
                context: "matrix size".into(),
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::duplicate("word", w));
            }
        }
        Ok(VectorSpace {
            words,
            index,
            dim,
            data,
            config: None,
            period: None,
        })
    }

    pub fn from_matrix(words: Vec<String>, matrix: &DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != words.len() {
            return Err(Error::DimensionMismatch {
                expected: words.len(),
                found: matrix.nrows(),
                context: "row count".into(),
            });
        }
        let dim = matrix.ncols();
        let mut data = Vec::with_capacity(words.len() * dim);
        for r in 0..matrix.nrows() {
            data.extend(matrix.row(r).iter());
        }
        Self::new(words, dim, data)
    }

    pub fn with_meta(mut self, config: Option<SgnsConfig>, period: Option<Period>) -> Self {
        self.config = config;
        self.period = period;
        self
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.words.len(), self.dim, &self.data)
    }

    /// Sidecar file holding training config and period.
    pub fn meta_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".meta.json");
        PathBuf::from(name)
    }

    /// Write `<vocab_size> <dim>` followed by one `<word> <v1> ... <v_dim>` line per word.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "{} {}", self.len(), self.dim).map_err(io)?;
        for (word, row) in self.rows() {
            write!(out, "{word}").map_err(io)?;
            for v in row {
                write!(out, " {v}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)?;
        let meta = Meta {
            config: self.config.clone(),
            period: self.period,
        };
        let meta_path = Self::meta_path(path);
        std::fs::write(&meta_path, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&meta_path, e))?;
        Ok(())
    }

    /// Load a vector file; the metadata sidecar is optional.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut space = Self::from_reader(std::io::BufReader::new(file), path)?;
        let meta_path = Self::meta_path(path);
        if meta_path.exists() {
            let bytes = std::fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            let meta: Meta = serde_json::from_slice(&bytes)?;
            space.config = meta.config;
            space.period = meta.period;
        }
        Ok(space)
    }

    pub fn from_reader(reader: impl BufRead, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                None => return Err(Error::EmptyFile(origin.to_path_buf())),
                Some((_, l)) => {
                    let l = l.map_err(|e| Error::io(origin, e))?;
                    if !l.trim().is_empty() {
                        break l;
                    }
                }
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (n, dim) = match fields.as_slice() {
            [n, d] => (
                n.parse::<usize>().map_err(|e| parse_err(1, format!("bad vocabulary size: {e}")))?,
                d.parse::<usize>().map_err(|e| parse_err(1, format!("bad dimension: {e}")))?,
            ),
            _ => return Err(parse_err(1, "header must be `<vocab_size> <dim>`".into())),
        };
        let mut words = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap_or_default().to_owned();
            let before = data.len();
            for p in parts {
                data.push(
                    p.parse::<f64>()
                        .map_err(|e| parse_err(i + 1, format!("bad value `{p}`: {e}")))?,
                );
            }
            if data.len() - before != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: data.len() - before,
                    context: format!("word `{word}` on line {}", i + 1),
                });
            }
            words.push(word);
        }
        if words.len() != n {
            return Err(parse_err(1, format!("header declares {n} words, file has {}", words.len())));
        }
        if n == 0 {
            return Err(Error::EmptyFile(origin.to_path_buf()));
        }
        Self::new(words, dim, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let space = VectorSpace::new(
            vec!["a".into(), "b".into()],
            3,
            vec![0.1, -2.5, 1e-7, 3.0, 0.333333333333, -0.0],
        )
        .unwrap()
        .with_meta(Some(SgnsConfig::default()), Some(Period::C2));
        space.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("2 3\na 0.1 -2.5 0.0000001"));
        let back = VectorSpace::load(&path).unwrap();
        assert_eq!(back.words(), space.words());
        for (x, y) in back.data.iter().zip(&space.data) {
            assert!((x - y).abs() <= 1e-6);
        }
        assert_eq!(back.config, space.config);
        assert_eq!(back.period, Some(Period::C2));
    }

    #[test]
    fn short_row_is_rejected() {
        let row: Vec<String> = (0..299).map(|i| format!("{i}")).collect();
        let text = format!("1 300\nword {}\n", row.join(" "));
        let err = VectorSpace::from_reader(text.as_bytes(), Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 300, found: 299, .. }));
    }

    #[test]
    fn empty_and_malformed_files() {
        assert!(matches!(
            VectorSpace::from_reader(&b""[..], Path::new("x")),
            Err(Error::EmptyFile(_))
        ));
        assert!(VectorSpace::from_reader(&b"two 3\n"[..], Path::new("x")).is_err());
        assert!(VectorSpace::from_reader(&b"2 1\na 1\n"[..], Path::new("x")).is_err());
        assert!(matches!(
            VectorSpace::from_reader(&b"2 1\na 1\na 2\n"[..], Path::new("x")),
            Err(Error::Duplicate { .. })
        ));
    }
}
