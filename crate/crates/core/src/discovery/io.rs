use crate::{Error, Result};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Two-column `lemma<TAB>value` file. A first line whose value does not parse is taken as a header.
fn read_pairs<T>(path: &Path, parse: impl Fn(&str) -> Option<T>) -> Result<BTreeMap<String, T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { path: path.to_owned(), line: i + 1, message };
        let mut fields = line.split('\t');
        let (Some(lemma), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("expected `lemma<TAB>value`".into()));
        };
        let Some(value) = parse(value.trim()) else {
            if i == 0 {
                continue;
            }
            return Err(parse_err(format!("cannot parse value `{value}`")));
        };
        if out.insert(lemma.trim().to_owned(), value).is_some() {
            return Err(parse_err(format!("duplicate lemma `{lemma}`")));
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyFile(path.to_owned()));
    }
    Ok(out)
}

/// Binary labels: `1`/`0` or `true`/`false`.
pub fn read_labels(path: impl AsRef<Path>) -> Result<BTreeMap<String, bool>> {
    read_pairs(path.as_ref(), |v| match v {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    })
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    read_pairs(path.as_ref(), |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
}

pub fn write_labels<W: Write>(mut w: W, labels: &BTreeMap<String, bool>) -> std::io::Result<()> {
    for (lemma, &l) in labels {
        writeln!(w, "{lemma}\t{}", u8::from(l))?;
    }
    Ok(())
}

pub fn write_scores<'a, W: Write>(mut w: W, scores: impl IntoIterator<Item = (&'a str, f64)>) -> std::io::Result<()> {
    for (lemma, s) in scores {
        writeln!(w, "{lemma}\t{s}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gold.tsv");
        std::fs::write(&p, "lemma\tchange\nhaus\t1\nbaum\t0\n\n").unwrap();
        let gold = read_labels(&p).unwrap();
        assert_eq!(gold.len(), 2);
        assert!(gold["haus"] && !gold["baum"]);
        std::fs::write(&p, "haus\t1\nbaum\tmaybe\n").unwrap();
        assert!(matches!(read_labels(&p), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&p, "haus\t1\nhaus\t0\n").unwrap();
        assert!(read_labels(&p).is_err());
    }

    #[test]
    fn scores_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.tsv");
        let mut buf = Vec::new();
        write_scores(&mut buf, [("a", 0.25), ("b", 1e-3)]).unwrap();
        std::fs::write(&p, &buf).unwrap();
        let s = read_scores(&p).unwrap();
        assert_eq!(s["a"], 0.25);
        assert_eq!(s["b"], 1e-3);
        std::fs::write(&p, "").unwrap();
        assert!(matches!(read_scores(&p), Err(Error::EmptyFile(_))));
    }
}
