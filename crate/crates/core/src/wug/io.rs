use super::{Clustering, Judgment, Rating};
use crate::corpus::tsv_reader;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Serialize, Deserialize)]
struct JudgmentRow {
    identifier1: String,
    identifier2: String,
    annotator: String,
    judgment: i64,
    comment: String,
}

#[derive(Serialize, Deserialize)]
struct ClusterRow {
    identifier: String,
    cluster: usize,
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .has_headers(false)
        .from_writer(w)
}

fn clean(field: &str, what: &str) -> Result<()> {
    if field.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidInput(format!("{what} contains a tab or newline")));
    }
    Ok(())
}

/// `identifier1 identifier2 annotator judgment comment`, abstain written as `0`.
pub fn write_judgments<W: Write>(mut w: W, judgments: &[Judgment]) -> Result<()> {
    writeln!(w, "identifier1\tidentifier2\tannotator\tjudgment\tcomment").map_err(|e| Error::io("<judgments>", e))?;
    let mut out = writer(w);
    for j in judgments {
        let comment = j.comment.clone().unwrap_or_default();
        clean(&comment, "comment")?;
        clean(&j.annotator, "annotator")?;
        out.serialize(JudgmentRow {
            identifier1: j.usage_id_1.clone(),
            identifier2: j.usage_id_2.clone(),
            annotator: j.annotator.clone(),
            judgment: i64::from(j.rating.code()),
            comment,
        })?;
    }
    out.flush().map_err(|e| Error::io("<judgments>", e))?;
    Ok(())
}

pub fn read_judgments<R: Read>(r: R) -> Result<Vec<Judgment>> {
    let mut out = Vec::new();
    for row in tsv_reader(r).deserialize::<JudgmentRow>() {
        let row = row?;
        out.push(Judgment {
            usage_id_1: row.identifier1,
            usage_id_2: row.identifier2,
            annotator: row.annotator,
            rating: Rating::from_code(row.judgment)?,
            comment: (!row.comment.is_empty()).then_some(row.comment),
        });
    }
    Ok(out)
}

pub fn write_clusters<W: Write>(mut w: W, clustering: &Clustering) -> Result<()> {
    writeln!(w, "identifier\tcluster").map_err(|e| Error::io("<clusters>", e))?;
    let mut out = writer(w);
    for (id, &cluster) in clustering {
        out.serialize(ClusterRow { identifier: id.clone(), cluster })?;
    }
    out.flush().map_err(|e| Error::io("<clusters>", e))?;
    Ok(())
}

pub fn read_clusters<R: Read>(r: R) -> Result<Clustering> {
    let mut out = Clustering::new();
    for row in tsv_reader(r).deserialize::<ClusterRow>() {
        let row = row?;
        if out.insert(row.identifier.clone(), row.cluster).is_some() {
            return Err(Error::duplicate("usage", &row.identifier));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judgments_roundtrip() {
        let mut with_comment = Judgment::new("a", "b", "ann1", Rating::Abstain);
        with_comment.comment = Some("unclear context".into());
        let js = vec![with_comment, Judgment::new("b", "c", "ann2", Rating::Score(3))];
        let mut buf = Vec::new();
        write_judgments(&mut buf, &js).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("identifier1\tidentifier2\tannotator\tjudgment\tcomment\na\tb\tann1\t0\tunclear context\n"));
        assert_eq!(read_judgments(&buf[..]).unwrap(), js);

        let mut empty = Vec::new();
        write_judgments(&mut empty, &[]).unwrap();
        assert!(read_judgments(&empty[..]).unwrap().is_empty());
    }

    #[test]
    fn bad_rating_rejected() {
        let text = "identifier1\tidentifier2\tannotator\tjudgment\tcomment\na\tb\tx\t7\t\n";
        assert!(read_judgments(text.as_bytes()).is_err());
    }

    #[test]
    fn clusters_roundtrip() {
        let c: Clustering = [("a".to_string(), 0), ("b".to_string(), 1)].into();
        let mut buf = Vec::new();
        write_clusters(&mut buf, &c).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "identifier\tcluster\na\t0\nb\t1\n");
        assert_eq!(read_clusters(&buf[..]).unwrap(), c);
        assert!(read_clusters("identifier\tcluster\na\t0\na\t1\n".as_bytes()).is_err());
    }
}
