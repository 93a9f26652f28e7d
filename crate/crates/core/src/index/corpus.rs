use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `id<TAB>text` per line.
    Tsv,
    /// `{"id": ..., "contents": ...}` per line.
    Jsonl,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<(String, String)>> {
    match format {
        CorpusFormat::Tsv => read_tsv_corpus(path),
        CorpusFormat::Jsonl => read_jsonl_corpus(path),
    }
}

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufReader::new(f).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

pub fn read_tsv_corpus(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, no, "expected id<TAB>text"))?;
        if id.is_empty() {
            return Err(Error::parse(path, no, "empty document id"));
        }
        out.push((id.to_string(), text.to_string()));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonDoc {
    id: String,
    contents: String,
}

pub fn read_jsonl_corpus(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: JsonDoc = serde_json::from_str(&line).map_err(|e| Error::parse(path, no, e.to_string()))?;
        out.push((doc.id, doc.contents));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn tsv_and_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let tsv = dir.path().join("c.tsv");
        std::fs::write(&tsv, "d1\tsharks swim\n\nd2\tcats\n").unwrap();
        let c = read_corpus(&tsv, CorpusFormat::Tsv).unwrap();
        assert_eq!(
            c,
            vec![("d1".into(), "sharks swim".into()), ("d2".into(), "cats".into())]
        );

        let jl = dir.path().join("c.jsonl");
        let mut f = std::fs::File::create(&jl).unwrap();
        writeln!(f, r#"{{"id": "a", "contents": "x y"}}"#).unwrap();
        writeln!(f, r#"{{"id": "b"}}"#).unwrap();
        match read_corpus(&jl, CorpusFormat::Jsonl) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tsv_without_tab() {
        let dir = tempfile::tempdir().unwrap();
        let tsv = dir.path().join("c.tsv");
        std::fs::write(&tsv, "d1\tok\nbroken line\n").unwrap();
        assert!(matches!(read_tsv_corpus(&tsv), Err(Error::Parse { line: 2, .. })));
    }
}
