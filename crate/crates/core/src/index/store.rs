//! On-disk layout: a directory holding `manifest.json` and four binary
//! segments (little-endian), each guarded by a CRC32 recorded in the manifest.
//!
//! ```text
//! terms.bin     per term: u32 len, utf8 bytes, u64 cf, u32 df   (term order)
//! postings.bin  per term: df x (u32 doc, u32 tf)
//! doclens.bin   per doc:  u32 length
//! docs.bin      per doc:  u32 len, id bytes, u32 len, text bytes
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DocRecord, Index, Posting, TermEntry};
use crate::error::{Error, Result};
use crate::textpipe::{Analyzer, AnalyzerConfig};

pub const FORMAT_VERSION: &str = "convsearch-index/1";

const MANIFEST: &str = "manifest.json";
const TERMS: &str = "terms.bin";
const POSTINGS: &str = "postings.bin";
const DOCLENS: &str = "doclens.bin";
const DOCS: &str = "docs.bin";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: String,
    analyzer: AnalyzerConfig,
    analyzer_fingerprint: String,
    doc_count: u32,
    total_terms: u64,
    term_count: u32,
    segments: Vec<SegmentInfo>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentInfo {
    file: String,
    bytes: u64,
    crc32: u32,
}

impl Index {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut terms = Vec::new();
        for t in self.term_entries() {
            put_bytes(&mut terms, t.term.as_bytes());
            terms.extend_from_slice(&t.cf.to_le_bytes());
            terms.extend_from_slice(&t.df.to_le_bytes());
        }
        let mut postings = Vec::new();
        for p in self.all_postings().iter().flatten() {
            postings.extend_from_slice(&p.doc.to_le_bytes());
            postings.extend_from_slice(&p.tf.to_le_bytes());
        }
        let doclens: Vec<u8> = self.doc_lengths().iter().flat_map(|l| l.to_le_bytes()).collect();
        let mut docs = Vec::new();
        for d in self.docs() {
            put_bytes(&mut docs, d.external_id.as_bytes());
            put_bytes(&mut docs, d.text.as_bytes());
        }

        let mut segments = Vec::new();
        for (name, data) in [(TERMS, terms), (POSTINGS, postings), (DOCLENS, doclens), (DOCS, docs)] {
            let path = dir.join(name);
            fs::write(&path, &data).map_err(|e| Error::io(&path, e))?;
            segments.push(SegmentInfo {
                file: name.to_string(),
                bytes: data.len() as u64,
                crc32: crc32fast::hash(&data),
            });
        }

        let cfg = self.analyzer().config().clone();
        let manifest = Manifest {
            version: FORMAT_VERSION.to_string(),
            analyzer_fingerprint: cfg.fingerprint(),
            analyzer: cfg,
            doc_count: self.doc_count(),
            total_terms: self.total_terms(),
            term_count: self.term_entries().len() as u32,
            segments,
        };
        let path = dir.join(MANIFEST);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Index> {
        let manifest_path = dir.join(MANIFEST);
        let raw = read_file(&manifest_path)?;
        // check the version tag before trusting the rest of the schema
        let value: serde_json::Value =
            serde_json::from_slice(&raw).map_err(|e| corrupt(&manifest_path, e.to_string()))?;
        let found = value.get("version").and_then(|v| v.as_str()).unwrap_or("");
        if found != FORMAT_VERSION {
            return Err(Error::IndexVersion {
                path: manifest_path,
                found: found.to_string(),
                expected: FORMAT_VERSION.to_string(),
            });
        }
        let manifest: Manifest = serde_json::from_value(value).map_err(|e| corrupt(&manifest_path, e.to_string()))?;
        if manifest.analyzer.fingerprint() != manifest.analyzer_fingerprint {
            return Err(Error::Checksum { path: manifest_path });
        }

        let segment = |name: &str| -> Result<(PathBuf, Vec<u8>)> {
            let info = manifest
                .segments
                .iter()
                .find(|s| s.file == name)
                .ok_or_else(|| corrupt(&manifest_path, format!("segment {name} not listed")))?;
            let path = dir.join(name);
            let data = read_file(&path)?;
            if data.len() as u64 != info.bytes || crc32fast::hash(&data) != info.crc32 {
                return Err(Error::Checksum { path });
            }
            Ok((path, data))
        };

        let (path, data) = segment(TERMS)?;
        let mut r = Reader::new(&path, &data);
        let mut terms = Vec::with_capacity(manifest.term_count as usize);
        for _ in 0..manifest.term_count {
            let term = r.string()?;
            let cf = r.u64()?;
            let df = r.u32()?;
            terms.push(TermEntry { term, cf, df });
        }
        r.finish()?;

        let (path, data) = segment(POSTINGS)?;
        let mut r = Reader::new(&path, &data);
        let mut postings = Vec::with_capacity(terms.len());
        for t in &terms {
            let mut plist = Vec::with_capacity(t.df as usize);
            for _ in 0..t.df {
                let doc = r.u32()?;
                let tf = r.u32()?;
                if doc >= manifest.doc_count {
                    return Err(corrupt(&path, format!("doc ordinal {doc} out of range")));
                }
                plist.push(Posting { doc, tf });
            }
            postings.push(plist);
        }
        r.finish()?;

        let (path, data) = segment(DOCLENS)?;
        let mut r = Reader::new(&path, &data);
        let doc_lengths = (0..manifest.doc_count).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        r.finish()?;

        let (path, data) = segment(DOCS)?;
        let mut r = Reader::new(&path, &data);
        let mut docs = Vec::with_capacity(manifest.doc_count as usize);
        for _ in 0..manifest.doc_count {
            let external_id = r.string()?;
            let text = r.string()?;
            docs.push(DocRecord { external_id, text });
        }
        r.finish()?;

        let index = Index::assemble(Analyzer::new(manifest.analyzer), terms, postings, doc_lengths, docs);
        if index.total_terms() != manifest.total_terms {
            return Err(corrupt(&manifest_path, "total term count disagrees with segments"));
        }
        Ok(index)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingIndexFile {
                path: path.to_path_buf(),
            }
        } else {
            Error::io(path, e)
        }
    })
}

fn corrupt(path: &Path, msg: impl Into<String>) -> Error {
    Error::CorruptSegment {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn put_bytes(buf: &mut Vec<u8>, bytes: &[u8]) {
    buf.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    buf.extend_from_slice(bytes);
}

struct Reader<'a> {
    path: &'a Path,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(path: &'a Path, data: &'a [u8]) -> Self {
        Reader { path, data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| corrupt(self.path, "unexpected end of segment"))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| corrupt(self.path, "invalid utf-8"))
    }

    fn finish(&self) -> Result<()> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(corrupt(self.path, "trailing bytes"))
        }
    }
}
