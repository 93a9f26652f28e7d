//! Annotations produced by an external NLP toolkit, supplied as JSONL keyed
//! by turn id. Spans are character offsets into the raw utterance, end
//! exclusive.
//!
//! ```json
//! {"turn_id": "31_2", "tokens": ["What", "is", "it", "about", "?"],
//!  "pos": ["PRON", "AUX", "PRON", "ADP", "PUNCT"],
//!  "noun_chunks": [], "pronouns": [{"start": 8, "end": 10}]}
//! ```

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use super::annotate::{is_replaceable_pronoun, Annotation, NounChunk, Pos, Role, TaggedToken};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq, Eq)]
pub struct ExternalChunk {
    pub start: usize,
    pub end: usize,
    #[serde(default = "default_role")]
    pub role: Role,
}

fn default_role() -> Role {
    Role::Other
}

#[derive(Debug, Clone, Deserialize, PartialEq, Eq)]
pub struct ExternalAnnotation {
    pub turn_id: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub pos: Vec<String>,
    #[serde(default)]
    pub noun_chunks: Vec<ExternalChunk>,
    #[serde(default)]
    pub pronouns: Vec<CharSpan>,
}

pub fn load_annotations(path: &Path) -> Result<HashMap<String, ExternalAnnotation>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ann: ExternalAnnotation =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if ann.tokens.len() != ann.pos.len() {
            return Err(Error::parse(path, i + 1, "tokens and pos differ in length"));
        }
        if out.contains_key(&ann.turn_id) {
            return Err(Error::parse(path, i + 1, format!("duplicate turn {}", ann.turn_id)));
        }
        out.insert(ann.turn_id.clone(), ann);
    }
    Ok(out)
}

impl ExternalAnnotation {
    /// Aligns the annotation with `text` and converts it.
    pub fn resolve(&self, text: &str) -> Result<Annotation> {
        let invalid = |msg: String| Error::Conversation {
            conv_id: self.turn_id.clone(),
            msg,
        };
        // char offset -> byte offset, including the one-past-the-end position
        let mut byte_at: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        byte_at.push(text.len());
        let to_bytes = |s: usize, e: usize| -> Result<std::ops::Range<usize>> {
            if s >= e || e >= byte_at.len() {
                return Err(invalid(format!("span {s}..{e} outside the utterance")));
            }
            Ok(byte_at[s]..byte_at[e])
        };

        let mut tokens = Vec::with_capacity(self.tokens.len());
        let mut cursor = 0;
        for (tok, tag) in self.tokens.iter().zip(&self.pos) {
            let at = text[cursor..]
                .find(tok.as_str())
                .ok_or_else(|| invalid(format!("token {tok:?} not found in utterance")))?
                + cursor;
            cursor = at + tok.len();
            tokens.push(TaggedToken {
                text: tok.clone(),
                span: at..cursor,
                pos: Pos::from_tag(tag),
            });
        }

        let mut chunks = Vec::with_capacity(self.noun_chunks.len());
        for c in &self.noun_chunks {
            let span = to_bytes(c.start, c.end)?;
            let covered: Vec<usize> = tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| t.span.start < span.end && t.span.end > span.start)
                .map(|(i, _)| i)
                .collect();
            let range = match (covered.first(), covered.last()) {
                (Some(&a), Some(&b)) => a..b + 1,
                _ => 0..0,
            };
            if text[span.clone()].split_whitespace().all(is_replaceable_pronoun) {
                log::debug!("{}: ignoring pronoun-only chunk", self.turn_id);
                continue;
            }
            chunks.push(NounChunk {
                tokens: range,
                span,
                role: c.role,
            });
        }
        chunks.sort_by_key(|c| c.span.start);
        if chunks.windows(2).any(|w| w[0].span.end > w[1].span.start) {
            return Err(invalid("overlapping noun chunks".into()));
        }

        let mut pronouns = self
            .pronouns
            .iter()
            .map(|p| to_bytes(p.start, p.end))
            .collect::<Result<Vec<_>>>()?;
        pronouns.sort_by_key(|r| r.start);

        Ok(Annotation {
            text: text.to_string(),
            tokens,
            chunks,
            pronouns,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_aligns_tokens_and_spans() {
        let line = r#"{"turn_id": "1_1", "tokens": ["Tell", "me", "about", "the", "Nëverending", "Story", "."],
            "pos": ["VERB", "PRON", "ADP", "DET", "PROPN", "PROPN", "PUNCT"],
            "noun_chunks": [{"start": 14, "end": 35, "role": "object"}], "pronouns": []}"#;
        let ext: ExternalAnnotation = serde_json::from_str(line).unwrap();
        let a = ext.resolve("Tell me about the Nëverending Story.").unwrap();
        assert_eq!(a.chunks.len(), 1);
        assert_eq!(a.chunk_text(&a.chunks[0]), "the Nëverending Story");
        assert_eq!(a.chunk_keywords(&a.chunks[0]), "Nëverending Story");
        assert_eq!(a.chunks[0].role, Role::Object);
    }

    #[test]
    fn bad_spans_rejected() {
        let ext = ExternalAnnotation {
            turn_id: "x".into(),
            tokens: vec![],
            pos: vec![],
            noun_chunks: vec![],
            pronouns: vec![CharSpan { start: 3, end: 40 }],
        };
        assert!(ext.resolve("short").is_err());
        let ext = ExternalAnnotation {
            turn_id: "x".into(),
            tokens: vec![],
            pos: vec![],
            noun_chunks: vec![
                ExternalChunk {
                    start: 0,
                    end: 4,
                    role: Role::Subject,
                },
                ExternalChunk {
                    start: 2,
                    end: 6,
                    role: Role::Object,
                },
            ],
            pronouns: vec![],
        };
        assert!(ext.resolve("abcdefgh").is_err());
    }

    #[test]
    fn jsonl_loading() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        std::fs::write(
            &p,
            "{\"turn_id\": \"a\", \"tokens\": [\"x\"], \"pos\": [\"NOUN\"]}\n{\"turn_id\": \"a\"}\n",
        )
        .unwrap();
        assert!(matches!(load_annotations(&p), Err(Error::Parse { line: 2, .. })));
    }
}
