use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub index: usize,
    pub raw: String,
    pub manual: Option<String>,
    /// `<conv_id>_<index>`
    pub turn_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    pub conv_id: String,
    pub turns: Vec<Turn>,
}

impl Conversation {
    /// Builds a conversation from raw utterances numbered 1..n.
    pub fn from_utterances<I, T>(conv_id: impl Into<String>, utterances: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let conv_id = conv_id.into();
        let turns = utterances
            .into_iter()
            .enumerate()
            .map(|(i, raw)| Turn {
                index: i + 1,
                raw: raw.into(),
                manual: None,
                turn_id: format!("{conv_id}_{}", i + 1),
            })
            .collect();
        let conv = Conversation { conv_id, turns };
        conv.validate()?;
        Ok(conv)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Error::Conversation {
            conv_id: self.conv_id.clone(),
            msg,
        };
        for (i, t) in self.turns.iter().enumerate() {
            if t.index != i + 1 {
                return Err(bad(format!(
                    "turn numbers must run 1..n, found {} at position {}",
                    t.index,
                    i + 1
                )));
            }
            if t.raw.trim().is_empty() {
                return Err(bad(format!("turn {} has an empty utterance", t.index)));
            }
        }
        Ok(())
    }

    /// The first `n` turns.
    pub fn prefix(&self, n: usize) -> Conversation {
        Conversation {
            conv_id: self.conv_id.clone(),
            turns: self.turns.iter().take(n).cloned().collect(),
        }
    }
}

#[derive(Deserialize)]
struct CastTopic {
    number: serde_json::Value,
    turn: Vec<CastTurn>,
}

#[derive(Deserialize)]
struct CastTurn {
    number: usize,
    raw_utterance: String,
    #[serde(default)]
    manual_rewritten_utterance: Option<String>,
}

fn id_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses TREC CAsT style topics:
/// `[{"number": 31, "turn": [{"number": 1, "raw_utterance": "..."}]}]`.
pub fn parse_conversations(json: &str) -> std::result::Result<Vec<Conversation>, String> {
    let topics: Vec<CastTopic> = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(topics.len());
    for topic in topics {
        let conv_id = id_string(&topic.number);
        if !seen.insert(conv_id.clone()) {
            return Err(format!("duplicate conversation {conv_id}"));
        }
        let mut turns: Vec<Turn> = topic
            .turn
            .into_iter()
            .map(|t| Turn {
                index: t.number,
                turn_id: format!("{conv_id}_{}", t.number),
                raw: t.raw_utterance,
                manual: t.manual_rewritten_utterance,
            })
            .collect();
        turns.sort_by_key(|t| t.index);
        let conv = Conversation { conv_id, turns };
        conv.validate().map_err(|e| e.to_string())?;
        out.push(conv);
    }
    Ok(out)
}

pub fn load_conversations(path: &Path) -> Result<Vec<Conversation>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_conversations(&text).map_err(|msg| Error::parse(path, 0, msg))
}

/// Reads `turn_id<TAB>text` lines.
pub fn read_turn_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected turn_id<TAB>text"))?;
        out.push((id.to_string(), text.to_string()));
    }
    Ok(out)
}

/// Attaches manual rewrites (`turn_id<TAB>text`) to matching turns.
pub fn attach_manual(convs: &mut [Conversation], path: &Path) -> Result<()> {
    let manual: HashMap<String, String> = read_turn_tsv(path)?.into_iter().collect();
    let mut used = 0;
    for turn in convs.iter_mut().flat_map(|c| c.turns.iter_mut()) {
        if let Some(text) = manual.get(&turn.turn_id) {
            turn.manual = Some(text.clone());
            used += 1;
        }
    }
    if used < manual.len() {
        log::warn!(
            "{}: {} manual rewrites match no turn",
            path.display(),
            manual.len() - used
        );
    }
    Ok(())
}

/// Writes `turn_id<TAB>text`, flattening tabs and newlines in the text.
pub fn write_rewrites<W: Write>(mut out: W, rewrites: &[(String, String)]) -> std::io::Result<()> {
    for (id, text) in rewrites {
        let clean: String = text
            .chars()
            .map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        writeln!(out, "{id}\t{clean}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cast_json() {
        let json = r#"[{"number": 31, "turn": [
            {"number": 2, "raw_utterance": "What is it about?"},
            {"number": 1, "raw_utterance": "Tell me about the Neverending Story film."}]},
          {"number": "abc", "turn": [{"number": 1, "raw_utterance": "lung cancer",
             "manual_rewritten_utterance": "lung cancer"}]}]"#;
        let convs = parse_conversations(json).unwrap();
        assert_eq!(convs[0].conv_id, "31");
        assert_eq!(convs[0].turns[0].turn_id, "31_1");
        assert_eq!(convs[0].turns[1].raw, "What is it about?");
        assert_eq!(convs[1].turns[0].turn_id, "abc_1");
        assert_eq!(convs[1].turns[0].manual.as_deref(), Some("lung cancer"));
    }

    #[test]
    fn gaps_and_empty_rejected() {
        let gap =
            r#"[{"number": 1, "turn": [{"number": 1, "raw_utterance": "a"}, {"number": 3, "raw_utterance": "b"}]}]"#;
        assert!(parse_conversations(gap).is_err());
        let empty = r#"[{"number": 1, "turn": [{"number": 1, "raw_utterance": " "}]}]"#;
        assert!(parse_conversations(empty).is_err());
        let dup = r#"[{"number": 1, "turn": []}, {"number": 1, "turn": []}]"#;
        assert!(parse_conversations(dup).is_err());
    }

    #[test]
    fn manual_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tsv");
        std::fs::write(&p, "c_2\tWhat is the film about?\nzz_9\tunused\n").unwrap();
        let mut convs = vec![Conversation::from_utterances("c", ["a b", "what is it"]).unwrap()];
        attach_manual(&mut convs, &p).unwrap();
        assert_eq!(convs[0].turns[1].manual.as_deref(), Some("What is the film about?"));
        assert_eq!(convs[0].turns[0].manual, None);
    }

    #[test]
    fn rewrites_flatten_tabs() {
        let mut buf = Vec::new();
        write_rewrites(&mut buf, &[("a_1".into(), "x\ty\nz".into())]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a_1\tx y z\n");
    }
}
