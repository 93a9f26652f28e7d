//! Heuristic linguistic annotation: lexicon-driven part-of-speech tags,
//! `det? (adj|num)* noun+` noun chunks, and a closed pronoun list.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textpipe::tokenize;

/// Pronouns that topic propagation and coreference replace.
pub const PRONOUNS: &[&str] = &[
    "it", "its", "they", "them", "their", "this", "that", "these", "those", "he", "she", "him", "her",
];

// possessives behave like determiners in front of a noun
const POSSESSIVES: &[&str] = &["my", "your", "his", "her", "its", "our", "their"];

pub fn is_replaceable_pronoun(word: &str) -> bool {
    PRONOUNS.contains(&word.to_lowercase().as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pos {
    Det,
    Pron,
    Noun,
    Propn,
    Adj,
    Num,
    Verb,
    Aux,
    Adp,
    Adv,
    Conj,
    Part,
    Wh,
    Other,
}

impl Pos {
    fn is_nominal(self) -> bool {
        matches!(self, Pos::Noun | Pos::Propn)
    }

    fn is_modifier(self) -> bool {
        matches!(self, Pos::Adj | Pos::Num)
    }

    pub fn is_verbal(self) -> bool {
        matches!(self, Pos::Verb | Pos::Aux)
    }

    /// Maps Universal Dependencies / Penn-ish tag names.
    pub fn from_tag(tag: &str) -> Pos {
        match tag.to_ascii_uppercase().as_str() {
            "DET" | "DT" | "PDT" => Pos::Det,
            "PRON" | "PRP" | "PRP$" => Pos::Pron,
            "NOUN" | "NN" | "NNS" => Pos::Noun,
            "PROPN" | "NNP" | "NNPS" => Pos::Propn,
            "ADJ" | "JJ" | "JJR" | "JJS" => Pos::Adj,
            "NUM" | "CD" => Pos::Num,
            "VERB" | "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" => Pos::Verb,
            "AUX" | "MD" => Pos::Aux,
            "ADP" | "IN" => Pos::Adp,
            "ADV" | "RB" | "RBR" | "RBS" => Pos::Adv,
            "CCONJ" | "SCONJ" | "CONJ" | "CC" => Pos::Conj,
            "PART" | "RP" | "TO" => Pos::Part,
            "WDT" | "WP" | "WP$" | "WRB" => Pos::Wh,
            _ => Pos::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Subject,
    Object,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub text: String,
    /// Byte span in the utterance.
    pub span: Range<usize>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounChunk {
    /// Token index range.
    pub tokens: Range<usize>,
    /// Byte span in the utterance.
    pub span: Range<usize>,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub text: String,
    pub tokens: Vec<TaggedToken>,
    pub chunks: Vec<NounChunk>,
    /// Byte spans of replaceable pronouns, ascending.
    pub pronouns: Vec<Range<usize>>,
}

impl Annotation {
    pub fn chunk_text(&self, chunk: &NounChunk) -> &str {
        &self.text[chunk.span.clone()]
    }

    /// Chunk text without a leading determiner.
    pub fn chunk_keywords(&self, chunk: &NounChunk) -> &str {
        let mut start = chunk.span.start;
        if let Some(first) = self.tokens.get(chunk.tokens.start) {
            if first.pos == Pos::Det && chunk.tokens.len() > 1 {
                start = self.tokens[chunk.tokens.start + 1].span.start;
            }
        }
        &self.text[start.max(chunk.span.start)..chunk.span.end]
    }

    /// Subject and object chunks, determiner-stripped, in textual order.
    pub fn keyword_chunks(&self) -> impl Iterator<Item = &str> {
        self.chunks
            .iter()
            .filter(|c| c.role != Role::Other)
            .map(|c| self.chunk_keywords(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LexTag {
    Fixed(Pos),
    Demonstrative,
    NounOrVerb,
}

fn lexicon() -> &'static HashMap<String, LexTag> {
    static LEXICON: OnceLock<HashMap<String, LexTag>> = OnceLock::new();
    LEXICON.get_or_init(|| {
        include_str!("../../data/lexicon.tsv")
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .filter_map(|l| {
                let (word, tag) = l.split_once('\t')?;
                let tag = match tag.trim() {
                    "DEM" => LexTag::Demonstrative,
                    "NV" => LexTag::NounOrVerb,
                    other => LexTag::Fixed(Pos::from_tag(other)),
                };
                Some((word.to_string(), tag))
            })
            .collect()
    })
}

fn guess_unknown(surface: &str, sentence_initial: bool, prev: Option<Pos>) -> Pos {
    let lower = surface.to_lowercase();
    let n = lower.chars().count();
    if lower.chars().all(|c| c.is_ascii_digit()) {
        return Pos::Num;
    }
    if !sentence_initial && surface.chars().next().is_some_and(char::is_uppercase) {
        return Pos::Propn;
    }
    let after_det = matches!(prev, Some(Pos::Det | Pos::Adj | Pos::Adp | Pos::Pron));
    if n > 4 && lower.ends_with("ly") {
        Pos::Adv
    } else if n > 5 && lower.ends_with("ing") {
        if after_det {
            Pos::Noun
        } else {
            Pos::Verb
        }
    } else if n > 4 && lower.ends_with("ed") {
        if after_det {
            Pos::Adj
        } else {
            Pos::Verb
        }
    } else if ["ous", "ful", "ive", "able", "ible", "ical", "less", "ish"]
        .iter()
        .any(|s| lower.ends_with(s))
        || (n > 5 && lower.ends_with("al"))
        || (n > 4 && lower.ends_with("ic"))
    {
        Pos::Adj
    } else {
        Pos::Noun
    }
}

/// Annotates one utterance with the built-in heuristic tagger.
pub fn annotate(utterance: &str) -> Result<Annotation> {
    if utterance.trim().is_empty() {
        return Err(Error::Config("cannot annotate an empty utterance".into()));
    }
    let raw = tokenize(utterance);
    let lex = lexicon();

    // a token is sentence-initial when only whitespace/openers separate it
    // from the start or from a sentence terminator
    let mut boundary = Vec::with_capacity(raw.len());
    let mut initial = Vec::with_capacity(raw.len());
    let mut prev_end = 0;
    for (i, t) in raw.iter().enumerate() {
        let gap = &utterance[prev_end..t.offset.start];
        boundary.push(i > 0 && gap.chars().any(|c| !c.is_whitespace()));
        initial.push(i == 0 || gap.contains(['.', '?', '!', ';', ':']));
        prev_end = t.offset.end;
    }

    let lookups: Vec<Option<LexTag>> = raw.iter().map(|t| lex.get(&t.normalized).copied()).collect();
    let mut tags: Vec<Pos> = Vec::with_capacity(raw.len());
    for (i, t) in raw.iter().enumerate() {
        let prev = tags.last().copied().filter(|_| !boundary[i]);
        let pos = match lookups[i] {
            Some(LexTag::Fixed(p)) => p,
            Some(LexTag::NounOrVerb) => {
                // "do plants need ..." : after an auxiliary, a following verb
                // makes this word the subject
                let next_verbal = matches!(
                    lookups.get(i + 1),
                    Some(Some(LexTag::NounOrVerb | LexTag::Fixed(Pos::Verb)))
                );
                let after_possessive = prev.is_some() && POSSESSIVES.contains(&raw[i - 1].normalized.as_str());
                let verbal_context = initial[i]
                    || (matches!(prev, Some(Pos::Pron | Pos::Wh | Pos::Part)) && !after_possessive)
                    || (prev == Some(Pos::Aux) && !next_verbal);
                if verbal_context {
                    Pos::Verb
                } else {
                    Pos::Noun
                }
            }
            // resolved below, once the following token is known
            Some(LexTag::Demonstrative) => Pos::Det,
            None => guess_unknown(&t.surface, initial[i], prev),
        };
        tags.push(pos);
    }
    for i in 0..raw.len() {
        if lookups[i] == Some(LexTag::Demonstrative) {
            let mut j = i + 1;
            while j < raw.len() && !boundary[j] && tags[j].is_modifier() {
                j += 1;
            }
            let next_nominal = j < raw.len() && !boundary[j] && tags[j].is_nominal();
            tags[i] = if next_nominal { Pos::Det } else { Pos::Pron };
        }
    }

    let tokens: Vec<TaggedToken> = raw
        .iter()
        .zip(&tags)
        .map(|(t, &pos)| TaggedToken {
            text: t.surface.clone(),
            span: t.offset.clone(),
            pos,
        })
        .collect();

    let first_verb = tags.iter().position(|p| p.is_verbal());
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(end) = match_chunk(&tags, &boundary, i) {
            let role = match first_verb {
                Some(v) if i > v => Role::Object,
                _ => Role::Subject,
            };
            chunks.push(NounChunk {
                tokens: i..end,
                span: tokens[i].span.start..tokens[end - 1].span.end,
                role,
            });
            i = end;
        } else {
            i += 1;
        }
    }

    let pronouns = tokens
        .iter()
        .filter(|t| t.pos == Pos::Pron && is_replaceable_pronoun(&t.text))
        .map(|t| t.span.clone())
        .collect();

    Ok(Annotation {
        text: utterance.to_string(),
        tokens,
        chunks,
        pronouns,
    })
}

/// End (exclusive) of a `det? (adj|num)* noun+` match starting at `start`.
fn match_chunk(tags: &[Pos], boundary: &[bool], start: usize) -> Option<usize> {
    let mut i = start;
    let joined = |j: usize| j == start || !boundary[j];
    if tags[i] == Pos::Det {
        i += 1;
    }
    while i < tags.len() && joined(i) && tags[i].is_modifier() {
        i += 1;
    }
    let noun_start = i;
    while i < tags.len() && joined(i) && tags[i].is_nominal() {
        i += 1;
    }
    (i > noun_start).then_some(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunks(text: &str) -> Vec<(String, Role)> {
        let a = annotate(text).unwrap();
        a.chunks.iter().map(|c| (a.chunk_text(c).to_string(), c.role)).collect()
    }

    fn pronouns(text: &str) -> Vec<String> {
        let a = annotate(text).unwrap();
        a.pronouns.iter().map(|s| text[s.clone()].to_string()).collect()
    }

    #[test]
    fn neverending_first_turn() {
        let text = "Tell me about the Neverending Story film.";
        assert_eq!(
            chunks(text),
            vec![("the Neverending Story film".to_string(), Role::Object)]
        );
        assert!(pronouns(text).is_empty());
    }

    #[test]
    fn pronoun_only_question() {
        let text = "What is it about?";
        assert!(chunks(text).is_empty());
        assert_eq!(pronouns(text), vec!["it"]);
    }

    #[test]
    fn bare_noun_phrase() {
        assert_eq!(chunks("lung cancer"), vec![("lung cancer".to_string(), Role::Subject)]);
    }

    #[test]
    fn modifiers_and_punctuation_boundaries() {
        assert_eq!(
            chunks("What are the main themes?"),
            vec![("the main themes".to_string(), Role::Object)]
        );
        let got: Vec<String> = chunks("Compare sharks, whales and dolphins.")
            .into_iter()
            .map(|c| c.0)
            .collect();
        assert_eq!(got, vec!["sharks", "whales", "dolphins"]);
    }

    #[test]
    fn demonstratives() {
        assert_eq!(pronouns("Is that dangerous?"), vec!["that"]);
        assert!(pronouns("Is that shark dangerous?").is_empty());
        assert_eq!(chunks("Is that shark dangerous?")[0].0, "that shark");
    }

    #[test]
    fn noun_or_verb_by_context() {
        let a = annotate("How much does it cost?").unwrap();
        assert_eq!(a.tokens[4].pos, Pos::Verb);
        let a = annotate("What is the cost of treatment?").unwrap();
        assert_eq!(a.tokens[3].pos, Pos::Noun);
    }

    #[test]
    fn noun_subject_after_auxiliary() {
        let a = annotate("What do plants need?").unwrap();
        assert_eq!(a.tokens[2].pos, Pos::Noun);
    }

    #[test]
    fn noun_after_possessive() {
        let a = annotate("What is their cost?").unwrap();
        assert_eq!(a.tokens[3].pos, Pos::Noun);
        assert_eq!(a.chunk_text(&a.chunks[0]), "cost");
        let a = annotate("Do they cost much?").unwrap();
        assert_eq!(a.tokens[2].pos, Pos::Verb);
    }

    #[test]
    fn determiner_stripped_keywords() {
        let a = annotate("Tell me about the Neverending Story film.").unwrap();
        assert_eq!(a.chunk_keywords(&a.chunks[0]), "Neverending Story film");
    }

    #[test]
    fn empty_rejected() {
        assert!(annotate("").is_err());
        assert!(annotate("   ").is_err());
    }

    #[test]
    fn chunks_never_pure_pronouns() {
        for text in ["They eat them.", "What do these do?", "Her book and its plot"] {
            let a = annotate(text).unwrap();
            for c in &a.chunks {
                assert!(!a.chunk_keywords(c).split_whitespace().all(is_replaceable_pronoun));
            }
        }
    }
}
