//! Topic extraction, cue-based topic shift detection and topic propagation.

use std::collections::HashSet;
use std::path::Path;

use super::annotate::{Annotation, Role};
use crate::error::{Error, Result};
use crate::textpipe::{tokenize, Analyzer};

pub const DEFAULT_CUES: &[&str] = &["tell me about", "tell me more about", "what about", "how about"];

/// Cue phrases announcing a (possibly new) topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueLexicon {
    phrases: Vec<Vec<String>>,
}

impl Default for CueLexicon {
    fn default() -> Self {
        CueLexicon::from_phrases(DEFAULT_CUES.iter().copied())
    }
}

impl CueLexicon {
    pub fn from_phrases<'a>(phrases: impl IntoIterator<Item = &'a str>) -> Self {
        let mut phrases: Vec<Vec<String>> = phrases
            .into_iter()
            .map(|p| tokenize(p).into_iter().map(|t| t.normalized).collect::<Vec<_>>())
            .filter(|p| !p.is_empty())
            .collect();
        phrases.dedup();
        CueLexicon { phrases }
    }

    /// One phrase per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        CueLexicon::from_phrases(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(CueLexicon::parse(&text))
    }

    /// Token index just past the earliest cue occurrence, if any.
    fn cue_end(&self, words: &[String]) -> Option<usize> {
        (0..words.len()).find_map(|start| {
            self.phrases
                .iter()
                .filter(|p| words[start..].starts_with(p))
                .map(|p| start + p.len())
                .max()
        })
    }
}

/// First subject or object chunk of the annotation, determiner stripped.
pub fn first_topic(annotation: &Annotation) -> Option<String> {
    annotation
        .chunks
        .iter()
        .find(|c| matches!(c.role, Role::Subject | Role::Object))
        .map(|c| annotation.chunk_keywords(c).to_string())
}

/// The chunk introduced by a cue phrase, e.g. "Tell me about throat cancer."
/// yields "throat cancer".
pub fn detect_topic_shift(annotation: &Annotation, cues: &CueLexicon) -> Option<String> {
    let words: Vec<String> = annotation.tokens.iter().map(|t| t.text.to_lowercase()).collect();
    let end = cues.cue_end(&words)?;
    annotation
        .chunks
        .iter()
        .find(|c| c.tokens.start >= end)
        .map(|c| annotation.chunk_keywords(c).to_string())
}

/// Whether any analyzed term of `topic` occurs in `text`.
pub(crate) fn mentions(analyzer: &Analyzer, text: &str, topic: &str) -> bool {
    let mut topic_terms = analyzer.analyze(topic);
    let text_terms: HashSet<String> = if topic_terms.is_empty() {
        // topic made only of stopwords: fall back to surface words
        topic_terms = tokenize(topic).into_iter().map(|t| t.normalized).collect();
        tokenize(text).into_iter().map(|t| t.normalized).collect()
    } else {
        analyzer.analyze(text).into_iter().collect()
    };
    topic_terms.iter().any(|t| text_terms.contains(t))
}

/// Replaces the first explicit pronoun with `topic`; otherwise appends the
/// topic when the utterance does not already mention it.
pub fn propagate(annotation: &Annotation, topic: &str, analyzer: &Analyzer) -> String {
    let text = &annotation.text;
    if let Some(span) = annotation.pronouns.first() {
        return format!("{}{}{}", &text[..span.start], topic, &text[span.end..]);
    }
    if mentions(analyzer, text, topic) {
        text.clone()
    } else {
        format!("{} {}", text.trim_end(), topic)
    }
}
