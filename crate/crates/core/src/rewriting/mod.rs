//! Conversational utterance rewriting.
//!
//! Building blocks:
//! - first topic: the first subject/object noun chunk of turn 1;
//! - topic shift: a chunk introduced by a cue phrase ("tell me about ...");
//! - explicit propagation: the first pronoun is replaced by the topic;
//! - implicit propagation: the topic is appended when not mentioned;
//! - context propagation: all subject/object chunks seen so far are appended;
//! - coreference: every pronoun is replaced by the nearest preceding chunk.
//!
//! [`Method`] names the combinations, plus the query-concatenation baselines.

mod annotate;
mod conversation;
mod external;
mod topic;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use annotate::{annotate, is_replaceable_pronoun, Annotation, NounChunk, Pos, Role, TaggedToken, PRONOUNS};
pub use conversation::{
    attach_manual, load_conversations, parse_conversations, read_turn_tsv, write_rewrites, Conversation, Turn,
};
pub use external::{load_annotations, CharSpan, ExternalAnnotation, ExternalChunk};
pub use topic::{detect_topic_shift, first_topic, propagate, CueLexicon, DEFAULT_CUES};

use crate::error::{Error, Result};
use crate::textpipe::Analyzer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Plain,
    Manual,
    FirstQuery,
    ContextQuery,
    Coref,
    FirstTopic,
    TopicShift,
    Context,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Plain,
        Method::Manual,
        Method::FirstQuery,
        Method::ContextQuery,
        Method::Coref,
        Method::FirstTopic,
        Method::TopicShift,
        Method::Context,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::Manual => "manual",
            Method::FirstQuery => "first_query",
            Method::ContextQuery => "context_query",
            Method::Coref => "coref",
            Method::FirstTopic => "first_topic",
            Method::TopicShift => "topic_shift",
            Method::Context => "context",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Topic context threaded through the turns of one conversation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteState {
    pub first_topic: Option<String>,
    pub current_topic: Option<String>,
    /// Deduplicated, in first-seen order.
    pub context_chunks: Vec<String>,
}

impl RewriteState {
    fn start(first_topic: Option<String>) -> Self {
        let mut state = RewriteState {
            current_topic: first_topic.clone(),
            first_topic,
            context_chunks: Vec::new(),
        };
        if let Some(t) = state.first_topic.clone() {
            state.remember(&t);
        }
        state
    }

    fn remember(&mut self, chunk: &str) {
        if !self.context_chunks.iter().any(|c| c.eq_ignore_ascii_case(chunk)) {
            self.context_chunks.push(chunk.to_string());
        }
    }
}

/// Rewrites conversations with one of the [`Method`]s.
#[derive(Debug, Clone, Default)]
pub struct Rewriter {
    analyzer: Analyzer,
    cues: CueLexicon,
    annotations: HashMap<String, ExternalAnnotation>,
}

impl Rewriter {
    pub fn new(analyzer: Analyzer, cues: CueLexicon) -> Self {
        Rewriter {
            analyzer,
            cues,
            annotations: HashMap::new(),
        }
    }

    /// Annotations from an external toolkit take precedence over the
    /// built-in tagger for the turns they cover.
    pub fn with_annotations(mut self, annotations: HashMap<String, ExternalAnnotation>) -> Self {
        self.annotations = annotations;
        self
    }

    pub fn annotate_turn(&self, turn: &Turn) -> Result<Annotation> {
        match self.annotations.get(&turn.turn_id) {
            Some(ext) => ext.resolve(&turn.raw),
            None => annotate(&turn.raw),
        }
    }

    /// One `(turn_id, rewritten text)` pair per turn, in turn order.
    pub fn rewrite_conversation(&self, conv: &Conversation, method: Method) -> Result<Vec<(String, String)>> {
        conv.validate()?;
        let texts = match method {
            Method::Plain => conv.turns.iter().map(|t| t.raw.clone()).collect(),
            Method::Manual => conv
                .turns
                .iter()
                .map(|t| t.manual.clone().ok_or_else(|| Error::MissingManual(t.turn_id.clone())))
                .collect::<Result<Vec<_>>>()?,
            Method::FirstQuery => self.concat_queries(conv, false),
            Method::ContextQuery => self.concat_queries(conv, true),
            Method::Coref => self.coref(conv)?,
            Method::FirstTopic | Method::TopicShift | Method::Context => self.topical(conv, method)?,
        };
        Ok(conv.turns.iter().map(|t| t.turn_id.clone()).zip(texts).collect())
    }

    /// Rewrites every conversation, in parallel, keeping input order.
    pub fn rewrite_all(&self, convs: &[Conversation], method: Method) -> Result<Vec<(String, String)>> {
        let per_conv = convs
            .par_iter()
            .map(|c| self.rewrite_conversation(c, method))
            .collect::<Result<Vec<_>>>()?;
        Ok(per_conv.into_iter().flatten().collect())
    }

    fn concat_queries(&self, conv: &Conversation, with_previous: bool) -> Vec<String> {
        let first = &conv.turns[0].raw;
        conv.turns
            .iter()
            .enumerate()
            .map(|(i, t)| match i {
                0 => t.raw.clone(),
                1 => format!("{first} {}", t.raw),
                _ if with_previous => format!("{first} {} {}", conv.turns[i - 1].raw, t.raw),
                _ => format!("{first} {}", t.raw),
            })
            .collect()
    }

    fn coref(&self, conv: &Conversation) -> Result<Vec<String>> {
        let mut history: Option<String> = None;
        let mut out = Vec::with_capacity(conv.turns.len());
        for turn in &conv.turns {
            let ann = self.annotate_turn(turn)?;
            let text = &ann.text;
            let mut rewritten = String::with_capacity(text.len());
            let mut last = 0;
            for span in &ann.pronouns {
                let local = ann
                    .chunks
                    .iter()
                    .rfind(|c| c.span.end <= span.start)
                    .map(|c| ann.chunk_keywords(c).to_string());
                if let Some(antecedent) = local.or_else(|| history.clone()) {
                    rewritten.push_str(&text[last..span.start]);
                    rewritten.push_str(&antecedent);
                    last = span.end;
                }
            }
            rewritten.push_str(&text[last..]);
            if let Some(c) = ann.chunks.last() {
                history = Some(ann.chunk_keywords(c).to_string());
            }
            out.push(rewritten);
        }
        Ok(out)
    }

    fn topical(&self, conv: &Conversation, method: Method) -> Result<Vec<String>> {
        let annotations = conv
            .turns
            .iter()
            .map(|t| self.annotate_turn(t))
            .collect::<Result<Vec<_>>>()?;
        let topic = first_topic(&annotations[0]);
        if topic.is_none() {
            log::warn!(
                "{}",
                Error::TopicExtraction {
                    turn_id: conv.turns[0].turn_id.clone()
                }
            );
        }
        let mut state = RewriteState::start(topic);
        let mut out = Vec::with_capacity(conv.turns.len());
        for ann in &annotations {
            if method != Method::FirstTopic {
                if let Some(shift) = detect_topic_shift(ann, &self.cues) {
                    state.remember(&shift);
                    state.current_topic = Some(shift);
                }
            }
            let text = match method {
                Method::FirstTopic => match &state.first_topic {
                    Some(t) => propagate(ann, t, &self.analyzer),
                    None => ann.text.clone(),
                },
                Method::TopicShift => match &state.current_topic {
                    Some(t) => propagate(ann, t, &self.analyzer),
                    None => ann.text.clone(),
                },
                _ => self.with_context(ann, &state),
            };
            for chunk in ann.keyword_chunks() {
                state.remember(chunk);
            }
            out.push(text);
        }
        Ok(out)
    }

    fn with_context(&self, ann: &Annotation, state: &RewriteState) -> String {
        let missing: Vec<&str> = state
            .context_chunks
            .iter()
            .filter(|c| !self.fully_mentioned(&ann.text, c))
            .map(String::as_str)
            .collect();
        if missing.is_empty() {
            ann.text.clone()
        } else {
            format!("{} {}", ann.text.trim_end(), missing.join(" "))
        }
    }

    fn fully_mentioned(&self, text: &str, chunk: &str) -> bool {
        let have: std::collections::HashSet<String> = self.analyzer.analyze(text).into_iter().collect();
        let need = self.analyzer.analyze(chunk);
        !need.is_empty() && need.iter().all(|t| have.contains(t))
    }

    /// Topic state after processing `conv` with topic-shift maintenance.
    pub fn final_state(&self, conv: &Conversation) -> Result<RewriteState> {
        let annotations = conv
            .turns
            .iter()
            .map(|t| self.annotate_turn(t))
            .collect::<Result<Vec<_>>>()?;
        let mut state = RewriteState::start(annotations.first().and_then(first_topic));
        for ann in &annotations {
            if let Some(shift) = detect_topic_shift(ann, &self.cues) {
                state.remember(&shift);
                state.current_topic = Some(shift);
            }
            for chunk in ann.keyword_chunks() {
                state.remember(chunk);
            }
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn neverending() -> Conversation {
        Conversation::from_utterances(
            "31",
            [
                "Tell me about the Neverending Story film.",
                "What is it about?",
                "What are the main themes?",
            ],
        )
        .unwrap()
    }

    fn texts(r: &Rewriter, c: &Conversation, m: Method) -> Vec<String> {
        r.rewrite_conversation(c, m)
            .unwrap()
            .into_iter()
            .map(|(_, t)| t)
            .collect()
    }

    #[test]
    fn neverending_topic_shift() {
        let r = Rewriter::default();
        assert_eq!(
            texts(&r, &neverending(), Method::TopicShift),
            vec![
                "Tell me about the Neverending Story film.",
                "What is Neverending Story film about?",
                "What are the main themes? Neverending Story film",
            ]
        );
    }

    #[test]
    fn lung_to_throat_cancer() {
        let c = Conversation::from_utterances(
            "7",
            [
                "Tell me about lung cancer.",
                "What are treatment options?",
                "Tell me about throat cancer.",
                "What are the symptoms?",
            ],
        )
        .unwrap();
        let r = Rewriter::default();
        let ts = texts(&r, &c, Method::TopicShift);
        assert_eq!(ts[1], "What are treatment options? lung cancer");
        assert_eq!(ts[2], "Tell me about throat cancer.");
        assert_eq!(ts[3], "What are the symptoms? throat cancer");
        let ft = texts(&r, &c, Method::FirstTopic);
        assert_eq!(ft[3], "What are the symptoms? lung cancer");
        let state = r.final_state(&c).unwrap();
        assert_eq!(state.first_topic.as_deref(), Some("lung cancer"));
        assert_eq!(state.current_topic.as_deref(), Some("throat cancer"));
    }

    #[test]
    fn query_concatenation() {
        let c = Conversation::from_utterances("q", ["A", "B", "C"]).unwrap();
        let r = Rewriter::default();
        assert_eq!(texts(&r, &c, Method::FirstQuery), vec!["A", "A B", "A C"]);
        assert_eq!(texts(&r, &c, Method::ContextQuery), vec!["A", "A B", "A B C"]);
        assert_eq!(texts(&r, &c, Method::Plain), vec!["A", "B", "C"]);
    }

    #[test]
    fn context_accumulates_chunks() {
        let c = Conversation::from_utterances(
            "5",
            [
                "Tell me about tiger sharks.",
                "What is their habitat?",
                "How big do they get?",
            ],
        )
        .unwrap();
        let out = texts(&Rewriter::default(), &c, Method::Context);
        assert_eq!(out[0], "Tell me about tiger sharks.");
        assert_eq!(out[1], "What is their habitat? tiger sharks");
        assert_eq!(out[2], "How big do they get? tiger sharks habitat");
    }

    #[test]
    fn coref_uses_nearest_chunk() {
        let out = texts(&Rewriter::default(), &neverending(), Method::Coref);
        assert_eq!(out[1], "What is Neverending Story film about?");
        assert_eq!(out[2], "What are the main themes?");
        let c = Conversation::from_utterances("9", ["Sharks live near coral reefs.", "Do they eat them?"]).unwrap();
        assert_eq!(
            texts(&Rewriter::default(), &c, Method::Coref)[1],
            "Do coral reefs eat coral reefs?"
        );
    }

    #[test]
    fn manual_requires_text() {
        let mut c = neverending();
        let r = Rewriter::default();
        assert!(matches!(r.rewrite_conversation(&c, Method::Manual), Err(Error::MissingManual(id)) if id == "31_1"));
        for t in &mut c.turns {
            t.manual = Some(format!("manual {}", t.index));
        }
        assert_eq!(texts(&r, &c, Method::Manual)[2], "manual 3");
    }

    #[test]
    fn topic_failure_falls_back_to_plain() {
        let c = Conversation::from_utterances("1", ["What is it about?", "Why?"]).unwrap();
        let r = Rewriter::default();
        assert_eq!(texts(&r, &c, Method::FirstTopic), vec!["What is it about?", "Why?"]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("bert".parse::<Method>(), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn external_annotations_override() {
        let ext: ExternalAnnotation = serde_json::from_str(
            r#"{"turn_id": "31_1", "tokens": ["Tell", "me", "about", "the", "Neverending", "Story", "film"],
                "pos": ["VERB", "PRON", "ADP", "DET", "PROPN", "PROPN", "NOUN"],
                "noun_chunks": [{"start": 18, "end": 35, "role": "object"}], "pronouns": []}"#,
        )
        .unwrap();
        let r = Rewriter::default().with_annotations(HashMap::from([("31_1".to_string(), ext)]));
        assert_eq!(
            texts(&r, &neverending(), Method::FirstTopic)[1],
            "What is Neverending Story about?"
        );
    }

    const SUBJECTS: &[&str] = &[
        "tiger sharks",
        "lung cancer",
        "the Amazon river",
        "coffee beans",
        "volcanoes",
    ];
    const TEMPLATES: &[&str] = &[
        "Tell me about {}.",
        "What is it?",
        "What are the main causes?",
        "How big do they get?",
        "What about {}?",
        "Where do {} live?",
        "Is that dangerous?",
        "What are their symptoms?",
    ];

    fn conversation() -> impl Strategy<Value = Conversation> {
        proptest::collection::vec((0..TEMPLATES.len(), 0..SUBJECTS.len()), 1..9).prop_map(|picks| {
            let utts: Vec<String> = picks
                .into_iter()
                .map(|(t, s)| TEMPLATES[t].replace("{}", SUBJECTS[s]))
                .collect();
            Conversation::from_utterances("p", utts).unwrap()
        })
    }

    proptest! {
        #[test]
        fn causal(c in conversation(), cut in 1usize..9) {
            let r = Rewriter::default();
            let cut = cut.min(c.turns.len());
            for m in Method::ALL.into_iter().filter(|m| *m != Method::Manual) {
                let full = r.rewrite_conversation(&c, m).unwrap();
                let prefix = r.rewrite_conversation(&c.prefix(cut), m).unwrap();
                prop_assert_eq!(&full[..cut], &prefix[..]);
            }
        }

        #[test]
        fn plain_is_identity(c in conversation()) {
            let out = Rewriter::default().rewrite_conversation(&c, Method::Plain).unwrap();
            for (t, (_, text)) in c.turns.iter().zip(out) {
                prop_assert_eq!(&t.raw, &text);
            }
        }

        #[test]
        fn first_topic_always_present(c in conversation()) {
            let r = Rewriter::default();
            let state = r.final_state(&c.prefix(1)).unwrap();
            if let Some(topic) = state.first_topic {
                for (_, text) in r.rewrite_conversation(&c, Method::FirstTopic).unwrap() {
                    prop_assert!(topic::mentions(&r.analyzer, &text, &topic), "{text:?} lacks {topic:?}");
                }
            }
        }

        #[test]
        fn no_content_words_lost(c in conversation()) {
            let r = Rewriter::default();
            for m in [Method::Coref, Method::FirstTopic, Method::TopicShift, Method::Context, Method::FirstQuery, Method::ContextQuery] {
                for (turn, (_, text)) in c.turns.iter().zip(r.rewrite_conversation(&c, m).unwrap()) {
                    let mut have = r.analyzer.analyze(&text);
                    for term in r.analyzer.analyze(&turn.raw) {
                        if is_replaceable_pronoun(&term) {
                            continue;
                        }
                        let pos = have.iter().position(|h| *h == term);
                        prop_assert!(pos.is_some(), "{m}: {term:?} missing from {text:?}");
                        have.swap_remove(pos.unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn topic_shift_without_cues_equals_first_topic() {
        let c = Conversation::from_utterances(
            "2",
            [
                "Coffee beans are roasted.",
                "Where do they grow?",
                "What is the best brewing method?",
            ],
        )
        .unwrap();
        let r = Rewriter::default();
        assert_eq!(texts(&r, &c, Method::TopicShift), texts(&r, &c, Method::FirstTopic));
    }
}
