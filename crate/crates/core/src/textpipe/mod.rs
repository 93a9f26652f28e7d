//! Tokenization, stopword removal and stemming.
//!
//! The same [`Analyzer`] is used when indexing passages, when turning
//! rewritten utterances into query terms, and when the rewriter checks
//! whether a topic is already present in an utterance.

mod stopwords;
mod tokenize;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use stopwords::{default_stopwords, load_stopwords, parse_stopwords};
pub use tokenize::{tokenize, Token};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StemmerKind {
    None,
    /// English Snowball stemmer (Porter2).
    #[default]
    Porter,
}

impl fmt::Display for StemmerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StemmerKind::None => "none",
            StemmerKind::Porter => "porter",
        })
    }
}

impl std::str::FromStr for StemmerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(StemmerKind::None),
            "porter" => Ok(StemmerKind::Porter),
            other => Err(Error::Config(format!("unknown stemmer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub stopwords: BTreeSet<String>,
    pub stemmer: StemmerKind,
    pub lowercase: bool,
}

impl Default for AnalyzerConfig {
    /// Bundled stopword list, Porter stemming, lowercasing.
    fn default() -> Self {
        AnalyzerConfig {
            stopwords: default_stopwords(),
            stemmer: StemmerKind::Porter,
            lowercase: true,
        }
    }
}

impl AnalyzerConfig {
    /// No stopwords, no stemming.
    pub fn plain() -> Self {
        AnalyzerConfig {
            stopwords: BTreeSet::new(),
            stemmer: StemmerKind::None,
            lowercase: true,
        }
    }

    pub fn with_stopwords_file(mut self, path: &Path) -> Result<Self> {
        self.stopwords = load_stopwords(path)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self
            .stopwords
            .iter()
            .find(|w| w.is_empty() || w.chars().any(|c| c.is_uppercase() || c.is_whitespace()))
        {
            return Err(Error::Config(format!("invalid stopword entry {bad:?}")));
        }
        Ok(())
    }

    /// Stable fingerprint of the configuration, stored in index manifests.
    pub fn fingerprint(&self) -> String {
        let mut hasher = crc32fast::Hasher::new();
        for w in &self.stopwords {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(self.stemmer.to_string().as_bytes());
        hasher.update(if self.lowercase { b"+lc" } else { b"-lc" });
        format!("{:08x}", hasher.finalize())
    }
}

/// A ready-to-use analysis chain built from an [`AnalyzerConfig`].
pub struct Analyzer {
    config: AnalyzerConfig,
    stemmer: Option<rust_stemmers::Stemmer>,
}

impl fmt::Debug for Analyzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Analyzer").field("config", &self.config).finish()
    }
}

impl Clone for Analyzer {
    fn clone(&self) -> Self {
        Analyzer::new(self.config.clone())
    }
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer::new(AnalyzerConfig::default())
    }
}

impl Analyzer {
    pub fn new(config: AnalyzerConfig) -> Self {
        let stemmer = match config.stemmer {
            StemmerKind::None => None,
            StemmerKind::Porter => Some(rust_stemmers::Stemmer::create(rust_stemmers::Algorithm::English)),
        };
        Analyzer { config, stemmer }
    }

    pub fn config(&self) -> &AnalyzerConfig {
        &self.config
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.config.stopwords.contains(word)
    }

    /// tokenize, lowercase, drop stopwords, stem.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        tokenize(text)
            .into_iter()
            .filter_map(|tok| {
                let word = if self.config.lowercase {
                    tok.normalized
                } else {
                    tok.surface
                };
                if self.is_stopword(&word) {
                    return None;
                }
                Some(self.stem(&word))
            })
            .collect()
    }

    pub fn stem(&self, word: &str) -> String {
        match &self.stemmer {
            Some(s) => {
                let stemmed = s.stem(word);
                if stemmed.is_empty() {
                    word.to_string()
                } else {
                    stemmed.into_owned()
                }
            }
            None => word.to_string(),
        }
    }
}

/// Convenience wrapper over [`Analyzer::analyze`].
pub fn analyze(text: &str, cfg: &AnalyzerConfig) -> Vec<String> {
    Analyzer::new(cfg.clone()).analyze(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_stopword_question_is_empty() {
        assert!(analyze("What is it about?", &AnalyzerConfig::default()).is_empty());
    }

    #[test]
    fn porter_stems_plural() {
        let cfg = AnalyzerConfig {
            stopwords: BTreeSet::new(),
            stemmer: StemmerKind::Porter,
            lowercase: true,
        };
        assert_eq!(analyze("tiger sharks", &cfg), vec!["tiger", "shark"]);
    }

    #[test]
    fn identity_up_to_lowercasing() {
        assert_eq!(analyze("X", &AnalyzerConfig::plain()), vec!["x"]);
    }

    #[test]
    fn uppercase_stopword_rejected() {
        let mut cfg = AnalyzerConfig::plain();
        cfg.stopwords.insert("The".into());
        assert!(cfg.validate().is_err());
        assert!(AnalyzerConfig::default().validate().is_ok());
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = AnalyzerConfig::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.stemmer = StemmerKind::None;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    fn text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                "[a-zA-Z]{1,8}",
                Just("the".to_string()),
                Just("it".to_string()),
                Just(",".to_string()),
                Just("-".to_string()),
                Just("?".to_string()),
            ],
            0..12,
        )
        .prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn idempotent_without_stemming(t in text()) {
            let a = Analyzer::new(AnalyzerConfig { stemmer: StemmerKind::None, ..Default::default() });
            let once = a.analyze(&t);
            prop_assert_eq!(a.analyze(&once.join(" ")), once);
        }

        #[test]
        fn fewer_stopwords_never_shrinks_output(t in text(), drop_idx in 0usize..420) {
            let full = AnalyzerConfig::default();
            let mut smaller = full.clone();
            if let Some(w) = full.stopwords.iter().nth(drop_idx % full.stopwords.len()) {
                smaller.stopwords.remove(w);
            }
            prop_assert!(analyze(&t, &smaller).len() >= analyze(&t, &full).len());
        }
    }
}
